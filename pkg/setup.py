from setuptools import setup, find_packages

install_requires = [
    "numpy",
    "numba",
    "scipy",
    "PyWavelets",
    "matplotlib",
]

setup(name="ssmark",
      install_requires=install_requires,
      extras_require={"parallel": ["ray"]},
      entry_points={"console_scripts": ["ssmark = ssmark.cli:main"]},
      packages=find_packages(include=["ssmark", "ssmark.*"]))
