"""Test the distortion channel"""
import unittest

import numpy as np

from ssmark.attacks import (AttackSpec, apply_attack, apply_awgn,
    apply_quantize, dead_zone_quantize, gaussian_noise, quantizer_step)
from ssmark.imaging import GrayImage
from ssmark.metrics import psnr
from ssmark.testdata import load_test_image
from ssmark.wavelet import DB2, forward


class AttacksTest(unittest.TestCase):

    def test_gaussian_noise(self):
        z = gaussian_noise(11, 100001)
        assert z.size == 100001
        assert abs(z.mean()) < 0.02
        assert abs(z.std() - 1) < 0.02
        assert np.array_equal(gaussian_noise(11, 10), gaussian_noise(11, 10))

    def test_awgn(self):
        img = load_test_image("boat")
        assert apply_awgn(img, 0.0) is img

        a = apply_awgn(img, 5.0, seed=3)
        b = apply_awgn(img, 5.0, seed=3)
        assert a == b
        assert a != apply_awgn(img, 5.0, seed=4)
        assert 4.9 <= np.std(a.data - img.data) <= 5.1

        with self.assertRaises(ValueError):
            apply_awgn(img, -1.0)

    def test_quantizer_step(self):
        assert quantizer_step(100) == 0.5
        assert quantizer_step(50) == 32.5
        steps = [quantizer_step(qf) for qf in (100, 75, 50, 35, 25, 5)]
        assert all(x < y for x, y in zip(steps, steps[1:]))
        for qf in (0, -5, 101):
            with self.assertRaises(ValueError):
                quantizer_step(qf)

    def test_dead_zone(self):
        coeffs = np.array([-7.9, -2.0, -0.4, 0.0, 0.9, 1.0, 3.5])
        q = dead_zone_quantize(coeffs, 2.0)
        assert np.allclose(q, [-7.0, -3.0, 0.0, 0.0, 0.0, 0.0, 3.0])
        assert np.array_equal(dead_zone_quantize(q, 2.0), q)

    def test_quantize(self):
        img = load_test_image("boat")
        mild = apply_quantize(img, 100)
        diff = np.abs(mild.data - img.data)
        assert diff.max() > 0
        assert psnr(img, mild) > 40

        values = [psnr(img, apply_quantize(img, qf)) for qf in (100, 75, 50, 25)]
        assert all(x > y for x, y in zip(values, values[1:])), values

        for qf in (100, 50, 5):
            once = apply_quantize(img, qf)
            twice = apply_quantize(once, qf)
            assert np.max(np.abs(twice.data - once.data)) < 1e-9

        with self.assertRaises(ValueError):
            apply_quantize(img, 120)

    def test_quantize_zeroes_small_details(self):
        rng = np.random.default_rng(0)
        img = GrayImage(128 + rng.normal(0, 2, size=(32, 32)))
        bands = forward(apply_quantize(img, 5), DB2)
        assert not np.any(np.abs(bands.HH) > 1e-9)

    def test_attack_spec(self):
        spec = AttackSpec.from_list(["quantize", 75])
        assert spec == AttackSpec("quantize", 75.0, 0)
        assert spec.to_list() == ["quantize", 75.0, 0]
        assert str(AttackSpec("awgn", 2.0, 7)) == "awgn(sigma=2, seed=7)"

        img = load_test_image("texture", size=64)
        assert apply_attack(img, spec) == apply_quantize(img, 75)
        assert apply_attack(img, AttackSpec("awgn", 1.0, 7)) == apply_awgn(img, 1.0, 7)

        with self.assertRaises(ValueError):
            AttackSpec("jpeg", 50)
        with self.assertRaises(ValueError):
            AttackSpec("awgn", -2)
        with self.assertRaises(ValueError):
            AttackSpec("quantize", 0)


def suite():
    suite = unittest.TestSuite()
    suite.addTest(AttacksTest("test_gaussian_noise"))
    suite.addTest(AttacksTest("test_awgn"))
    suite.addTest(AttacksTest("test_quantizer_step"))
    suite.addTest(AttacksTest("test_dead_zone"))
    suite.addTest(AttacksTest("test_quantize"))
    suite.addTest(AttacksTest("test_quantize_zeroes_small_details"))
    suite.addTest(AttacksTest("test_attack_spec"))
    return suite


if __name__ == "__main__":
    runner = unittest.TextTestRunner()
    runner.run(suite())
