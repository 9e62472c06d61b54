from collections import namedtuple

from ssmark.config import QF_SWEEP


SweepConfig = namedtuple(
    "SweepConfig",
    [
     "host", "watermark", # inputs
     "qf_list", "sigma_list", "noise_seed", # attacks
     "tau_list", # embedder
    ]
)

ecc_gap_suite = {
    "boat": SweepConfig(
        host = "boat",
        watermark = "glyph",
        qf_list = list(QF_SWEEP),
        sigma_list = [],
        noise_seed = 7,
        tau_list = [0.06],
    ),
    "all_hosts_noise": SweepConfig(
        host = "all",
        watermark = "glyph",
        qf_list = [],
        sigma_list = [1, 2, 5, 10, 20],
        noise_seed = 7,
        tau_list = [0.06],
    ),
    "tau": SweepConfig(
        host = "boat",
        watermark = "glyph",
        qf_list = [75, 50, 35],
        sigma_list = [10],
        noise_seed = 7,
        tau_list = [0.03, 0.06, 0.1, 0.15],
    ),
    "debug": SweepConfig(
        host = "texture",
        watermark = "blank",
        qf_list = [100, 5],
        sigma_list = [],
        noise_seed = 7,
        tau_list = [0.06],
    ),
}
