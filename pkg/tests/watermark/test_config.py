"""Test run configuration and profiles"""
import json
import os
import tempfile
import unittest

from ssmark.attacks import AttackSpec
from ssmark.coding.convcode import K3_TEST, K7_STANDARD
from ssmark.config import PROFILES, QF_SWEEP, RunConfig, load_config
from ssmark.pn import WatermarkKey

DEFAULTS_FILE = os.path.join(os.path.dirname(__file__), "..", "..", "configs",
                             "defaults.json")


class ConfigTest(unittest.TestCase):

    def test_defaults(self):
        config = RunConfig()
        params = config.embed_params()
        assert params.key == WatermarkKey(20240601)
        assert params.tau == 0.06 and params.msk_max == 8.0
        assert params.ll_share == 0.95 and config.raw_target_ber == 0.012
        assert params.wavelet.family == "db2"
        assert config.conv_spec() is K7_STANDARD
        assert [a.strength for a in config.attack_specs()] == list(QF_SWEEP)

    def test_json_roundtrip(self):
        config = RunConfig(tau=0.2, attacks=[["awgn", 2, 7]])
        text = config.to_json()
        assert RunConfig.from_json(text).to_json() == text
        assert RunConfig.from_json(text) == config
        assert config.attack_specs() == [AttackSpec("awgn", 2.0, 7)]

    def test_shipped_defaults(self):
        with open(DEFAULTS_FILE) as f:
            text = f.read()
        assert text.rstrip("\n") == RunConfig().to_json()
        assert load_config(DEFAULTS_FILE) == RunConfig()

    def test_load_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.json")
            with open(path, "w") as f:
                json.dump({"tau": 0.3, "conv_code": "k3_test"}, f)

            config = load_config(path)
            assert config.tau == 0.3 and config.conv_spec() is K3_TEST

            config = load_config(path, tau=0.25, key=None)
            assert config.tau == 0.25 and config.key == 20240601

        config = load_config(profile="qf_sweep")
        assert len(config.attacks) == len(PROFILES["qf_sweep"]["attacks"])
        assert config.attack_specs()[-1] == AttackSpec("awgn", 5.0, 7)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            RunConfig.from_dict({"gain": 1.0})
        with self.assertRaises(ValueError):
            RunConfig(wavelet="sym4")
        with self.assertRaises(ValueError):
            RunConfig(conv_code="k9")
        with self.assertRaises(ValueError):
            RunConfig(tau=-0.1)
        with self.assertRaises(ValueError):
            RunConfig(ll_share=0.0)
        with self.assertRaises(ValueError):
            RunConfig(raw_target_ber=0.5)
        with self.assertRaises(ValueError):
            RunConfig(attacks=[["quantize", 0, 0]])
        with self.assertRaises(ValueError):
            load_config(profile="fast")


def suite():
    suite = unittest.TestSuite()
    suite.addTest(ConfigTest("test_defaults"))
    suite.addTest(ConfigTest("test_json_roundtrip"))
    suite.addTest(ConfigTest("test_shipped_defaults"))
    suite.addTest(ConfigTest("test_load_config"))
    suite.addTest(ConfigTest("test_invalid"))
    return suite


if __name__ == "__main__":
    runner = unittest.TextTestRunner()
    runner.run(suite())
