"""Test keyed reference marks"""
import unittest

import numpy as np

from ssmark.pn import (PnSet, WatermarkKey, complement, correlate, generate,
    keystream, uniform)


class PnTest(unittest.TestCase):

    def test_deterministic(self):
        a = generate(WatermarkKey(42), 4, 1000)
        b = generate(WatermarkKey(42), 4, 1000)
        assert a == b
        assert np.array_equal(keystream(42, 16), keystream(42, 16))
        assert not np.array_equal(keystream(42, 16), keystream(43, 16))

        u = uniform(7, 10000)
        assert u.min() >= 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.02

    def test_entries_and_balance(self):
        for balanced in (True, False):
            pn_set = generate(WatermarkKey(3), 8, 4096, balanced=balanced)
            assert pn_set.n_marks == 8 and pn_set.length == 4096
            assert set(np.unique(pn_set.marks)) == {-1, 1}
            for j in range(pn_set.n_marks):
                assert abs(pn_set[j].mean()) < 0.1

        pn_set = generate(WatermarkKey(3), 3, 7)
        assert np.all(pn_set.marks.sum(axis=1) == 1)

    def test_cross_key_correlation(self):
        a = generate(WatermarkKey(1), 1, 4096)
        b = generate(WatermarkKey(2), 1, 4096)
        assert abs(correlate(a[0], b[0])) < 0.1

    def test_pairwise_correlation(self):
        pn_set = generate(WatermarkKey(20240601), 512, 16384)
        marks = pn_set.as_float()
        gram = marks @ marks.T / pn_set.length
        assert np.allclose(np.diag(gram), 1.0)
        off_diag = gram[~np.eye(pn_set.n_marks, dtype=bool)]
        assert np.max(np.abs(off_diag)) < 0.05

    def test_complement(self):
        pn_set = PnSet([[1, -1, 1]])
        assert np.array_equal(complement(pn_set).marks, [[-1, 1, -1]])

        pn_set = generate(WatermarkKey(5), 3, 256)
        assert complement(complement(pn_set)) == pn_set
        for j in range(3):
            self.assertAlmostEqual(
                correlate(pn_set[j], complement(pn_set)[j]), -1.0)

    def test_correlate(self):
        assert correlate([1, -1, 1, -1], [1, -1, 1, -1]) == 1.0
        assert correlate([1, 1, -1, -1], [1, -1, 1, -1]) == 0.0
        assert correlate([2, 4], [1, -1]) == -1.0
        with self.assertRaises(ValueError):
            correlate([1, 1], [1, 1, 1])
        with self.assertRaises(ValueError):
            correlate([], [])

    def test_key(self):
        key = WatermarkKey(20240601)
        assert key.hint() == WatermarkKey(20240601).hint()
        assert key.hint() != WatermarkKey(20240602).hint()
        assert len(key.family(16)) == len({k.seed for k in key.family(16)})
        assert key.derive(0) == key.derive(0)
        assert key not in key.family(16)

        with self.assertRaises(ValueError):
            WatermarkKey(-1)
        with self.assertRaises(ValueError):
            WatermarkKey(2 ** 64)
        with self.assertRaises(ValueError):
            generate(key, 0, 16)
        with self.assertRaises(ValueError):
            generate(key, 4, 0)


def suite():
    suite = unittest.TestSuite()
    suite.addTest(PnTest("test_deterministic"))
    suite.addTest(PnTest("test_entries_and_balance"))
    suite.addTest(PnTest("test_cross_key_correlation"))
    suite.addTest(PnTest("test_pairwise_correlation"))
    suite.addTest(PnTest("test_complement"))
    suite.addTest(PnTest("test_correlate"))
    suite.addTest(PnTest("test_key"))
    return suite


if __name__ == "__main__":
    runner = unittest.TextTestRunner()
    runner.run(suite())
