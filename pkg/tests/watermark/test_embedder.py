"""Test embedding, blind extraction and the coded pipeline"""
import dataclasses
import threading
import time
import unittest

import numpy as np

from ssmark.attacks import apply_awgn, apply_quantize
from ssmark.coding.convcode import FramingError, K3_TEST, K7_STANDARD
from ssmark.config import RunConfig
from ssmark.embedder import (BitMessage, CapacityError, EmbedParams,
    GAIN_FLOOR, GainSolveError, Layout, MarginError, PipelineHeader,
    blind_gain, clear_context_cache, compute_gains, decode_and_extract,
    decompose_response, detection_response, embed, embed_with_gains,
    encode_and_embed, extract, host_context, message_ber, plan_layout,
    reference_marks, solve_gains)
from ssmark.imaging import GrayImage
from ssmark.metrics import psnr, ssim
from ssmark.pn import WatermarkKey, uniform
from ssmark.testdata import TEST_IMAGES, load_test_image, load_test_watermark
from ssmark.wavelet import (DB2, HAAR, DimensionError, SubbandSet, inverse,
    perceptual_mask)


def random_message(seed, n_bits):
    return BitMessage.from_bits(uniform(seed, n_bits) < 0.5)


class EmbedderTest(unittest.TestCase):

    def test_plan_layout(self):
        layout = plan_layout((256, 256), 1)
        assert layout.mark_length == 16384 and layout.band_shape == (128, 128)
        assert plan_layout((256, 256), 404).n_bits == 404
        assert plan_layout((256, 256), 1024).n_bits == 1024

        with self.assertRaises(CapacityError):
            plan_layout((256, 256), 1025)
        with self.assertRaises(CapacityError):
            plan_layout((32, 32), 404)
        with self.assertRaises(DimensionError):
            plan_layout((255, 256), 4)
        with self.assertRaises(ValueError):
            plan_layout((256, 256), 0)

    def test_message(self):
        message = BitMessage.from_bits([1, 0, 0, 1])
        assert list(message.symbols) == [1, -1, -1, 1]
        assert list(message.bits()) == [1, 0, 0, 1]
        with self.assertRaises(ValueError):
            BitMessage([1, 0, -1])

    def test_detection_response(self):
        params = EmbedParams(key=WatermarkKey(9))
        layout = Layout(64, 64, 4)

        response = detection_response(GrayImage(np.zeros((64, 64))), params, layout)
        assert response.shape == (4,) and not response.any()

        # An image whose LL band is exactly P_1 and whose other bands vanish.
        marks = reference_marks(params.key, 4, layout.mark_length).as_float()
        zeros = np.zeros(layout.band_shape)
        img = inverse(SubbandSet(marks[0].reshape(layout.band_shape),
                                 zeros, zeros, zeros), params.wavelet)
        response = detection_response(img, params, layout)
        self.assertAlmostEqual(response[0], 0.5, places=9)
        assert np.all(np.abs(response[1:]) < 0.1)

        rng = np.random.default_rng(0)
        x = GrayImage(rng.uniform(0, 255, size=(64, 64)))
        y = GrayImage(rng.uniform(0, 255, size=(64, 64)))
        combined = GrayImage(2 * x.data + 3 * y.data)
        assert np.allclose(detection_response(combined, params, layout),
                           2 * detection_response(x, params, layout) +
                           3 * detection_response(y, params, layout), atol=1e-9)

        with self.assertRaises(DimensionError):
            detection_response(GrayImage(np.zeros((32, 64))), params, layout)

    def test_solve_gains_identity(self):
        params = EmbedParams(key=WatermarkKey(1), tau=0.2)
        message = random_message(3, 8)
        gains = solve_gains(np.eye(8), np.zeros(8), message, params)
        assert np.allclose(gains.alphas, 0.2)
        assert gains.floored == 0 and not gains.clamped
        self.assertAlmostEqual(gains.margin, 0.2)

    def test_solve_gains_toy(self):
        params = EmbedParams(key=WatermarkKey(1), tau=0.15)
        G = np.array([[1.0, 0.2], [0.1, 0.8]])
        h = np.array([0.05, -0.02])
        message = BitMessage([1, -1])
        gains = solve_gains(G, h, message, params)

        x = np.linalg.solve(G, 0.15 * message.symbols - h)
        assert np.allclose(gains.alphas, x * message.symbols)
        assert np.allclose(gains.alphas, [0.106 / 0.78, 0.14 / 0.78])
        assert np.allclose(h + G @ (gains.alphas * message.symbols),
                           [0.15, -0.15])

    def test_solve_gains_repair(self):
        params = EmbedParams(key=WatermarkKey(1), tau=0.15)
        message = BitMessage([1, 1])

        # The host already carries bit 1 far beyond the margin.
        gains = solve_gains(np.eye(2), np.array([0.5, 0.0]), message, params)
        assert gains.alphas[0] == GAIN_FLOOR
        self.assertAlmostEqual(gains.alphas[1], 0.15)
        assert gains.floored == 1 and gains.passes == 2
        assert gains.margin >= 0.075

        # Bit 0 would need a gain of 100.15; max_gain cannot reach tau / 2.
        with self.assertRaises(MarginError):
            solve_gains(np.eye(2), np.array([-100.0, 0.0]), message, params)

        # Clamped at 1.1 instead of 1.15 but still past tau / 2.
        params = EmbedParams(key=WatermarkKey(1), tau=0.15, max_gain=1.1,
                             uniform_alpha=1.0)
        gains = solve_gains(np.eye(2), np.array([-1.0, 0.0]), message, params)
        assert gains.clamped and gains.alphas[0] == params.max_gain
        self.assertAlmostEqual(gains.margin, 0.1)
        assert not gains.short

    def test_singular_host(self):
        flat = GrayImage(np.full((64, 64), 128.0))
        for wavelet in (HAAR, DB2):
            params = EmbedParams(key=WatermarkKey(1), wavelet=wavelet)
            with self.assertRaises(GainSolveError):
                embed(flat, random_message(1, 4), params)
            with self.assertRaises(GainSolveError):
                embed_with_gains(flat, random_message(2, 16), params)

        # A textured host with gains capped far below what it needs.
        host = load_test_image("boat", size=64)
        params = EmbedParams(key=WatermarkKey(1), max_gain=1e-4,
                             uniform_alpha=1e-4)
        with self.assertRaises(MarginError):
            embed(host, random_message(3, 16), params)

    def test_concurrent_embeds(self):
        hosts = [load_test_image(name, size=64) for name in TEST_IMAGES]
        params = EmbedParams(key=WatermarkKey(21))
        message = random_message(4, 16)
        clear_context_cache()
        expected = [embed(host, message, params).data for host in hosts]

        errors = []
        def worker(offset):
            try:
                for i in range(30):
                    k = (i + offset) % len(hosts)
                    out = embed(hosts[k], message, params)
                    assert np.array_equal(out.data, expected[k])
            except Exception as e:  # pylint: disable=broad-except
                errors.append(e)

        threads = [threading.Thread(target=worker, args=(j,)) for j in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors, errors

    def test_blind_gain(self):
        host = load_test_image("boat")
        params = EmbedParams(key=WatermarkKey(20240601), gain_mode="uniform")
        message = random_message(11, 256)
        alphas = [blind_gain(host, 256, params, t) for t in (0.2, 0.05, 0.01)]
        assert 0 < alphas[0] < alphas[1] < alphas[2]

        params = dataclasses.replace(params, uniform_alpha=alphas[1])
        watermarked = embed(host, message, params)
        assert 0.01 <= message_ber(extract(watermarked, 256, params),
                                   message) <= 0.12

        with self.assertRaises(ValueError):
            blind_gain(host, 256, params, 0.5)

    def test_embedding_efficiency(self):
        tic = time.time()
        for key_seed in range(1, 6):
            params = EmbedParams(key=WatermarkKey(key_seed))
            for name in TEST_IMAGES:
                host = load_test_image(name)
                for msg_seed in range(20):
                    message = random_message(1000 * key_seed + msg_seed, 404)
                    watermarked = embed(host, message, params)
                    report = extract(watermarked, 404, params)
                    assert message_ber(report, message) == 0.0, (name, key_seed)
                    assert report.margin(message) >= params.tau / 2 - 1e-9
        print(f"embedding efficiency: {time.time() - tic:.2f} s")

    def test_compute_gains_matches_cache(self):
        host = load_test_image("portrait", size=64)
        params = EmbedParams(key=WatermarkKey(4))
        message = random_message(8, 16)
        layout = plan_layout(host.shape, 16)

        mask = perceptual_mask(host, params.wavelet, params.msk_max)
        direct = compute_gains(host, mask, message, params, layout)
        cached = host_context(host, params, layout).gains(message, params)
        assert np.allclose(direct.alphas, cached.alphas)

    def test_fidelity(self):
        params = RunConfig().embed_params()
        glyph = load_test_watermark("glyph")
        message = random_message(42, 404)
        for name in TEST_IMAGES:
            host = load_test_image(name)
            for watermarked in (embed(host, message, params),
                                encode_and_embed(host, glyph, params)[0]):
                value = psnr(host, watermarked)
                assert value >= 34, (name, value)
                value = ssim(host, watermarked)
                assert value >= 0.95, (name, value)

    def test_robustness(self):
        host = load_test_image("boat")
        params = EmbedParams(key=WatermarkKey(12))
        message = random_message(6, 256)
        watermarked = embed(host, message, params)

        noisy = apply_awgn(watermarked, 1.0, seed=3)
        assert message_ber(extract(noisy, 256, params), message) == 0.0

        wrong = [WatermarkKey(12).derive(i) for i in range(16)]
        for key in wrong:
            report = extract(watermarked, 256, params.with_key(key))
            assert 0.35 <= message_ber(report, message) <= 0.65

    def test_tau_sweep(self):
        host = load_test_image("texture")
        message = random_message(9, 256)
        bers = []
        for tau in (0.1, 0.15, 0.3):
            params = EmbedParams(key=WatermarkKey(13), tau=tau)
            attacked = apply_awgn(embed(host, message, params), 20.0, seed=5)
            bers.append(message_ber(extract(attacked, 256, params), message))
        assert bers[0] >= bers[1] >= bers[2], bers

    def test_uniform_gains_and_decomposition(self):
        host = load_test_image("boat", size=128)
        message = random_message(10, 64)
        for mode in ("compensated", "uniform"):
            params = EmbedParams(key=WatermarkKey(5), gain_mode=mode)
            watermarked, gains = embed_with_gains(host, message, params)
            if mode == "uniform":
                assert np.all(gains.alphas == params.uniform_alpha)

            parts = decompose_response(host, message, gains, params)
            report = extract(watermarked, 64, params)
            assert np.allclose(parts.total, report.decisions, atol=1e-9)
            assert np.all(parts.own * message.symbols > 0)

        with self.assertRaises(ValueError):
            EmbedParams(key=WatermarkKey(5), tau=0.0)
        with self.assertRaises(ValueError):
            EmbedParams(key=WatermarkKey(5), gain_mode="blind")

    def test_pipeline(self):
        host = load_test_image("boat")
        glyph = load_test_watermark("glyph")
        params = EmbedParams(key=WatermarkKey(20240601))

        watermarked, header = encode_and_embed(host, glyph, params)
        assert header.verified
        assert (header.wm_w, header.wm_h, header.golomb_m) == (16, 16, 3)
        assert header.src_len < 256
        assert header.coded_len == K7_STANDARD.coded_length(header.src_len)
        assert 300 <= header.coded_len <= 520
        assert header.key_hint == params.key.hint()

        recovery = decode_and_extract(watermarked, header, params)
        assert recovery.plane == glyph
        assert not recovery.degraded and recovery.corrected == 0

        mild = apply_quantize(watermarked, 100)
        assert decode_and_extract(mild, header, params).plane == glyph

        severe = apply_quantize(watermarked, 5)
        recovery = decode_and_extract(severe, header, params)
        assert recovery.plane.width == 16 and recovery.plane.height == 16

        recovery = decode_and_extract(watermarked, header,
                                      params.with_key(WatermarkKey(1)))
        assert recovery.degraded

        with self.assertRaises(FramingError):
            decode_and_extract(watermarked, header, params, K3_TEST)

    def test_pipeline_blank(self):
        host = load_test_image("portrait")
        params = EmbedParams(key=WatermarkKey(3))
        blank = load_test_watermark("blank")
        watermarked, header = encode_and_embed(host, blank, params, K3_TEST)
        assert header.src_len == 17
        assert header.coded_len == 2 * (17 + 2)
        assert decode_and_extract(watermarked, header, params, K3_TEST,
                                  strict=True).plane == blank

    def test_header_json(self):
        header = PipelineHeader(16, 16, 3, 191, 394, "abcd1234", verified=True)
        obj = header.to_dict()
        assert sorted(obj) == sorted(PipelineHeader.FIELDS)
        assert "verified" not in obj
        assert PipelineHeader.from_json(header.to_json()) == header

        with self.assertRaises(ValueError):
            PipelineHeader.from_dict({"wm_w": 16})


def suite():
    suite = unittest.TestSuite()
    suite.addTest(EmbedderTest("test_plan_layout"))
    suite.addTest(EmbedderTest("test_message"))
    suite.addTest(EmbedderTest("test_detection_response"))
    suite.addTest(EmbedderTest("test_solve_gains_identity"))
    suite.addTest(EmbedderTest("test_solve_gains_toy"))
    suite.addTest(EmbedderTest("test_solve_gains_repair"))
    suite.addTest(EmbedderTest("test_singular_host"))
    suite.addTest(EmbedderTest("test_concurrent_embeds"))
    suite.addTest(EmbedderTest("test_blind_gain"))
    suite.addTest(EmbedderTest("test_embedding_efficiency"))
    suite.addTest(EmbedderTest("test_compute_gains_matches_cache"))
    suite.addTest(EmbedderTest("test_fidelity"))
    suite.addTest(EmbedderTest("test_robustness"))
    suite.addTest(EmbedderTest("test_tau_sweep"))
    suite.addTest(EmbedderTest("test_uniform_gains_and_decomposition"))
    suite.addTest(EmbedderTest("test_pipeline"))
    suite.addTest(EmbedderTest("test_pipeline_blank"))
    suite.addTest(EmbedderTest("test_header_json"))
    return suite


if __name__ == "__main__":
    runner = unittest.TextTestRunner()
    runner.run(suite())
