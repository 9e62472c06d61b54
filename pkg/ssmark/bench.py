"""Robustness benchmark: BER with and without channel coding under attacks."""
import dataclasses
import os
from typing import Callable, List, Optional, Sequence

import numpy as np

from ssmark.attacks import AttackSpec, apply_attack
from ssmark.coding.convcode import ConvCodeSpec, K7_STANDARD
from ssmark.embedder import (BitMessage, EmbedParams, PipelineHeader,
    blind_gain, decode_and_extract, embed, encode_and_embed, extract)
from ssmark.imaging import BitPlane, GrayImage
from ssmark.metrics import BENCH_COLUMNS, BerReport, ber, psnr, ssim
from ssmark.util import build_logger, write_csv_row


logger = build_logger("ssmark.bench")

# Expected clean BER of the uncoded baseline. Small, so its errors come from
# the host and grow with compression.
RAW_TARGET_BER = 0.012


@dataclasses.dataclass(frozen=True, eq=False)
class BenchSetup:
    """Both watermarked versions of one host, prepared once per sweep.

    `raw_image` carries the uncoded watermark bits at one blind global gain,
    `ecc_image` the Golomb and convolutionally coded ones with compensated
    gains.
    """
    host: GrayImage
    watermark: BitPlane
    raw_message: BitMessage
    raw_image: GrayImage
    ecc_image: GrayImage
    header: PipelineHeader
    raw_alpha: float = float("nan")


def prepare_bench(host: GrayImage, watermark: BitPlane, params: EmbedParams,
                  conv: ConvCodeSpec = K7_STANDARD,
                  raw_target_ber: float = RAW_TARGET_BER) -> BenchSetup:
    raw_message = BitMessage.from_bits(watermark.flat())
    raw_alpha = blind_gain(host, raw_message.n_bits, params, raw_target_ber)
    raw_params = dataclasses.replace(params, gain_mode="uniform",
                                     uniform_alpha=raw_alpha)
    raw_image = embed(host, raw_message, raw_params)
    ecc_image, header = encode_and_embed(host, watermark, params, conv)
    logger.info(f"prepare_bench: raw_alpha={raw_alpha:.4g}, "
                f"coded_len={header.coded_len}")
    return BenchSetup(host, watermark, raw_message, raw_image, ecc_image,
                      header, raw_alpha)


def run_one_bench_case(setup: BenchSetup, attack: AttackSpec,
                       params: EmbedParams,
                       conv: ConvCodeSpec = K7_STANDARD) -> BerReport:
    attacked_raw = apply_attack(setup.raw_image, attack, params.wavelet)
    report = extract(attacked_raw, setup.raw_message.n_bits, params)
    ber_raw = ber(report.symbols, setup.raw_message.symbols)

    attacked_ecc = apply_attack(setup.ecc_image, attack, params.wavelet)
    recovery = decode_and_extract(attacked_ecc, setup.header, params, conv)
    ber_ecc = ber(recovery.plane.flat(), setup.watermark.flat())

    result = BerReport(attack, ber_raw, ber_ecc,
                       psnr(setup.host, attacked_ecc),
                       ssim(setup.host, attacked_ecc))
    logger.info(f"{attack}: ber_raw={ber_raw:.4f}, ber_ecc={ber_ecc:.4f}, "
                f"psnr={result.psnr_db:.2f}, degraded={recovery.degraded}")
    return result


def collect_in_order(refs: Sequence, wait: Callable, fetch: Callable,
                     on_result: Optional[Callable] = None) -> list:
    """Fetch task results as they finish, releasing them in submission order.

    `wait(pending)` returns (ready, still_pending). Each result goes to
    `on_result` once every earlier one has, so a failing task leaves the
    results before it delivered.
    """
    index = {ref: i for i, ref in enumerate(refs)}
    finished = {}
    results = []
    pending = list(refs)
    while pending:
        ready, pending = wait(pending)
        for ref in ready:
            finished[index[ref]] = fetch(ref)
        while len(results) in finished:
            result = finished.pop(len(results))
            results.append(result)
            if on_result is not None:
                on_result(result)
    return results


def run_bench_cases(setup: BenchSetup, attacks: Sequence[AttackSpec],
                    params: EmbedParams, conv: ConvCodeSpec = K7_STANDARD,
                    output_file: Optional[str] = None,
                    parallel: bool = False) -> List[BerReport]:
    """Run every attack point. Rows keep the order of `attacks`.

    The output file is overwritten. Each row is flushed as soon as it and
    all rows before it are computed, so an interrupted sweep keeps its rows.
    """
    fout = None
    if output_file is not None:
        fout = open(output_file, "w")
        fout.write(",".join(BENCH_COLUMNS) + "\n")
        fout.flush()

    def write_row(result):
        if fout is not None:
            write_csv_row(BENCH_COLUMNS, result.as_row(), fout)

    try:
        if parallel:
            import ray
            if not ray.is_initialized():
                ray.init(namespace="ssmark",
                         runtime_env={"working_dir": os.getcwd()})
            run_one_case_ = ray.remote(num_cpus=1)(run_one_bench_case).remote
            setup_ref = ray.put(setup)
            refs = [run_one_case_(setup_ref, attack, params, conv)
                    for attack in attacks]
            results = collect_in_order(
                refs, lambda pending: ray.wait(pending, num_returns=1),
                ray.get, write_row)
        else:
            results = []
            for attack in attacks:
                result = run_one_bench_case(setup, attack, params, conv)
                results.append(result)
                write_row(result)
    finally:
        if fout is not None:
            fout.close()

    return results


def read_bench_csv(filename: str):
    rows = []  # List[dict]

    with open(filename) as f:
        head = f.readline().strip().split(",")
        if tuple(head) != BENCH_COLUMNS:
            raise ValueError(f"{filename}: unexpected columns {head}")
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            attack, strength, ber_raw, ber_ecc, psnr_db, ssim_ = line.split(",")
            rows.append({
                "attack": attack,
                "strength": float(strength),
                "ber_raw": float(ber_raw),
                "ber_ecc": float(ber_ecc),
                "psnr_db": float(psnr_db),
                "ssim": float(ssim_),
            })

    return rows


def summarize(results: Sequence[BerReport]):
    """Mean BER with and without coding over a sweep."""
    if not results:
        return {"ber_raw": float("nan"), "ber_ecc": float("nan")}
    return {
        "ber_raw": float(np.mean([r.ber_raw for r in results])),
        "ber_ecc": float(np.mean([r.ber_ecc for r in results])),
    }
