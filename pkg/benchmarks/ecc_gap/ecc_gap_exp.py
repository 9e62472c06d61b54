"""BER with and without channel coding over attack sweeps, one CSV per run."""
import argparse
import dataclasses

from ssmark.attacks import AttackSpec
from ssmark.bench import prepare_bench, run_bench_cases, summarize
from ssmark.config import load_config
from ssmark.testdata import TEST_IMAGES, load_test_image, load_test_watermark
from ssmark.util import setup_logging

from benchmarks.ecc_gap.suite import ecc_gap_suite


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--suite", type=str, default="boat",
                        choices=list(ecc_gap_suite.keys()))
    parser.add_argument("--config", type=str)
    parser.add_argument("--output", type=str, default="res_ecc_gap")
    parser.add_argument("--parallel", action="store_true")
    parser.add_argument("--verbose", "-v", action="count", default=1)
    args = parser.parse_args()
    setup_logging(args.verbose)

    suite = ecc_gap_suite[args.suite]
    config = load_config(args.config)
    attacks = ([AttackSpec("quantize", float(qf)) for qf in suite.qf_list] +
               [AttackSpec("awgn", float(sigma), suite.noise_seed)
                for sigma in suite.sigma_list])
    hosts = list(TEST_IMAGES) if suite.host == "all" else [suite.host]
    watermark = load_test_watermark(suite.watermark)

    for host_name in hosts:
        host = load_test_image(host_name)
        for tau in suite.tau_list:
            params = dataclasses.replace(config.embed_params(), tau=tau)
            output_file = f"{args.output}_{host_name}_tau{tau:g}.csv"

            setup = prepare_bench(host, watermark, params, config.conv_spec(),
                                  config.raw_target_ber)
            results = run_bench_cases(setup, attacks, params, config.conv_spec(),
                                      output_file=output_file,
                                      parallel=args.parallel)
            summary = summarize(results)
            print(f"{host_name} tau={tau:g}: ber_raw={summary['ber_raw']:.4f}, "
                  f"ber_ecc={summary['ber_ecc']:.4f} -> {output_file}")
