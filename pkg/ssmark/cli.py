"""Command line front end: ssmark embed|extract|attack|bench."""
import argparse
import json
import os
import sys

from ssmark.attacks import AttackSpec, apply_attack
from ssmark.bench import prepare_bench, run_bench_cases, summarize
from ssmark.coding.convcode import FramingError, conv_encode
from ssmark.coding.golomb import (CorruptStreamError, TruncatedStreamError,
    encode_bitmap)
from ssmark.config import PROFILES, load_config
from ssmark.embedder import (CapacityError, GainSolveError, PipelineHeader,
    decode_and_extract, encode_and_embed)
from ssmark.imaging import (NetpbmFormatError, load_pgm, read_pbm, read_pgm,
    save_pgm, write_pbm, write_pgm)
from ssmark.metrics import ber, psnr, ssim
from ssmark.util import (EXIT_BAD_PARAMS, EXIT_CAPACITY, EXIT_DECODE_FAILURE,
    EXIT_GAIN_SOLVE, EXIT_IO, EXIT_OK, setup_logging)
from ssmark.wavelet import DimensionError


def _config_from_args(args):
    return load_config(args.config, args.profile, key=args.key, tau=args.tau,
                       msk_max=args.msk_max, wavelet=args.wavelet,
                       conv_code=args.conv_code)


def _print_json(obj):
    print(json.dumps(obj), flush=True)


def cmd_embed(args):
    config = _config_from_args(args)
    host = read_pgm(args.host)
    watermark = read_pbm(args.watermark)

    watermarked, header = encode_and_embed(
        host, watermark, config.embed_params(), config.conv_spec())
    write_pgm(args.out, watermarked)
    header_path = args.header or os.path.splitext(args.out)[0] + ".json"
    with open(header_path, "w") as f:
        f.write(header.to_json() + "\n")

    # Fidelity of the image as stored, after rounding to bytes.
    stored = load_pgm(save_pgm(watermarked))
    _print_json({"psnr_db": psnr(host, stored), "ssim": ssim(host, stored),
                 "coded_len": header.coded_len, "verified": header.verified})
    return EXIT_OK


def cmd_extract(args):
    config = _config_from_args(args)
    image = read_pgm(args.image)
    with open(args.header) as f:
        header = PipelineHeader.from_json(f.read())

    recovery = decode_and_extract(image, header, config.embed_params(),
                                  config.conv_spec())
    write_pbm(args.out, recovery.plane)

    report = {"degraded": recovery.degraded, "corrected": recovery.corrected}
    if args.reference:
        reference = read_pbm(args.reference)
        coded = conv_encode(encode_bitmap(reference), config.conv_spec())
        if coded.bits.length == header.coded_len:
            report["ber_raw"] = ber(recovery.report.bits(), coded.bits.bits)
        if reference.bits.shape == recovery.plane.bits.shape:
            report["ber_ecc"] = ber(recovery.plane.flat(), reference.flat())
    _print_json(report)

    if recovery.degraded:
        print(f"ssmark: watermark decoding failed, best-effort bitmap "
              f"written to {args.out}", file=sys.stderr)
        return EXIT_DECODE_FAILURE
    return EXIT_OK


def cmd_attack(args):
    config = _config_from_args(args)
    image = read_pgm(args.image)
    attack = AttackSpec(args.kind, args.strength, args.seed)
    attacked = apply_attack(image, attack, config.wavelet_spec())
    write_pgm(args.out, attacked)
    _print_json({"psnr_db": psnr(image, attacked), "ssim": ssim(image, attacked)})
    return EXIT_OK


def cmd_bench(args):
    config = _config_from_args(args)
    attacks = config.attack_specs()
    params = config.embed_params()
    setup = None
    if attacks:
        setup = prepare_bench(read_pgm(args.host), read_pbm(args.watermark),
                              params, config.conv_spec(),
                              config.raw_target_ber)
    results = run_bench_cases(setup, attacks, params, config.conv_spec(),
                              output_file=args.out, parallel=args.parallel)
    _print_json({"rows": len(results), **summarize(results)})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ssmark")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="JSON config file")
    common.add_argument("--profile", type=str, default="defaults",
                        choices=sorted(PROFILES))
    common.add_argument("--key", type=int, help="Override the key seed")
    common.add_argument("--tau", type=float)
    common.add_argument("--msk-max", type=float)
    common.add_argument("--wavelet", type=str)
    common.add_argument("--conv-code", type=str)
    common.add_argument("--verbose", "-v", action="count", default=0)
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("embed", parents=[common],
                              help="Embed a PBM watermark into a PGM host")
    p.add_argument("host", type=str)
    p.add_argument("watermark", type=str)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--header", type=str,
                   help="Pipeline header path (default: <out>.json)")
    p.set_defaults(func=cmd_embed)

    p = subparsers.add_parser("extract", parents=[common],
                              help="Recover the watermark from a PGM image")
    p.add_argument("image", type=str)
    p.add_argument("header", type=str)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--reference", type=str,
                   help="Original watermark PBM to report BER against")
    p.set_defaults(func=cmd_extract)

    p = subparsers.add_parser("attack", parents=[common],
                              help="Apply a distortion to a PGM image")
    p.add_argument("image", type=str)
    p.add_argument("--kind", type=str, required=True, choices=["awgn", "quantize"])
    p.add_argument("--strength", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_attack)

    p = subparsers.add_parser("bench", parents=[common],
                              help="BER with and without ECC per attack")
    p.add_argument("host", type=str)
    p.add_argument("watermark", type=str)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    try:
        return args.func(args)
    except (OSError, NetpbmFormatError) as e:
        status, kind, msg = EXIT_IO, "I/O error", e
    except CapacityError as e:
        status, kind, msg = EXIT_CAPACITY, "capacity error", e
    except GainSolveError as e:
        status, kind, msg = EXIT_GAIN_SOLVE, "gain solve failed", e
    except (CorruptStreamError, TruncatedStreamError, FramingError) as e:
        status, kind, msg = EXIT_DECODE_FAILURE, "decode failure", e
    except (ValueError, DimensionError) as e:
        status, kind, msg = EXIT_BAD_PARAMS, "invalid parameters", e
    print(f"ssmark: {kind}: {msg}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
