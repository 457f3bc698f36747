"""
Command-line front-end.

    python -m src.cli extract --config desk.ini
    python -m src.cli test --config desk.ini --set voting=off
    python -m src.cli protocol-logo --config desk.ini --seed 7
    python -m src.cli split-manifest data/images/manifest.csv --test-fraction 0.25

Every stage prints one key=value summary line on stdout; logs go to stderr.
Exit codes: 0 success, 1 fatal error or bad usage, 2 partial extraction failure.
"""

from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from src.bsif import (
    DEFAULT_BIT_DEPTH,
    FILTER_SIZES,
    convert_mat_filters,
    filter_file_name,
    save_filter_bank,
    synthesize_filter_bank,
)
from src.errors import PadError
from src.observability import setup_otel, shutdown_otel
from src.pipeline import (
    load_manifest,
    parse_config,
    run_enabled_modes,
    run_extraction,
    run_protocol_8020,
    run_protocol_logo,
    run_testing,
    run_training,
    show_config,
    split_manifest,
    write_manifest,
)
from src.pipeline.config import SECTIONS, render_value

from .synthetic import DEFAULT_HEIGHT, DEFAULT_WIDTH, gen_synthetic

logger = logging.getLogger(__name__)

SERVICE_NAME = "tcl-detection"
MODES = ("extract_features", "train_models", "test_images")


class UsageParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def config_keys_help() -> str:
    lines = ["configuration keys (section.key = default):"]
    for section, model in SECTIONS.items():
        for name, value in model().model_dump().items():
            lines.append(f"  {section}.{name} = {render_value(value)}")
    lines.append("aliases: voting = ensemble.majority_voting, n = bsif.bit_depth; lists accept 2^k tokens")
    return "\n".join(lines)


def _only_mode(mode: str) -> List[str]:
    return [f"modes.{m}={'on' if m == mode else 'off'}" for m in MODES]


def _load_config(args, mode: Optional[str] = None):
    overrides = list(args.overrides or [])
    if mode is not None:
        overrides += _only_mode(mode)
    cfg = parse_config(args.config, overrides=overrides, seed=args.seed)
    setup_otel(SERVICE_NAME, cfg.runtime.otel_endpoint)
    return cfg


def _report(summaries) -> int:
    code = 0
    for summary in summaries:
        for line in summary.details():
            print(line)
        print(summary.summary_line())
        code = max(code, summary.exit_code)
    return code


def cmd_extract(args) -> int:
    return _report([run_extraction(_load_config(args, "extract_features"))])


def cmd_train(args) -> int:
    return _report([run_training(_load_config(args, "train_models"))])


def cmd_test(args) -> int:
    return _report([run_testing(_load_config(args, "test_images"))])


def cmd_run(args) -> int:
    return _report(run_enabled_modes(_load_config(args)))


def cmd_protocol_8020(args) -> int:
    return _report([run_protocol_8020(_load_config(args, "train_models"))])


def cmd_protocol_logo(args) -> int:
    return _report([run_protocol_logo(_load_config(args, "train_models"))])


def cmd_show_config(args) -> int:
    print(show_config(_load_config(args)), end="")
    return 0


def cmd_gen_synthetic(args) -> int:
    result = gen_synthetic(args.out, args.count, seed=args.seed if args.seed is not None else 1,
                           width=args.width, height=args.height, groups=args.groups)
    print(result.summary_line())
    return 0


def cmd_gen_filters(args) -> int:
    seed = args.seed if args.seed is not None else 1
    out = Path(args.out)
    for s in args.sizes:
        bank = synthesize_filter_bank(s, args.bit_depth, seed=seed * 100 + s)
        save_filter_bank(bank, out / filter_file_name(s, args.bit_depth))
    logger.info(f"✅ Wrote {len(args.sizes)} synthesized filter banks to {out}")
    print(f"stage=gen-filters banks={len(args.sizes)} n={args.bit_depth} seed={seed} out={out}")
    return 0


def cmd_convert_filters(args) -> int:
    out = Path(args.out)
    for mat in args.mat_files:
        bank = convert_mat_filters(mat)
        target = save_filter_bank(bank, out / filter_file_name(bank.s, bank.n))
        logger.info(f"✅ {Path(mat).name} -> {target.name}")
    print(f"stage=convert-filters banks={len(args.mat_files)} out={out}")
    return 0


def cmd_split_manifest(args) -> int:
    manifest = load_manifest(args.manifest)
    seed = args.seed if args.seed is not None else 1
    train, test = split_manifest(manifest, args.test_fraction, seed)
    folder = Path(args.manifest).parent
    train_path = write_manifest(train, args.train_out or folder / "train.csv")
    test_path = write_manifest(test, args.test_out or folder / "test.csv")
    logger.info(f"✅ Split {len(manifest)} images into {train_path.name} and {test_path.name}")
    print(f"stage=split-manifest images={len(manifest)} train={len(train)} test={len(test)} seed={seed}")
    return 0


def _sizes(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated filter sizes, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    common = UsageParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override every seed")
    common.add_argument("--log-level", default=None, help="logging level (default: $LOG_LEVEL or INFO)")

    configured = UsageParser(add_help=False, parents=[common])
    configured.add_argument("--config", required=True, help="INI configuration file")
    configured.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                            help="override a config key (repeatable)")

    parser = UsageParser(
        prog="python -m src.cli",
        description="Textured contact lens detection with BSIF features and an SVM ensemble",
        epilog=config_keys_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    for name, handler, text in (
        ("extract", cmd_extract, "extract BSIF feature CSVs for the manifests"),
        ("train", cmd_train, "train one auto-tuned SVM per scale"),
        ("test", cmd_test, "evaluate models individually or as a voting ensemble"),
        ("run", cmd_run, "run every mode enabled in the config"),
        ("protocol-8020", cmd_protocol_8020, "80:20 split, model ranking and ensemble size sweep"),
        ("protocol-logo", cmd_protocol_logo, "leave-one-group-out evaluation"),
        ("show-config", cmd_show_config, "print the effective configuration"),
    ):
        p = sub.add_parser(name, parents=[configured], help=text, epilog=config_keys_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=handler)

    p = sub.add_parser("gen-synthetic", parents=[common], help="write a surrogate image set and manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=20, help="images per class")
    p.add_argument("--groups", type=int, default=0, help="attack groups with distinct dot pitch")
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gen-filters", parents=[common], help="write seeded synthetic filter banks")
    p.add_argument("--out", required=True, help="filter directory")
    p.add_argument("--bit-depth", type=int, default=DEFAULT_BIT_DEPTH)
    p.add_argument("--sizes", type=_sizes, default=list(FILTER_SIZES), help="comma-separated filter sizes")
    p.set_defaults(func=cmd_gen_filters)

    p = sub.add_parser("convert-filters", parents=[common], help="convert ICAtextureFilters .mat files")
    p.add_argument("mat_files", nargs="+", help=".mat files holding an s x s x n ICAtextureFilters array")
    p.add_argument("--out", required=True, help="filter directory")
    p.set_defaults(func=cmd_convert_filters)

    p = sub.add_parser("split-manifest", parents=[common], help="seeded stratified train/test split of a manifest")
    p.add_argument("manifest", help="manifest CSV to split")
    p.add_argument("--test-fraction", type=float, default=1 / 3, help="share of images in the test list")
    p.add_argument("--train-out", default=None, help="default: train.csv next to the manifest")
    p.add_argument("--test-out", default=None, help="default: test.csv next to the manifest")
    p.set_defaults(func=cmd_split_manifest)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    level = (args.log_level or os.getenv("LOG_LEVEL") or "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "INFO"
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except (PadError, OSError) as e:
        logger.error(f"❌ {args.command}: {e}")
        return 1
    finally:
        shutdown_otel()


if __name__ == "__main__":
    sys.exit(main())
