"""Command line entry point: ``molftp {featurize,cv,audit-loo,flip,gen-synthetic}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(including partially unparseable datasets), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from molftp.chem import SmilesError
from molftp.config import ConfigError, PipelineConfig, parse_config
from molftp.leakage import FoldSpec, LeakageError
from molftp.pipeline import (
    DataError,
    cmd_audit_loo,
    cmd_cv,
    cmd_featurize,
    cmd_flip,
    provenance,
    read_dataset,
    write_vectors,
)
from molftp.synthetic import leaky_corpus, planted_corpus, write_dataset

log = logging.getLogger("molftp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with configuration keys")
    for f in fields(PipelineConfig):
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None, metavar=f.name.upper())


def _config(args) -> PipelineConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(PipelineConfig)}
    return parse_config(args.config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="molftp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("featurize", help="write molFTP vectors for a dataset")
    p.add_argument("dataset")
    p.add_argument("-o", "--out", default="vectors.csv")
    p.add_argument("--test-rows", help="file of held-out data-row numbers, one per line")
    _add_config_flags(p)

    p = sub.add_parser("cv", help="cross-validate logistic regression on molFTP vectors")
    p.add_argument("dataset")
    p.add_argument("--out-dir", default=".")
    _add_config_flags(p)

    p = sub.add_parser("audit-loo", help="key-LOO versus exact LOO bound audit")
    p.add_argument("dataset")
    p.add_argument("-o", "--out", default="bound_report.csv")
    _add_config_flags(p)

    p = sub.add_parser("flip", help="copy a dataset with a fraction of labels inverted")
    p.add_argument("dataset")
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=("planted", "leaky"), default="planted")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("-o", "--out", required=True)
    return parser


def _report_errors(errors) -> None:
    for row, msg in errors:
        log.error("row %d: %s", row, msg)


def _featurize(args) -> int:
    cfg = _config(args)
    data = read_dataset(args.dataset, cfg.extra_feature_columns)
    fold = None
    if args.test_rows:
        test_rows = {int(t) for t in Path(args.test_rows).read_text().split()}
        positions = {row: i for i, row in enumerate(data.rows)}
        test = frozenset(positions[r] for r in test_rows if r in positions)
        fold = FoldSpec(0, frozenset(range(len(data))) - test, test)
    result = cmd_featurize(data, cfg, fold)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        write_vectors(fh, result, cfg)
    print(
        f"{len(result.corpus)} molecules x {result.x.shape[1]} features -> {args.out} "
        f"({result.throughput:.0f} molecules/s)",
        file=sys.stderr,
    )
    if result.corpus.errors:
        _report_errors(result.corpus.errors)
        return EXIT_DATA
    return EXIT_OK


def _cv(args) -> int:
    cfg = _config(args)
    data = read_dataset(args.dataset, cfg.extra_feature_columns)
    result = cmd_cv(data, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(result.to_json() + "\n", encoding="utf-8")
    (out / "metrics_folds.csv").write_text(result.folds_csv(), encoding="utf-8")
    agg = result.aggregate
    tag = " (leaky baseline)" if result.leaky else ""
    print(
        f"leakage={cfg.leakage}{tag} AUROC={agg['auroc']['mean']:.4f}+/-{agg['auroc']['std']:.4f} "
        f"AUPRC={agg['auprc']['mean']:.4f}+/-{agg['auprc']['std']:.4f}",
        file=sys.stderr,
    )
    if data.errors:
        _report_errors(data.errors)
        return EXIT_DATA
    return EXIT_OK


def _audit(args) -> int:
    cfg = _config(args)
    data = read_dataset(args.dataset)
    report = cmd_audit_loo(data, cfg)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        report.write(fh, provenance(cfg))
    print(report.summary(), file=sys.stderr)
    return EXIT_OK


def _flip(args) -> int:
    mask = cmd_flip(args.dataset, args.out, args.fraction, args.seed)
    print(f"flipped {int(mask.sum())} of {len(mask)} labels -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _gen(args) -> int:
    if args.kind == "planted":
        data = planted_corpus(args.n, args.seed, noise=args.noise)
    else:
        data = leaky_corpus(args.n, args.seed)
    header = [f"synthetic kind={args.kind} n={args.n} seed={args.seed} noise={args.noise!r}"]
    write_dataset(args.out, data, header)
    print(f"{len(data)} molecules -> {args.out}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "featurize": _featurize,
    "cv": _cv,
    "audit-loo": _audit,
    "flip": _flip,
    "gen-synthetic": _gen,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_USAGE
    except (DataError, SmilesError, FileNotFoundError, UnicodeDecodeError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except LeakageError as exc:
        log.error("internal invariant violated: %s", exc)
        return EXIT_INTERNAL
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
