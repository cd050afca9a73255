"""fwaudit command line.

Exit status: 0 success, 1 usage error, 2 input error, 3 when
``--fail-on-errors N`` is given and a report has at least N errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .audit import BY_CODE, CODES, Thresholds, audit_config
from .complexity import firewall_complexity, legacy_rc
from .corpus import CorpusRecord, corpus_stats, fit_regression, load_config, scan_corpus, vendor_gap, \
    write_outputs, write_records_csv, _f4
from .errors import FwauditError, NotApplicable
from .ir import CHECKPOINT, PIX
from .registry import REGISTRY_ENV, load_registry
from .synth import SynthParams, Unrealizable, generate_synthetic, synthetic_corpus

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_FAIL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _codes(text):
    out = [c.strip().lower() for c in text.split(",") if c.strip()]
    bad = [c for c in out if c not in BY_CODE]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown error code(s): {', '.join(bad)}")
    return frozenset(out)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--registry", help=f"service registry file (default: ${REGISTRY_ENV})")
    common.add_argument("--address-threshold", type=_nonneg, default=Thresholds.address)
    common.add_argument("--port-threshold", type=_nonneg, default=Thresholds.port)
    common.add_argument("--strict", action="store_true", help="reject unsupported PIX commands")

    p = _Parser(prog="fwaudit", description="Audit firewall rule-sets for configuration errors.")
    p.add_argument("--version", action="version", version=f"fwaudit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("audit", parents=[common], help="report configuration errors")
    a.add_argument("files", nargs="+")
    a.add_argument("--zones", help="zone sidecar for PIX input")
    a.add_argument("--fail-on-errors", type=_positive, metavar="N")

    f = sub.add_parser("fc", parents=[common], help="print firewall complexity")
    f.add_argument("files", nargs="+")
    f.add_argument("--zones")

    c = sub.add_parser("corpus", parents=[common], help="corpus statistics and regression")
    c.add_argument("paths", nargs="+")
    c.add_argument("--out-dir")

    g = sub.add_parser("generate", help="write synthetic configs with ground-truth labels")
    g.add_argument("--vendor", choices=(CHECKPOINT, PIX), help="default: checkpoint, or both for --count > 1")
    g.add_argument("--fc", type=_positive, default=500, help="target complexity")
    g.add_argument("--errors", type=_codes, default=frozenset(), help="comma-separated codes, e.g. i01,o04")
    g.add_argument("--count", type=_positive, default=1, help=">1 writes a corpus with random labels")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    return p


def _thresholds(args) -> Thresholds:
    return Thresholds(address=args.address_threshold, port=args.port_threshold)


def _registry(args):
    return load_registry(args.registry)


def _report_text(rep) -> str:
    counts = rep.counts
    out = [f"config {rep.config_id}",
           f"vendor {rep.vendor}  version {rep.version_category}",
           "rules {rules}  objects {objects}  interfaces {interfaces}".format(**counts)
           + (f"  lines {counts['lines']}" if counts.get("lines") is not None else ""),
           f"fc {rep.fc}",
           f"errors {rep.error_count}"]
    for code in rep.errors:
        ev = rep.evidence[code]
        refs = ", ".join(f"#{r.index}" + (f"@{r.line}" if r.line else "") for r in ev.rules)
        extra = f" count={ev.count}" if ev.count is not None else ""
        out.append(f"  {code}  {BY_CODE[code].title}  [{refs}]{extra}")
    return "\n".join(out) + "\n"


def cmd_audit(args, out, err) -> int:
    registry, th = _registry(args), _thresholds(args)
    reports = []
    for path in args.files:
        cfg = load_config(path, strict=args.strict, sidecar=args.zones, registry=registry)
        reports.append(audit_config(cfg, registry, th))
    if args.format == "json":
        if len(reports) == 1:
            out.write(reports[0].to_json() + "\n")
        else:
            out.write(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        write_records_csv([CorpusRecord.from_report(r) for r in reports], out)
    else:
        out.write("\n".join(_report_text(r) for r in reports))
    if args.fail_on_errors is not None and any(r.error_count >= args.fail_on_errors for r in reports):
        return EXIT_FAIL
    return EXIT_OK


def cmd_fc(args, out, err) -> int:
    registry = _registry(args)
    rows = []
    for path in args.files:
        cfg = load_config(path, strict=args.strict, sidecar=args.zones, registry=registry)
        try:
            rc = legacy_rc(cfg)
        except NotApplicable:
            rc = None
        rows.append((path, cfg.vendor, firewall_complexity(cfg), rc))
    if args.format == "json":
        data = [{"id": p, "vendor": v, "fc": fc, "rc": rc} for p, v, fc, rc in rows]
        out.write(json.dumps(data[0] if len(data) == 1 else data, indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "vendor", "fc", "rc"])
        for p, v, fc, rc in rows:
            w.writerow([p, v, fc, "" if rc is None else rc])
    else:
        for p, v, fc, rc in rows:
            prefix = f"{p}\t" if len(rows) > 1 else ""
            out.write(f"{prefix}{fc}" + (f"\trc {rc}" if rc is not None else "") + "\n")
    return EXIT_OK


def cmd_corpus(args, out, err) -> int:
    registry = _registry(args)
    for p in args.paths:
        if not os.path.exists(p):
            raise FileNotFoundError(f"{p}: no such file or directory")
    records, diags = scan_corpus(args.paths, strict=args.strict, registry=registry, thresholds=_thresholds(args))
    for d in diags:
        err.write(f"warning: {d}\n")
    if not records:
        err.write("error: no configuration could be analyzed\n")
        return EXIT_INPUT
    if args.out_dir:
        write_outputs(records, args.out_dir, diags)
    st = corpus_stats(records)
    fits, gap = {}, None
    if len({r.fc for r in records}) > 1:
        fits["overall"] = fit_regression(records)
        for v in sorted({r.vendor for r in records}):
            rs = [r for r in records if r.vendor == v]
            if len({r.fc for r in rs}) > 1:
                fits[v] = fit_regression(rs)
        if CHECKPOINT in fits and PIX in fits:
            gap = vendor_gap(records, fits)
    if args.format == "csv":
        write_records_csv(records, out)
    elif args.format == "json":
        data = {
            "n": st.n,
            "frequencies": {c: round(st.frequencies[c], 4) for c in CODES},
            "vendor_median_errors": st.vendor_median_errors,
            "spearman": None if st.spearman != st.spearman else round(st.spearman, 4),
            "regression": {k: {"slope": round(f.slope, 4), "intercept": round(f.intercept, 4),
                               "residual_std": round(f.residual_std, 4), "n": f.n} for k, f in fits.items()},
            "vendor_gap": None if gap is None else round(gap.gap, 4),
            "diagnostics": diags,
        }
        out.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"configs {st.n}  skipped {len(diags)}\n")
        for v, s in st.fc_summary.items():
            out.write(f"{v}: n={s.n} fc median {s.median:g} [{s.min:g}..{s.max:g}]  "
                      f"median errors {st.vendor_median_errors[v]:g}\n")
        for k, f in fits.items():
            out.write(f"fit {k}: errors = {_f4(f.slope)}*log10(fc) + {_f4(f.intercept)}  "
                      f"s={_f4(f.residual_std)} n={f.n}\n")
        out.write(f"spearman {_f4(st.spearman)}\n")
        if gap is not None:
            out.write(f"vendor gap {gap.upper_vendor}-{gap.lower_vendor} at log10(fc)={_f4(gap.x)}: {_f4(gap.gap)}\n")
        top = sorted(CODES, key=lambda c: (-st.frequencies[c], c))[:10]
        out.write("most frequent: " + ", ".join(f"{c} {st.frequencies[c]:.1f}%" for c in top) + "\n")
    return EXIT_OK


def cmd_generate(args, out, err) -> int:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    if args.count > 1:
        vendors = (args.vendor,) if args.vendor else (CHECKPOINT, PIX)
        items = synthetic_corpus(args.count, args.seed, vendors=vendors)
    else:
        vendor = args.vendor or CHECKPOINT
        cfg = generate_synthetic(SynthParams(vendor, args.fc, args.errors, args.seed))
        items = [(f"synth-{vendor}-{args.seed}", cfg)]
    for name, cfg in items:
        (d / f"{name}{cfg.suffix}").write_text(cfg.text, encoding="utf-8")
        (d / f"{name}.labels.json").write_text(cfg.labels_json(), encoding="utf-8")
        out.write(f"{d / (name + cfg.suffix)}\tfc {cfg.fc}\terrors {','.join(sorted(cfg.labels)) or '-'}\n")
    return EXIT_OK


COMMANDS = {"audit": cmd_audit, "fc": cmd_fc, "corpus": cmd_corpus, "generate": cmd_generate}


def run_cli(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out, err)
    except (FwauditError, Unrealizable) as exc:
        err.write(f"error: {exc}\n")
    except (OSError, UnicodeDecodeError) as exc:
        err.write(f"error: {exc}\n")
    return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


def run_captured(argv) -> tuple[int, str, str]:
    """Run the CLI with captured streams (handy for tests and scripts)."""
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(argv, out, err)
    return code, out.getvalue(), err.getvalue()
