"""Corpus-level statistics: error frequencies, complexity distributions and
the least-squares fit of error count against log10(FC)."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from statistics import median
from typing import Iterable, Sequence

from scipy import stats as _sps

from .audit import CODES, AuditReport, Thresholds, audit_config
from .errors import FwauditError
from .fwn import parse_fwn
from .ir import CHECKPOINT, PIX, FirewallConfig
from .pix import load_pix
from .registry import DEFAULT_REGISTRY, ServiceRegistry

CONFIG_SUFFIXES = (".fwn", ".pix", ".cfg", ".conf", ".txt")
SIDECAR_SUFFIX = ".zones"


def sniff_vendor(text: str, path: str = "") -> str:
    if path.endswith(".fwn"):
        return CHECKPOINT
    if path.endswith(".pix"):
        return PIX
    for raw in text.split("\n")[:200]:
        line = raw.strip()
        if not line or line.startswith(("#", "!")):
            continue
        if line.startswith(("PIX Version", ": Saved", "nameif", "hostname")) or line == ":":
            return PIX
        if line.split()[0] in ("meta", "interface", "object", "group", "rule", "natrule"):
            return CHECKPOINT
        break
    raise FwauditError(f"{path or 'input'}: cannot tell whether this is a PIX or FWN document")


def load_config(path, strict=False, sidecar=None, registry: ServiceRegistry = DEFAULT_REGISTRY) -> FirewallConfig:
    """Read a PIX or FWN file.  A ``<path>.zones`` sidecar is used when present."""
    path = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    vendor = sniff_vendor(text, path)
    if vendor == CHECKPOINT:
        return parse_fwn(text, path, registry)
    if sidecar is None and os.path.exists(path + SIDECAR_SUFFIX):
        sidecar = path + SIDECAR_SUFFIX
    side_text = None
    if sidecar is not None:
        with open(sidecar, encoding="utf-8") as fh:
            side_text = fh.read()
    return load_pix(text, path, strict, side_text, registry=registry)


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    vendor: str
    version_category: str
    fc: int
    indicators: tuple[bool, ...]

    @property
    def error_count(self) -> int:
        return sum(self.indicators)

    @property
    def errors(self) -> list[str]:
        return [c for c, on in zip(CODES, self.indicators) if on]

    @classmethod
    def from_report(cls, report: AuditReport) -> "CorpusRecord":
        return cls(report.config_id, report.vendor, report.version_category, report.fc,
                   tuple(report.indicators[c] for c in CODES))


def _expand(paths: Iterable) -> list[str]:
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(str(q) for q in sorted(p.iterdir()) if q.is_file() and q.suffix in CONFIG_SUFFIXES)
        else:
            out.append(str(p))
    return out


def scan_corpus(paths, strict=False, registry: ServiceRegistry = DEFAULT_REGISTRY,
                thresholds: Thresholds = Thresholds()) -> tuple[list[CorpusRecord], list[str]]:
    """Audit every file; one record per success, one diagnostic per failure."""
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    records, diagnostics = [], []
    for path in _expand(paths):
        try:
            cfg = load_config(path, strict=strict, registry=registry)
            records.append(CorpusRecord.from_report(audit_config(cfg, registry, thresholds)))
        except (FwauditError, OSError, UnicodeDecodeError, ValueError) as exc:
            diagnostics.append(f"{path}: {exc}")
    records.sort(key=lambda r: r.id)
    return records, diagnostics


@dataclass(frozen=True)
class FiveNumberSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int

    def as_tuple(self):
        return (self.min, self.q1, self.median, self.q3, self.max)


def five_number(values: Sequence[float]) -> FiveNumberSummary:
    """Min, hinges and max.  Quartiles are medians of the lower and upper
    halves, with the median included in both halves when n is odd."""
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        raise ValueError("no values")
    half = (n + 1) // 2
    lower, upper = xs[:half], xs[n - half:]
    return FiveNumberSummary(xs[0], median(lower), median(xs), median(upper), xs[-1], n)


@dataclass(frozen=True)
class CorpusStats:
    n: int
    frequencies: dict[str, float]
    fc_summary: dict[str, FiveNumberSummary]
    errors_by_version: dict[str, dict[str, FiveNumberSummary]]
    vendor_median_errors: dict[str, float]
    spearman: float


def corpus_stats(records: Sequence[CorpusRecord]) -> CorpusStats:
    if not records:
        raise ValueError("empty corpus")
    records = sorted(records, key=lambda r: r.id)
    n = len(records)
    freq = {c: 100.0 * sum(r.indicators[k] for r in records) / n for k, c in enumerate(CODES)}
    vendors = sorted({r.vendor for r in records})
    fc_summary, by_version, medians = {}, {}, {}
    for v in vendors:
        rs = [r for r in records if r.vendor == v]
        fc_summary[v] = five_number([r.fc for r in rs])
        medians[v] = float(median(r.error_count for r in rs))
        cats = sorted({r.version_category for r in rs})
        by_version[v] = {c: five_number([r.error_count for r in rs if r.version_category == c]) for c in cats}
    rho = float("nan")
    if n >= 2:
        fcs = [r.fc for r in records]
        errs = [r.error_count for r in records]
        if len(set(fcs)) > 1 and len(set(errs)) > 1:
            rho = float(_sps.spearmanr(fcs, errs).statistic)
    return CorpusStats(n, freq, fc_summary, by_version, medians, rho)


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    residual_std: float
    r: float
    n: int

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> RegressionFit:
    """Ordinary least squares y = slope*x + intercept."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("xs and ys differ in length")
    if n < 2:
        raise ValueError("need at least 2 points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    if sxx == 0:
        raise ValueError("all x values are equal")
    slope = sxy / sxx
    intercept = my - slope * mx
    sse = math.fsum((y - slope * x - intercept) ** 2 for x, y in zip(xs, ys))
    s = math.sqrt(sse / (n - 2)) if n > 2 else 0.0
    r = sxy / math.sqrt(sxx * syy) if syy > 0 else float("nan")
    return RegressionFit(slope, intercept, s, r, n)


def _points(records):
    pts = [(math.log10(r.fc), r.error_count) for r in records if r.fc >= 1]
    return [p[0] for p in pts], [p[1] for p in pts]


def fit_regression(records: Sequence[CorpusRecord], split: str = "overall"):
    """Fit error_count on log10(fc): one fit, or a dict of fits per vendor."""
    if split == "overall":
        return fit_line(*_points(records))
    if split == "per-vendor":
        vendors = sorted({r.vendor for r in records})
        return {v: fit_line(*_points([r for r in records if r.vendor == v])) for v in vendors}
    raise ValueError(f"unknown split {split!r}")


@dataclass(frozen=True)
class VendorGap:
    x: float  # pooled median of log10(fc)
    upper_vendor: str
    lower_vendor: str
    gap: float  # upper fit minus lower fit at x


def vendor_gap(records: Sequence[CorpusRecord], fits: dict[str, RegressionFit] | None = None,
               upper: str = CHECKPOINT, lower: str = PIX) -> VendorGap:
    """Vertical distance between two vendors' regression lines at the
    pooled median of log10(fc)."""
    fits = fits or fit_regression(records, "per-vendor")
    if upper not in fits or lower not in fits:
        raise ValueError(f"need fits for both {upper} and {lower}")
    xs, _ = _points(records)
    x = float(median(xs))
    return VendorGap(x, upper, lower, fits[upper].predict(x) - fits[lower].predict(x))


# -- CSV output -------------------------------------------------------------

def _f4(x: float) -> str:
    return "nan" if x != x else f"{x:.4f}"


def write_records_csv(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["id", "vendor", "version_category", "fc", "error_count", *CODES])
    for r in records:
        w.writerow([r.id, r.vendor, r.version_category, int(r.fc), r.error_count,
                    *(int(b) for b in r.indicators)])


def write_outputs(records: Sequence[CorpusRecord], out_dir, diagnostics: Sequence[str] = ()) -> dict[str, Path]:
    """Write records, frequencies, summaries, regression and plot data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=lambda r: r.id)
    st = corpus_stats(records)
    files = {}

    def open_csv(name):
        files[name] = out / f"{name}.csv"
        return open(files[name], "w", encoding="utf-8", newline="")

    with open_csv("records") as fh:
        write_records_csv(records, fh)
    with open_csv("frequencies") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["code", "count", "n", "percent"])
        for k, c in enumerate(CODES):
            w.writerow([c, sum(r.indicators[k] for r in records), st.n, f"{st.frequencies[c]:.1f}"])
    with open_csv("fc_summary") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vendor", "n", "min", "q1", "median", "q3", "max", "median_errors"])
        for v, s in st.fc_summary.items():
            w.writerow([v, s.n, *(_num(x) for x in s.as_tuple()), _num(st.vendor_median_errors[v])])
    with open_csv("errors_by_version") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vendor", "version_category", "n", "min", "q1", "median", "q3", "max"])
        for v, cats in st.errors_by_version.items():
            for cat, s in cats.items():
                w.writerow([v, cat, s.n, *(_num(x) for x in s.as_tuple())])

    fits = {}
    if len(records) >= 2 and len({r.fc for r in records}) > 1:
        fits["overall"] = fit_regression(records)
    for v in sorted({r.vendor for r in records}):
        rs = [r for r in records if r.vendor == v]
        if len(rs) >= 2 and len({r.fc for r in rs}) > 1:
            fits[v] = fit_regression(rs)
    gap = None
    if CHECKPOINT in fits and PIX in fits:
        gap = vendor_gap(records, {CHECKPOINT: fits[CHECKPOINT], PIX: fits[PIX]})
    with open_csv("regression") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scope", "slope", "intercept", "residual_std", "r", "n"])
        for scope, f in fits.items():
            w.writerow([scope, _f4(f.slope), _f4(f.intercept), _f4(f.residual_std), _f4(f.r), f.n])
        w.writerow([])
        w.writerow(["statistic", "value"])
        w.writerow(["spearman_fc_errors", _f4(st.spearman)])
        if gap is not None:
            w.writerow(["vendor_gap_x_log10fc", _f4(gap.x)])
            w.writerow([f"vendor_gap_{gap.upper_vendor}_minus_{gap.lower_vendor}", _f4(gap.gap)])
    with open_csv("plot_data") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scope", "id", "x_log10fc", "y_errors", "fitted", "upper_1sd", "lower_1sd"])
        for scope, f in fits.items():
            rs = records if scope == "overall" else [r for r in records if r.vendor == scope]
            for r in rs:
                x = math.log10(r.fc)
                y = f.predict(x)
                w.writerow([scope, r.id, _f4(x), r.error_count, _f4(y),
                            _f4(y + f.residual_std), _f4(y - f.residual_std)])
    if diagnostics:
        files["diagnostics"] = out / "diagnostics.txt"
        files["diagnostics"].write_text("\n".join(diagnostics) + "\n", encoding="utf-8")
    return files


def _num(x) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.4f}"
