"""Acceptance criteria, one test each.  Every test prints a single
``PASS``/``FAIL`` line (visible with ``pytest -v`` or ``-s``)."""

import io
import math
import random
from pathlib import Path

import numpy as np
import pytest

from conftest import GOLDEN
from fwaudit.audit import CATALOGUE, analyze, audit_config
from fwaudit.complexity import fc_checkpoint, fc_pix, rc
from fwaudit.corpus import corpus_stats, fit_line, fit_regression, load_config, scan_corpus, vendor_gap, write_outputs
from fwaudit.errors import ParseError
from fwaudit.fwn import parse_fwn
from fwaudit.ir import allowed_region
from fwaudit.pix import load_pix
from fwaudit.synth import synthetic_corpus
from oracle import enumerate_case, rasterize
from toycases import TOY_REG, TOY_THRESHOLDS, random_case, to_config

README = Path(__file__).resolve().parent.parent / "README.md"


@pytest.fixture
def verdict(capsys):
    def report(n: int, title: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\ncriterion {n} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else ""))
        assert ok, detail
    return report


def test_criterion_1_formulas(verdict):
    got = (fc_pix(365), fc_checkpoint(79, 4, 572), rc(79, 572, 4))
    verdict(1, "FC_p(365)=315, FC_c(79,4,572)=888, RC(79,572,4)=657", got == (315, 888, 657), f"got {got}")


def test_criterion_2_oracle(verdict):
    bad = []
    for seed in range(1000):
        case = random_case(random.Random(10_000 + seed))
        cfg = to_config(case)
        o = enumerate_case(case, CATALOGUE)
        a = analyze(cfg, TOY_REG, TOY_THRESHOLDS)
        mask, total = rasterize(allowed_region(cfg, TOY_REG))
        ok = bool((mask == o.allowed).all()) and total == mask.sum()
        for i, e in enumerate(a.effective):
            m, t = rasterize(e)
            ok &= bool((m == o.effective[i]).all()) and t == m.sum()
        ok &= a.indicators == o.indicators
        ok &= {k: v.count for k, v in a.thresholds.items()} == o.threshold_counts
        if not ok:
            bad.append(seed)
    verdict(2, "1000 toy rule-sets agree with the per-packet enumerator", not bad, f"{len(bad)} mismatches")


def test_criterion_3_containment_example(verdict):
    head = "interface ext zone external\ninterface lan zone internal:lan net 10.0.0.0/16\n"
    one = set(audit_config(parse_fwn(head + "rule permit src any dst 10.0.0.1 svc any\n")).errors)
    two = set(audit_config(parse_fwn(head + "rule permit src any dst 10.0.0.1 svc any\n"
                                     "rule permit src any dst 10.0.0.2 svc tcp\n")).errors)
    ok = "i01" in one and not one & {"i02", "i04"} and {"i01", "i02"} <= two
    verdict(3, "permit-ANY alone gives i01 only; a separate all-TCP rule adds i02", ok, f"{sorted(one)} / {sorted(two)}")


def test_criterion_4_threshold_boundary(verdict):
    head = "interface ext zone external\ninterface lan zone internal:lan net 10.0.0.0/16\n"

    def i08(dst):
        return audit_config(parse_fwn(head + f"rule permit src any dst {dst} svc tcp/80\n")).indicators["i08"]

    a, b = i08("10.0.0.0/24"), i08("10.0.0.0/24,10.0.1.1")
    verdict(4, "/24 (256) does not trigger i08, /24 plus one host (257) does", (a, b) == (False, True))


def test_criterion_5_regression(verdict):
    xs = [math.log10(fc) for fc in (30, 90, 315, 888, 1117, 3259, 5000)]
    exact = fit_line(xs, [8 * x - 10 for x in xs])
    resid = max(abs(y - exact.predict(x)) for x, y in zip(xs, [8 * x - 10 for x in xs]))
    ok_exact = abs(exact.slope - 8) < 1e-9 and abs(exact.intercept + 10) < 1e-9 and resid < 1e-9
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        x = np.log10(rng.uniform(30, 5000, 200))
        y = 8 * x - 10 + rng.normal(0, 1, 200)
        f = fit_line(x.tolist(), y.tolist())
        hits += abs(f.slope - 8) <= 0.5 and abs(f.intercept + 10) <= 1.5
    verdict(5, "exact line recovered; noisy fits within tolerance in >=95/100 trials",
            ok_exact and hits >= 95, f"exact residual {resid:.1e}, {hits}/100 noisy trials")


def test_criterion_6_generator_agreement(verdict):
    items = synthetic_corpus(200, seed=6, fc_range=(50, 1500), noise=1.0)
    per_vendor, wrong = {}, []
    for name, cfg in items:
        per_vendor[cfg.vendor] = per_vendor.get(cfg.vendor, 0) + 1
        parsed = parse_fwn(cfg.text, name) if cfg.vendor == "checkpoint" else load_pix(cfg.text, name, strict=True)
        if set(audit_config(parsed).errors) != set(cfg.labels):
            wrong.append(name)
    ok = not wrong and per_vendor == {"checkpoint": 100, "pix": 100}
    verdict(6, "100 synthetic configs per vendor audit to their labels", ok, f"{per_vendor}, {len(wrong)} wrong")


def _scan(items, root):
    root.mkdir()
    for name, cfg in items:
        (root / f"{name}{cfg.suffix}").write_text(cfg.text)
    return scan_corpus(root)


def test_criterion_7_corpus_pipeline(verdict, tmp_path):
    # counts monotone in FC: both vendors on one noise-free line
    mono, d1 = _scan(synthetic_corpus(120, seed=7, fc_range=(40, 5000), noise=0.0), tmp_path / "mono")
    rho = corpus_stats(mono).spearman
    # a planted vendor offset, so the gap is not trivially zero
    records, d2 = _scan(synthetic_corpus(120, seed=8, fc_range=(40, 5000), noise=0.0, vendor_offset={"pix": -5}),
                        tmp_path / "offset")
    files = write_outputs(records, tmp_path / "out")
    # closed form: the two numpy fits evaluated at the pooled median of log10(fc)
    lines = {}
    for v in ("checkpoint", "pix"):
        rs = [r for r in records if r.vendor == v]
        lines[v] = np.polyfit([math.log10(r.fc) for r in rs], [r.error_count for r in rs], 1)
    x = float(np.median([math.log10(r.fc) for r in records]))
    want = np.polyval(lines["checkpoint"], x) - np.polyval(lines["pix"], x)
    gap = vendor_gap(records, fit_regression(records, "per-vendor"))
    in_csv = any(row.startswith("vendor_gap_checkpoint_minus_pix,") for row in files["regression"].read_text().split("\n"))
    ok = not d1 and not d2 and len(mono) == len(records) == 120 and rho > 0.9 and abs(gap.gap - want) < 1e-9 and in_csv
    verdict(7, "Spearman > 0.9 and the vendor-gap statistic matches its closed form", ok,
            f"rho {rho:.3f}, gap {gap.gap:.4f} vs {want:.4f}")


def test_criterion_8_field_frequencies_not_reproduced(verdict):
    # the field study's configurations are confidential; the property-based
    # criteria stand in for its frequencies, which this check only records
    text = README.read_text(encoding="utf-8")
    ok = "Not reproduced" in text
    verdict(8, "field-survey frequencies declared non-reproducible (documented in README)", ok)


def test_criterion_9_parser_robustness(verdict):
    good = sorted((GOLDEN / "fwn").glob("*.fwn")) + sorted((GOLDEN / "pix").glob("*.pix"))
    n_fwn = sum(p.suffix == ".fwn" for p in good)
    problems = []
    for p in good:
        a, b = load_config(p, strict=True), load_config(p, strict=True)
        if a != b or audit_config(a).to_json() != audit_config(b).to_json():
            problems.append(f"{p.name} nondeterministic")
        if a.raw_line_count != sum(1 for _ in io.BytesIO(p.read_bytes())):
            problems.append(f"{p.name} line count")
    for p in sorted((GOLDEN / "malformed").iterdir()):
        try:
            load_config(p, strict=True)
            problems.append(f"{p.name} accepted")
        except ParseError as e:
            if e.line is None:
                problems.append(f"{p.name} unlocated")
        except Exception as e:  # noqa: BLE001 - any other exception is a crash
            problems.append(f"{p.name} crashed: {type(e).__name__}")
    ok = n_fwn >= 20 and len(good) - n_fwn >= 20 and not problems
    verdict(9, "golden documents deterministic, malformed inputs located, line counts exact", ok,
            "; ".join(problems) or f"{n_fwn} FWN, {len(good) - n_fwn} PIX")
