"""Golden documents: deterministic parsing, hand-derived findings, located
diagnostics for malformed input."""

import io
import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import GOLDEN
from fwaudit import errors
from fwaudit.audit import audit_config
from fwaudit.corpus import load_config
from fwaudit.errors import FwauditError, ParseError
from fwaudit.fwn import parse_fwn
from fwaudit.pix import load_pix

FWN = json.loads((GOLDEN / "fwn_expected.json").read_text())
PIX = json.loads((GOLDEN / "pix_expected.json").read_text())
BAD = json.loads((GOLDEN / "malformed_expected.json").read_text())
ALL_GOOD = [GOLDEN / "fwn" / f for f in FWN] + [GOLDEN / "pix" / f for f in PIX]


def byte_lines(path) -> int:
    # binary iteration splits on b"\n" only, independent of the parsers
    return sum(1 for _ in io.BytesIO(path.read_bytes()))


def test_corpus_size():
    assert len(FWN) >= 20 and len(PIX) >= 20
    assert {p.name for p in (GOLDEN / "fwn").iterdir()} == set(FWN)
    assert {p.name for p in (GOLDEN / "pix").glob("*.pix")} == set(PIX)


@pytest.mark.parametrize("path", ALL_GOOD, ids=lambda p: p.name)
def test_golden_findings(path):
    expected = (FWN if path.suffix == ".fwn" else PIX)[path.name]
    cfg = load_config(path, strict=True)
    assert sorted(audit_config(cfg).errors) == sorted(expected)


@pytest.mark.parametrize("path", ALL_GOOD, ids=lambda p: p.name)
def test_golden_deterministic(path):
    a, b = load_config(path, strict=True), load_config(path, strict=True)
    assert a == b
    assert audit_config(a).to_json() == audit_config(b).to_json()


@pytest.mark.parametrize("path", ALL_GOOD, ids=lambda p: p.name)
def test_raw_line_count_matches_bytes(path):
    assert load_config(path).raw_line_count == byte_lines(path)


@pytest.mark.parametrize("name", sorted(BAD))
def test_malformed_is_located(name):
    cls, line, col, fragment = BAD[name]
    path = GOLDEN / "malformed" / name
    with pytest.raises(ParseError) as ei:
        load_config(path, strict=True)
    e = ei.value
    assert type(e) is getattr(errors, cls)
    assert (e.line, e.column) == (line, col)
    assert e.source == str(path)
    assert fragment in str(e)
    prefix = f"{path}:{line}:" + (f"{col}:" if col is not None else "")
    assert str(e).startswith(prefix)


def test_unsupported_lines_are_skipped_when_lenient():
    path = GOLDEN / "malformed" / "n05_unsupported_strict.pix"
    cfg = load_config(path, strict=False)
    assert any("router ospf 1" in d for d in cfg.diagnostics)
    assert cfg.raw_line_count == byte_lines(path)


def test_unbound_acl_diagnostic():
    cfg = load_config(GOLDEN / "pix" / "p10_unbound_acl.pix")
    assert any("spare" in d for d in cfg.diagnostics)


def test_sidecar_is_picked_up_automatically():
    cfg = load_config(GOLDEN / "pix" / "p23_sidecar.pix")
    zones = {i.name: i.zone for i in cfg.interfaces}
    assert zones == {"outside": "external", "inside": "internal:inside", "partner": "internal:partner"}


_SOURCES = [(p.read_text(), p.suffix) for p in ALL_GOOD[::3]]


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(st.sampled_from(_SOURCES), st.data())
def test_mutated_documents_never_crash(doc, data):
    text, suffix = doc
    lines = text.split("\n")
    for _ in range(data.draw(st.integers(1, 4))):
        k = data.draw(st.integers(0, len(lines) - 1))
        op = data.draw(st.sampled_from(["drop", "dup", "chop", "garble", "swap"]))
        if op == "drop":
            del lines[k]
        elif op == "dup":
            lines.insert(k, lines[k])
        elif op == "chop" and lines[k]:
            lines[k] = lines[k][: data.draw(st.integers(0, len(lines[k])))]
        elif op == "garble":
            junk = data.draw(st.text(alphabet="abc019./-, #\t", max_size=6))
            pos = data.draw(st.integers(0, len(lines[k])))
            lines[k] = lines[k][:pos] + junk + lines[k][pos:]
        elif op == "swap" and len(lines) > 1:
            j = data.draw(st.integers(0, len(lines) - 1))
            lines[k], lines[j] = lines[j], lines[k]
        if not lines:
            lines = [""]
    mutated = "\n".join(lines)
    try:
        cfg = parse_fwn(mutated, "m") if suffix == ".fwn" else load_pix(mutated, "m")
        audit_config(cfg)
    except ParseError as e:
        assert e.line is not None and e.source == "m"
    except FwauditError:
        pass  # zone problems are whole-document, not tied to a line
