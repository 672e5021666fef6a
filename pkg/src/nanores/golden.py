"""Golden-baseline regression suite.

``data/golden/manifest.json`` lists baselines.  Each one is a CLI command, a
map from produced output files to checked-in expected files, and a comparison
rule.  Rules are either ``{"kind": "exact"}`` (byte equality) or
``{"kind": "numeric", "rel": r, "abs": a, "columns": {...}, "rows": [...]}``:
numeric cells must agree within ``abs + rel*|expected|`` (per-column values in
``columns`` override the defaults), text cells and ``#`` comments exactly.
``rows`` restricts the comparison to rows whose first cell is listed.

Placeholders ``{data}`` (the shipped config directory), ``{golden}`` (the
baseline directory) and ``{out}`` (a per-baseline scratch directory) are
substituted in the command.
"""

from __future__ import annotations

import csv
import io
import json
import math
import shutil
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

DATA_DIR = Path(str(resources.files("nanores") / "data"))
GOLDEN_DIR = DATA_DIR / "golden"


class GoldenSuiteError(RuntimeError):
    pass


@dataclass(frozen=True)
class GoldenBaseline:
    name: str
    argv: tuple[str, ...]
    outputs: dict[str, str]
    rule: dict
    criteria: tuple[int, ...] = ()


@dataclass
class BaselineResult:
    name: str
    status: str  # PASS | FAIL | ERROR
    messages: list[str] = field(default_factory=list)


@dataclass
class GoldenReport:
    results: list[BaselineResult]
    output_dir: Path | None = None

    @property
    def ok(self) -> bool:
        return all(r.status == "PASS" for r in self.results)

    @property
    def errors(self) -> list[BaselineResult]:
        return [r for r in self.results if r.status == "ERROR"]

    @property
    def failures(self) -> list[BaselineResult]:
        return [r for r in self.results if r.status == "FAIL"]

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            out.append(f"{r.status} {r.name}")
            out.extend(f"    {m}" for m in r.messages[:20])
            if len(r.messages) > 20:
                out.append(f"    ... {len(r.messages) - 20} more")
        n = sum(r.status == "PASS" for r in self.results)
        out.append(f"{n}/{len(self.results)} baselines passed")
        return out


def load_manifest(baseline_dir=None) -> list[GoldenBaseline]:
    d = Path(baseline_dir) if baseline_dir else GOLDEN_DIR
    path = d / "manifest.json"
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise GoldenSuiteError(f"missing manifest {path}") from None
    except json.JSONDecodeError as exc:
        raise GoldenSuiteError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return [
        GoldenBaseline(b["name"], tuple(b["argv"]), dict(b["outputs"]), dict(b["rule"]), tuple(b.get("criteria", ())))
        for b in raw["baselines"]
    ]


def _num(s: str):
    try:
        return float(s)
    except ValueError:
        return None


def _split(text: str):
    comments, rows = [], []
    for line in text.splitlines():
        (comments if line.startswith("#") else rows).append(line)
    return comments, list(csv.reader(io.StringIO("\n".join(rows))))


def compare_csv(actual: str, expected: str, rule: dict) -> list[str]:
    """All mismatches between two CSV texts under ``rule`` (empty if equal)."""
    if rule.get("kind", "numeric") == "exact":
        return [] if actual == expected else ["files differ byte-wise"]
    rel = float(rule.get("rel", 1e-9))
    ab = float(rule.get("abs", 0.0))
    cols = rule.get("columns", {})
    keep = set(rule["rows"]) if "rows" in rule else None
    msgs = []
    ca, ra = _split(actual)
    ce, re_ = _split(expected)
    if not rule.get("ignore_comments", False) and ca != ce:
        msgs.append("comment lines differ")
    if not ra or not re_ or ra[0] != re_[0]:
        return msgs + [f"header differs: {ra[:1]} vs {re_[:1]}"]
    header = re_[0]
    if keep is not None:
        ra = [ra[0]] + [r for r in ra[1:] if r and r[0] in keep]
        re_ = [re_[0]] + [r for r in re_[1:] if r and r[0] in keep]
    if len(ra) != len(re_):
        return msgs + [f"row count {len(ra) - 1} != expected {len(re_) - 1}"]
    for i, (a_row, e_row) in enumerate(zip(ra[1:], re_[1:]), start=1):
        if len(a_row) != len(e_row):
            msgs.append(f"row {i}: {len(a_row)} cells, expected {len(e_row)}")
            continue
        for col, a, e in zip(header, a_row, e_row):
            fa, fe = _num(a), _num(e)
            if fa is None or fe is None:
                if a != e:
                    msgs.append(f"row {i} {col}: {a!r} != {e!r}")
                continue
            if math.isnan(fe) and math.isnan(fa):
                continue
            c = cols.get(col, {})
            tol = float(c.get("abs", ab)) + float(c.get("rel", rel)) * abs(fe)
            if not abs(fa - fe) <= tol:
                msgs.append(f"row {i} {col}: {fa!r} vs expected {fe!r} (tol {tol:.3g})")
    return msgs


def _expand(argv, out: Path, golden: Path) -> list[str]:
    return [a.format(data=str(DATA_DIR), golden=str(golden), out=str(out)) for a in argv]


def _run(argv: list[str]) -> tuple[int, str, str]:
    from nanores.cli import main

    so, se = io.StringIO(), io.StringIO()
    code = main(argv, stdout=so, stderr=se)
    return code, so.getvalue(), se.getvalue()


def run_golden_suite(
    baseline_dir=None,
    regenerate: bool = False,
    overrides=(),
    output_dir=None,
    only=None,
) -> GoldenReport:
    """Run every baseline and report all failures (no fail-fast).

    ``overrides`` are extra ``--set`` values appended to config-driven
    commands.  Outputs go to ``output_dir`` (a fresh temporary directory if
    omitted, removed afterwards).
    """
    golden = Path(baseline_dir) if baseline_dir else GOLDEN_DIR
    baselines = load_manifest(golden)
    if only is not None:
        baselines = [b for b in baselines if b.name in set(only)]
    tmp = None
    if output_dir is None:
        tmp = tempfile.mkdtemp(prefix="nanores-golden-")
        root = Path(tmp)
    else:
        root = Path(output_dir)
    results = []
    try:
        for b in baselines:
            out = root / b.name
            out.mkdir(parents=True, exist_ok=True)
            argv = _expand(b.argv, out, golden)
            if overrides and argv[0] in ("simulate", "sweep", "fom"):
                for o in overrides:
                    argv += ["--set", o]
            missing = [e for e in b.outputs.values() if not (golden / e).is_file()]
            if missing and not regenerate:
                results.append(BaselineResult(b.name, "ERROR", [f"missing baseline file {golden / m}" for m in missing]))
                continue
            code, _, err = _run(argv)
            if code != 0:
                results.append(BaselineResult(b.name, "FAIL", [f"exit status {code}"] + err.strip().splitlines()))
                continue
            msgs = []
            for produced, expected in b.outputs.items():
                p = out / produced
                if not p.is_file():
                    msgs.append(f"command did not produce {produced}")
                    continue
                if regenerate:
                    shutil.copyfile(p, golden / expected)
                    continue
                msgs += [f"{expected}: {m}" for m in compare_csv(p.read_text(), (golden / expected).read_text(), b.rule)]
            results.append(BaselineResult(b.name, "FAIL" if msgs else "PASS", msgs))
    finally:
        if tmp is not None:
            shutil.rmtree(tmp, ignore_errors=True)
    return GoldenReport(results, None if tmp else root)
