"""Reading and writing S-parameter data and sweep results.

Readers reject malformed input instead of repairing it, and every error
names the offending line (and column for CSV).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.signal import find_peaks as _sp_find_peaks

from nanores.acsolver import SParameterSweep
from nanores.resonance import Resonance, ResonanceError, lorentzian_fit

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


class ParseError(ValueError):
    def __init__(self, path, line, msg, column=None):
        where = f"{path}:{line}" + (f" column {column}" if column is not None else "")
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line
        self.column = column


@dataclass
class MeasurementRecord:
    source: str
    sweep: SParameterSweep
    present: np.ndarray  # (P, P) bool; absent entries hold NaN
    temperature: float | None = None
    metadata: dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Touchstone v1, 2-port


def _parse_option_line(tokens, path, lineno):
    unit, fmt, z = "GHZ", "MA", 50.0
    toks = [t.upper() for t in tokens[1:]]
    i = 0
    while i < len(toks):
        t = toks[i]
        if t in FREQ_UNITS:
            unit = t
        elif t in ("RI", "MA", "DB"):
            fmt = t
        elif t == "S":
            pass
        elif t in ("Y", "Z", "H", "G"):
            raise ParseError(path, lineno, f"only S parameters are supported, got {t}")
        elif t == "R":
            if i + 1 >= len(toks):
                raise ParseError(path, lineno, "option line: R without reference impedance")
            try:
                z = float(toks[i + 1])
            except ValueError:
                raise ParseError(path, lineno, f"option line: bad reference impedance {toks[i + 1]!r}") from None
            if not z > 0:
                raise ParseError(path, lineno, "option line: reference impedance must be positive")
            i += 1
        else:
            raise ParseError(path, lineno, f"malformed option line token {tokens[i + 1]!r}")
        i += 1
    return unit, fmt, z


def _to_complex(a, b, fmt):
    if fmt == "RI":
        return complex(a, b)
    mag = 10.0 ** (a / 20.0) if fmt == "DB" else a
    return mag * complex(math.cos(math.radians(b)), math.sin(math.radians(b)))


def read_touchstone(path) -> MeasurementRecord:
    path = Path(path)
    text = path.read_text()
    option = None
    freqs, mats = [], []
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("!", 1)
        body = line[0].strip()
        if len(line) > 1 and ":" in line[1]:
            k, v = line[1].split(":", 1)
            meta[k.strip()] = v.strip()
        if not body:
            continue
        if body.startswith("#"):
            if option is not None:
                raise ParseError(path, lineno, "duplicate option line")
            option = _parse_option_line(body.split(), path, lineno)
            continue
        if option is None:
            option = ("GHZ", "MA", 50.0)
        tok = body.split()
        if len(tok) != 9:
            raise ParseError(path, lineno, f"expected 9 columns for a 2-port data line, got {len(tok)}")
        try:
            vals = [float(t) for t in tok]
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-numeric value ({exc})") from None
        f = vals[0] * FREQ_UNITS[option[0]]
        if freqs and f <= freqs[-1]:
            raise ParseError(path, lineno, "frequencies must be strictly increasing")
        s11, s21, s12, s22 = (_to_complex(vals[k], vals[k + 1], option[1]) for k in (1, 3, 5, 7))
        freqs.append(f)
        mats.append([[s11, s12], [s21, s22]])
    if not freqs:
        raise ParseError(path, len(text.splitlines()), "no data lines")
    temp = None
    for key in ("temperature", "Temperature", "T"):
        if key in meta:
            try:
                temp = float(meta[key].rstrip("Kk ").strip())
            except ValueError:
                pass
            break
    sweep = SParameterSweep(np.array(freqs), np.array(mats), np.array([option[2]] * 2))
    return MeasurementRecord(str(path), sweep, np.ones((2, 2), bool), temp, meta)


def write_touchstone(sweep: SParameterSweep, path, fmt: str = "RI", unit: str = "GHz", overwrite: bool = True) -> None:
    if sweep.n_ports != 2:
        raise ValueError("Touchstone v1 writer supports 2-port data only")
    if len(set(sweep.z_ref)) != 1:
        raise ValueError("Touchstone v1 needs a single reference impedance")
    scale = FREQ_UNITS[unit.upper()]
    out = [f"# {unit} S {fmt.upper()} R {float(sweep.z_ref[0])!r}"]
    for f, s in zip(sweep.frequencies, sweep.s):
        cols = [repr(float(f) / scale)]
        for z in (s[0, 0], s[1, 0], s[0, 1], s[1, 1]):
            if fmt.upper() == "RI":
                cols += [repr(float(z.real)), repr(float(z.imag))]
            elif fmt.upper() == "MA":
                cols += [repr(float(abs(z))), repr(math.degrees(float(np.angle(z))))]
            else:
                db = 20 * math.log10(abs(z)) if z != 0 else -math.inf
                cols += [repr(db), repr(math.degrees(float(np.angle(z))))]
        out.append(" ".join(cols))
    _write_text(Path(path), "\n".join(out) + "\n", overwrite)


# ---------------------------------------------------------------------------
# CSV


@dataclass(frozen=True)
class CsvMapping:
    """Column mapping for :func:`read_csv_sweep`.

    ``s`` maps an S-entry name (``"S21"``) to its magnitude column and an
    optional phase column (degrees).  Columns are header names or 0-based
    indices.  ``magnitude`` is ``"db"`` or ``"linear"``.
    """

    frequency: str | int = 0
    s: Mapping[str, tuple] = field(default_factory=lambda: {"S21": (1, None)})
    frequency_unit: str = "Hz"
    magnitude: str = "db"
    z_ref: float = 50.0


def _col_index(header, col, path):
    if isinstance(col, int):
        if not 0 <= col < len(header):
            raise ParseError(path, 1, f"column index {col} out of range", column=col)
        return col
    if col not in header:
        raise ParseError(path, 1, f"mapped column {col!r} not in header {header}")
    return header.index(col)


def read_csv_sweep(path, mapping: CsvMapping | None = None) -> MeasurementRecord:
    mapping = mapping or CsvMapping()
    path = Path(path)
    if mapping.magnitude not in ("db", "linear"):
        raise ValueError("magnitude must be 'db' or 'linear'")
    unit = mapping.frequency_unit.upper()
    if unit not in FREQ_UNITS:
        raise ValueError(f"unknown frequency unit {mapping.frequency_unit!r}")
    rows = []
    header = None
    meta: dict[str, str] = {}
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.lstrip().startswith("#"):
                body = line.lstrip()[1:]
                if ":" in body:
                    k, v = body.split(":", 1)
                    meta[k.strip()] = v.strip()
                continue
            if not line.strip():
                continue
            rec = next(csv.reader([line]))
            if header is None:
                header = [h.strip() for h in rec]
                continue
            rows.append((lineno, [c.strip() for c in rec]))
    if header is None:
        raise ParseError(path, 0, "empty file")
    if not rows:
        raise ParseError(path, 1, "header without data rows")
    fi = _col_index(header, mapping.frequency, path)
    entries = {}
    for name, cols in mapping.s.items():
        name = name.upper()
        if len(name) != 3 or name[0] != "S" or name[1] not in "12" or name[2] not in "12":
            raise ValueError(f"unsupported S entry {name!r}")
        mag_col, ph_col = (tuple(cols) + (None,))[:2]
        entries[(int(name[1]) - 1, int(name[2]) - 1)] = (
            _col_index(header, mag_col, path),
            None if ph_col is None else _col_index(header, ph_col, path),
        )
    if not entries:
        raise ValueError("mapping must name at least one S column")
    freqs = []
    s = np.full((len(rows), 2, 2), np.nan + 0j)
    for r, (lineno, rec) in enumerate(rows):
        if len(rec) != len(header):
            raise ParseError(path, lineno, f"expected {len(header)} cells, got {len(rec)}")

        def num(c):
            try:
                return float(rec[c])
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric cell {rec[c]!r}", column=c) from None

        f = num(fi) * FREQ_UNITS[unit]
        if freqs and f <= freqs[-1]:
            raise ParseError(path, lineno, "frequencies must be strictly increasing", column=fi)
        freqs.append(f)
        for (i, j), (mc, pc) in entries.items():
            m = num(mc)
            mag = 10.0 ** (m / 20.0) if mapping.magnitude == "db" else m
            ph = math.radians(num(pc)) if pc is not None else 0.0
            s[r, i, j] = mag * complex(math.cos(ph), math.sin(ph))
    present = np.zeros((2, 2), bool)
    for ij in entries:
        present[ij] = True
    sweep = SParameterSweep(np.array(freqs), s, np.array([mapping.z_ref] * 2))
    return MeasurementRecord(str(path), sweep, present, None, meta)


def fit_measured_q(
    record: MeasurementRecord,
    band: tuple[float, float] | None = None,
    response: tuple[int, int] = (2, 1),
    prominence_db: float = 6.0,
) -> Resonance:
    """Fit the single resonance inside ``band`` with a Lorentzian on |S_ij|^2."""
    i, j = response
    if not record.present[i - 1, j - 1]:
        raise ResonanceError(f"S{i}{j} is absent from {record.source}")
    sw = record.sweep if band is None else record.sweep.band(*band)
    if len(sw) < 5:
        raise ResonanceError("no resonance found: fewer than 5 points in band")
    f = sw.frequencies
    power = np.abs(sw.sij(i, j)) ** 2
    db = 10.0 * np.log10(np.maximum(power, 1e-300))
    peaks, _ = _sp_find_peaks(db, prominence=prominence_db)
    if len(peaks) == 0:
        raise ResonanceError("no resonance found in band")
    if len(peaks) > 1:
        raise ResonanceError(
            f"{len(peaks)} resonances in band ({', '.join(f'{f[k]:.6g}' for k in peaks)} Hz); narrow the band"
        )
    fit = lorentzian_fit(f, power)
    if not f[0] <= fit.f0 <= f[-1]:
        raise ResonanceError("fitted centre lies outside the band")
    return Resonance(fit.f0, fit.kappa, fit.amplitude, "unknown")


# ---------------------------------------------------------------------------
# CSV writers


def _write_text(path: Path, text: str, overwrite: bool) -> None:
    if path.exists() and not overwrite:
        raise FileExistsError(f"refusing to overwrite existing file {path}")
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def sweep_to_csv(sweep: SParameterSweep, comments: Mapping[str, str] | None = None) -> str:
    P = sweep.n_ports
    buf = io.StringIO()
    buf.write("# kind: s-parameters\n")
    buf.write(f"# ports: {P}\n")
    buf.write("# z_ref_ohm: " + " ".join(repr(float(z)) for z in sweep.z_ref) + "\n")
    for k, v in (comments or {}).items():
        buf.write(f"# {k}: {v}\n")
    cols = ["frequency_Hz"]
    for i in range(P):
        for j in range(P):
            cols += [f"S{i + 1}{j + 1}_re", f"S{i + 1}{j + 1}_im"]
    cols.append("status")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for f, s, flag in zip(sweep.frequencies, sweep.s, sweep.flags):
        row = [repr(float(f))]
        for i in range(P):
            for j in range(P):
                row += [repr(float(s[i, j].real)), repr(float(s[i, j].imag))]
        row.append("perturbed" if flag else "ok")
        w.writerow(row)
    return buf.getvalue()


def sweep_result_to_csv(result, comments: Mapping[str, str] | None = None) -> str:
    from nanores.sweep import OBS_UNITS, PARAM_UNITS

    buf = io.StringIO()
    buf.write("# kind: sweep\n")
    if result.spec is not None:
        buf.write(f"# spec: {result.spec.base!r}\n")
        buf.write(f"# mode: {result.spec.mode}\n")
    for k, v in (comments or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([
        f"{result.parameter}[{PARAM_UNITS[result.parameter]}]",
        f"{result.observable}[{OBS_UNITS[result.observable]}]",
        "f_res[Hz]",
        "status",
    ])
    for r in result.rows:
        w.writerow([repr(float(r.value)), repr(float(r.observable)), repr(float(r.f_res)), r.status])
    return buf.getvalue()


def write_sweep_csv(obj, path, overwrite: bool = True, comments: Mapping[str, str] | None = None) -> None:
    """Write an SParameterSweep or a SweepResult as CSV with ``#`` provenance lines."""
    if isinstance(obj, SParameterSweep):
        text = sweep_to_csv(obj, comments)
    else:
        text = sweep_result_to_csv(obj, comments)
    _write_text(Path(path), text, overwrite)


def read_sweep_csv(path) -> SParameterSweep:
    """Read back a CSV written by :func:`write_sweep_csv` for an SParameterSweep."""
    path = Path(path)
    z_ref = None
    header = None
    freqs, rows, flags = [], [], []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.startswith("#"):
                if line.startswith("# z_ref_ohm:"):
                    z_ref = [float(t) for t in line.split(":", 1)[1].split()]
                continue
            if not line.strip():
                continue
            rec = next(csv.reader([line]))
            if header is None:
                header = rec
                continue
            if len(rec) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} cells, got {len(rec)}")
            try:
                vals = [float(c) for c in rec[:-1]]
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            freqs.append(vals[0])
            rows.append(vals[1:])
            flags.append(0 if rec[-1] == "ok" else 1)
    if z_ref is None or header is None:
        raise ParseError(path, 1, "missing z_ref comment or header")
    if not rows:
        raise ParseError(path, 1, "header without data rows")
    P = len(z_ref)
    a = np.array(rows)
    s = (a[:, 0::2] + 1j * a[:, 1::2]).reshape(len(freqs), P, P)
    return SParameterSweep(np.array(freqs), s, np.array(z_ref), np.array(flags))


def yield_to_csv(res, seed: int, comments: Mapping[str, str] | None = None) -> str:
    buf = io.StringIO()
    buf.write("# kind: monte-carlo\n")
    buf.write(f"# seed: {seed}\n")
    buf.write("# generator: numpy Philox4x64\n")
    buf.write(f"# yield: {res.yield_fraction!r}\n")
    for k, v in (comments or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample"] + list(res.names) + ["observable", "pass", "status"])
    for i in range(len(res.observations)):
        w.writerow([i] + [repr(float(v)) for v in res.samples[i]] + [repr(float(res.observations[i])), int(res.passed[i]), res.status[i]])
    return buf.getvalue()
