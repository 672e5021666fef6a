"""Run configuration: an INI file with a fixed, documented schema.

Every key has a type, a unit and a default; unknown sections or keys are
errors.  Values may use engineering suffixes (``0.77f``, ``83p``).
``--set section.key=value`` overrides are applied on top of the file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from nanores.netlist import NetlistError, parse_value


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Key:
    type: str  # float | int | bool | str | optfloat
    default: Any
    unit: str
    help: str


# Defaults reproduce the nanowire device: 70 nm wire, 38 um gap, silicon
# substrate, 83 pH/sq, 150 um resonators.
SCHEMA: dict[str, dict[str, Key]] = {
    "geometry": {
        "w": Key("float", 70e-9, "m", "centre conductor (nanowire) width"),
        "s": Key("float", 38e-6, "m", "gap from centre conductor to ground planes"),
        "eps_sub": Key("float", 11.6, "1", "substrate relative permittivity"),
        "L_ksheet": Key("float", 83e-12, "H/sq", "sheet kinetic inductance"),
    },
    "circuit": {
        "l": Key("float", 150e-6, "m", "nanowire length"),
        "L_l": Key("float", 1.2e-3, "H/m", "line inductance per length"),
        "C_l": Key("float", 40e-12, "F/m", "line capacitance per length"),
        "use_geometry": Key("bool", False, "-", "take L_l, C_l from [geometry] instead"),
        "C_g": Key("float", 1e-15, "F", "inter-resonator coupling capacitance"),
        "C_k": Key("float", 0.77e-15, "F", "feedline coupling capacitance"),
        "x_b_lambda": Key("float", 0.185, "lambda", "bias tap distance from the C_g end, in units of 2*l"),
        "l_b_lambda": Key("float", 0.30, "lambda", "bias line length, in units of 2*l"),
        "Z_L": Key("float", 50.0, "ohm", "bias port termination"),
        "Z_port": Key("float", 50.0, "ohm", "feedline port reference impedance"),
        "include_bias_lines": Key("bool", True, "-", "attach the bias lines (ports 3, 4)"),
        "netlist": Key("str", "", "path", "simulate this netlist file instead of the built-in device"),
    },
    "simulate": {
        "f_start": Key("float", 2e9, "Hz", "sweep start frequency"),
        "f_stop": Key("float", 14e9, "Hz", "sweep stop frequency"),
        "points": Key("int", 2000, "1", "number of frequency points"),
        "prominence_db": Key("float", 6.0, "dB", "peak prominence above the local median"),
        "response": Key("str", "21", "-", "S entry used for peak finding"),
    },
    "sweep": {
        "parameter": Key("str", "x_b", "-", "swept parameter: x_b l_b C_g C_k l L_l C_l Z_L (x_b, l_b in lambda)"),
        "start": Key("float", 0.10, "param", "sweep start"),
        "stop": Key("float", 0.25, "param", "sweep stop"),
        "points": Key("int", 31, "1", "number of sweep points"),
        "values": Key("str", "", "param", "explicit comma-separated values (overrides start/stop/points)"),
        "observable": Key("str", "delta_kappa", "-", "delta_kappa | f_res | kappa | Q_loaded"),
        "mode": Key("str", "in-phase", "-", "in-phase | out-of-phase"),
        "threshold": Key("float", 1e6, "Hz", "tolerance-window threshold on the observable"),
    },
    "montecarlo": {
        "samples": Key("int", 200, "1", "number of Monte Carlo samples"),
        "threshold": Key("float", 1e6, "Hz", "pass threshold on delta_kappa"),
        "perturb": Key("str", "x_b:uniform:0.025", "-", "comma-separated name:distribution:width (x_b, l_b widths in lambda)"),
    },
    "fom": {
        "mode_frequency": Key("float", 10e9, "Hz", "omega_m / 2 pi"),
        "Z_c": Key("optfloat", None, "ohm", "characteristic impedance (default sqrt(L_l/C_l) of [circuit])"),
        "C_res": Key("optfloat", None, "F", "resonator capacitance (default C_l*l/2)"),
        "eps_eff": Key("optfloat", None, "1", "effective permittivity (default (eps_sub+1)/2)"),
        "h_GaAs": Key("float", 100e-9, "m", "membrane thickness"),
        "dipole_enm": Key("float", 4.0, "e*nm", "exciton dipole moment |d|/e"),
        "eps_GaAs": Key("float", 12.8, "1", "GaAs relative permittivity"),
        "gamma_qd": Key("float", 300e6, "Hz", "exciton decay Gamma_QD / 2 pi"),
        "kappa": Key("float", 0.0, "Hz", "resonator decay kappa / 2 pi"),
        "delta_V": Key("float", 30e-3, "V", "observed gate voltage fluctuation"),
        "h_gap": Key("float", 1e-9, "m", "charge-to-gate gap"),
        "gate_area": Key("float", 4e-12, "m^2", "parallel-plate gate area"),
        "gate_thickness": Key("float", 130e-9, "m", "gate dielectric thickness"),
        "r_loss": Key("optfloat", None, "1", "piezoelectric loss ratio (Q_piezo reported only if set)"),
    },
    "output": {
        "directory": Key("str", ".", "path", "output directory"),
        "spectrum_csv": Key("str", "spectrum.csv", "path", "simulate: S-parameter CSV"),
        "resonances_csv": Key("str", "resonances.csv", "path", "simulate: resonance table"),
        "sweep_csv": Key("str", "sweep.csv", "path", "sweep: result CSV"),
        "montecarlo_csv": Key("str", "montecarlo.csv", "path", "sweep --monte-carlo: sample table"),
        "fom_csv": Key("str", "", "path", "fom: report CSV (empty: print only)"),
        "overwrite": Key("bool", True, "-", "allow overwriting existing outputs"),
    },
    "run": {
        "workers": Key("int", 1, "1", "parallel workers for sweeps"),
        "seed": Key("int", 20240901, "1", "64-bit Monte Carlo seed"),
    },
}


def _convert(key: Key, raw: str, where: str, errors: list[str]):
    raw = raw.strip()
    try:
        if key.type == "float":
            return parse_value(raw)
        if key.type == "optfloat":
            return None if raw in ("", "none", "None") else parse_value(raw)
        if key.type == "int":
            return int(raw)
        if key.type == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except (ValueError, NetlistError) as exc:
        errors.append(f"{where}: {exc}")
        return None


class RunConfig:
    """Validated configuration; ``cfg["circuit"]["C_g"]`` style access."""

    def __init__(self, values: dict[str, dict[str, Any]], source: str = "<defaults>"):
        self.values = values
        self.source = source

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    @classmethod
    def load(cls, path=None, overrides: Iterable[str] = ()) -> "RunConfig":
        errors: list[str] = []
        raw: dict[str, dict[str, str]] = {}
        if path is not None:
            cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
            cp.optionxform = str
            try:
                with open(path) as fh:
                    cp.read_file(fh)
            except (OSError, configparser.Error) as exc:
                raise ConfigError([f"{path}: {exc}"]) from None
            for sec in cp.sections():
                raw[sec] = dict(cp[sec])
        for ov in overrides:
            if "=" not in ov or "." not in ov.split("=", 1)[0]:
                errors.append(f"--set {ov!r}: expected section.key=value")
                continue
            lhs, val = ov.split("=", 1)
            sec, key = lhs.split(".", 1)
            raw.setdefault(sec.strip(), {})[key.strip()] = val
        values = {s: {k: spec.default for k, spec in keys.items()} for s, keys in SCHEMA.items()}
        for sec, items in raw.items():
            if sec not in SCHEMA:
                errors.append(f"[{sec}]: unknown section")
                continue
            for k, v in items.items():
                if k not in SCHEMA[sec]:
                    errors.append(f"{sec}.{k}: unknown key")
                    continue
                conv = _convert(SCHEMA[sec][k], v, f"{sec}.{k}", errors)
                if conv is not None or SCHEMA[sec][k].type == "optfloat":
                    values[sec][k] = conv
        errors += _check(values)
        if errors:
            raise ConfigError(errors)
        return cls(values, str(path) if path else "<defaults>")

    def dump(self) -> str:
        """Canonical INI text of the effective configuration."""
        lines = []
        for sec, keys in SCHEMA.items():
            lines.append(f"[{sec}]")
            for k in keys:
                v = self.values[sec][k]
                lines.append(f"{k} = {'' if v is None else (repr(v) if isinstance(v, float) else v)}")
            lines.append("")
        return "\n".join(lines)


def _check(v) -> list[str]:
    errs = []
    for sec, k in (("geometry", "w"), ("geometry", "s"), ("circuit", "l"), ("circuit", "L_l"), ("circuit", "C_l"),
                   ("circuit", "C_g"), ("circuit", "C_k"), ("circuit", "Z_L"), ("circuit", "Z_port"),
                   ("fom", "mode_frequency"), ("fom", "h_GaAs"), ("fom", "gamma_qd"), ("fom", "h_gap"),
                   ("fom", "gate_area"), ("fom", "gate_thickness")):
        if v[sec][k] is not None and not v[sec][k] > 0:
            errs.append(f"{sec}.{k}: must be positive")
    sim = v["simulate"]
    if not 0 < sim["f_start"] < sim["f_stop"]:
        errs.append("simulate.f_start/f_stop: empty or invalid frequency range")
    if sim["points"] < 16:
        errs.append("simulate.points: need at least 16 points")
    if sim["response"] not in ("11", "12", "21", "22", "31", "41", "13", "14", "33", "44", "34", "43", "23", "24", "32", "42"):
        errs.append("simulate.response: expected two port digits such as 21")
    if not 0 < v["circuit"]["x_b_lambda"] < 0.5:
        errs.append("circuit.x_b_lambda: must lie in (0, 0.5)")
    if not v["circuit"]["l_b_lambda"] > 0:
        errs.append("circuit.l_b_lambda: must be positive")
    from nanores.sweep import OBSERVABLES, PARAMETERS

    sw = v["sweep"]
    if sw["parameter"] not in PARAMETERS:
        errs.append(f"sweep.parameter: unknown parameter {sw['parameter']!r} (expected one of {', '.join(PARAMETERS)})")
    if sw["observable"] not in OBSERVABLES:
        errs.append(f"sweep.observable: unknown observable {sw['observable']!r}")
    if sw["mode"] not in ("in-phase", "out-of-phase"):
        errs.append(f"sweep.mode: unknown mode {sw['mode']!r}")
    if not sw["values"] and not (sw["start"] < sw["stop"] and sw["points"] >= 2):
        errs.append("sweep.start/stop/points: need start < stop and points >= 2")
    if sw["values"]:
        try:
            vals = [parse_value(x) for x in sw["values"].split(",")]
            if len(vals) < 2:
                errs.append("sweep.values: need at least 2 values")
        except NetlistError as exc:
            errs.append(f"sweep.values: {exc}")
    if v["montecarlo"]["samples"] < 1:
        errs.append("montecarlo.samples: must be >= 1")
    try:
        parse_perturbations(v["montecarlo"]["perturb"])
    except ValueError as exc:
        errs.append(f"montecarlo.perturb: {exc}")
    if v["run"]["workers"] < 1:
        errs.append("run.workers: must be >= 1")
    if not 0 <= v["run"]["seed"] < 2**64:
        errs.append("run.seed: must be a 64-bit unsigned integer")
    r = v["fom"]["r_loss"]
    if r is not None and not 0 < r < 1:
        errs.append("fom.r_loss: must lie in (0, 1)")
    return errs


def parse_perturbations(text: str) -> dict[str, tuple[str, float]]:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected name:distribution:width, got {item!r}")
        try:
            out[parts[0]] = (parts[1], parse_value(parts[2]))
        except NetlistError as exc:
            raise ValueError(str(exc)) from None
    return out


def describe_schema() -> str:
    lines = ["configuration keys (section.key [unit] = default: description):"]
    for sec, keys in SCHEMA.items():
        for k, spec in keys.items():
            d = "" if spec.default is None else spec.default
            lines.append(f"  {sec}.{k} [{spec.unit}] = {d!s}: {spec.help}")
    return "\n".join(lines)
