"""One-at-a-time parameter sweeps, tolerance windows and Monte Carlo yield
for the coupled nanowire resonator.

``x_b`` and ``l_b`` are swept and perturbed in units of the bare wavelength
lambda = 2 l; every other parameter is in SI units.

Monte Carlo draws come from numpy's Philox4x64 counter-based generator
seeded with the 64-bit ``seed``.  The whole sample matrix is drawn up front
(one row per sample, columns in sorted parameter-name order), so results do
not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from nanores.netlist import CoupledResonatorParams, NetlistError
from nanores.resonance import ResonanceError, delta_kappa

PARAMETERS = ("x_b", "l_b", "C_g", "C_k", "l", "L_l", "C_l", "Z_L")
PARAM_UNITS = {"x_b": "lambda", "l_b": "lambda", "C_g": "F", "C_k": "F", "l": "m", "L_l": "H/m", "C_l": "F/m", "Z_L": "ohm"}
OBSERVABLES = ("delta_kappa", "f_res", "kappa", "Q_loaded")
OBS_UNITS = {"delta_kappa": "Hz", "f_res": "Hz", "kappa": "Hz", "Q_loaded": "1"}


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base: CoupledResonatorParams
    parameter: str
    values: tuple[float, ...]
    observable: str = "delta_kappa"
    mode: str = "in-phase"

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise SweepError(f"unknown sweep parameter {self.parameter!r}; expected one of {PARAMETERS}")
        if self.observable not in OBSERVABLES:
            raise SweepError(f"unknown observable {self.observable!r}; expected one of {OBSERVABLES}")
        if len(self.values) < 2:
            raise SweepError("a sweep needs at least 2 points")

    @classmethod
    def linear(cls, base, parameter, start, stop, points, **kw) -> "SweepSpec":
        if not start < stop:
            raise SweepError("sweep range needs start < stop")
        if points < 2:
            raise SweepError("a sweep needs at least 2 points")
        return cls(base, parameter, tuple(float(v) for v in np.linspace(start, stop, int(points))), **kw)


@dataclass(frozen=True)
class SweepRow:
    value: float
    observable: float
    f_res: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class SweepResult:
    parameter: str
    observable: str
    rows: list[SweepRow]
    spec: SweepSpec | None = None

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    @property
    def observations(self) -> np.ndarray:
        return np.array([r.observable for r in self.rows])

    def argmin(self) -> float:
        y = np.where([r.ok for r in self.rows], self.observations, np.inf)
        return float(self.values[int(np.argmin(y))])


@dataclass(frozen=True)
class ToleranceWindow:
    lower: float
    upper: float
    lower_bounded: bool
    upper_bounded: bool
    argmin: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)


def apply_parameter(base: CoupledResonatorParams, name: str, value: float) -> CoupledResonatorParams:
    if name == "x_b":
        return base.with_fractions(x_b=value)
    if name == "l_b":
        return base.with_fractions(l_b=value)
    if name == "l":
        return base.with_fractions(x_b=base.x_b_fraction, l_b=base.l_b_fraction, l=value)
    if name not in PARAMETERS:
        raise SweepError(f"unknown parameter {name!r}")
    return replace(base, **{name: value})


def evaluate(params: CoupledResonatorParams, observable: str = "delta_kappa", mode: str = "in-phase") -> tuple[float, float]:
    """(observable, mode frequency) at one parameter set."""
    r = delta_kappa(params, mode)
    if observable == "delta_kappa":
        return r.delta_kappa, r.f_with
    if observable == "f_res":
        return r.f_with, r.f_with
    if observable == "kappa":
        return r.kappa_with, r.f_with
    return r.f_with / r.kappa_with, r.f_with


def _sweep_point(args) -> SweepRow:
    base, name, value, observable, mode = args
    try:
        obs, f = evaluate(apply_parameter(base, name, value), observable, mode)
    except (ResonanceError, NetlistError, ValueError, np.linalg.LinAlgError) as exc:
        msg = str(exc).splitlines()[0].replace(",", ";")
        return SweepRow(value, math.nan, math.nan, f"failed: {msg}")
    return SweepRow(value, float(obs), float(f))


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    values = sorted(spec.values)
    jobs = [(spec.base, spec.parameter, v, spec.observable, spec.mode) for v in values]
    rows = _map(_sweep_point, jobs, workers)
    return SweepResult(spec.parameter, spec.observable, rows, spec)


def _crossing(x0, y0, x1, y1, level):
    if y1 == y0:
        return x0
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def tolerance_window(result: SweepResult, threshold: float) -> ToleranceWindow:
    """Parameter interval around the minimum where the observable stays below
    ``threshold``, with edges linearly interpolated between sweep points.

    A side on which the threshold is never crossed is reported at the sweep
    end and marked unbounded.
    """
    pts = [(r.value, r.observable) for r in result.rows if r.ok and np.isfinite(r.observable)]
    if len(pts) < 2:
        raise SweepError("need at least 2 valid sweep points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    i = int(np.argmin(y))
    if y[i] >= threshold:
        raise SweepError(f"observable never drops below threshold {threshold!r}")
    lo, lo_b = float(x[0]), False
    for k in range(i, 0, -1):
        if y[k - 1] >= threshold:
            lo, lo_b = float(_crossing(x[k - 1], y[k - 1], x[k], y[k], threshold)), True
            break
    hi, hi_b = float(x[-1]), False
    for k in range(i, len(x) - 1):
        if y[k + 1] >= threshold:
            hi, hi_b = float(_crossing(x[k], y[k], x[k + 1], y[k + 1], threshold)), True
            break
    return ToleranceWindow(lo, hi, lo_b, hi_b, float(x[i]))


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class Perturbation:
    distribution: str  # "uniform" (half-width) or "normal" (sigma)
    width: float

    def __post_init__(self):
        if self.distribution not in ("uniform", "normal"):
            raise SweepError(f"unknown distribution {self.distribution!r}")
        if not self.width >= 0:
            raise SweepError("perturbation width must be >= 0")


@dataclass(frozen=True)
class PerturbationSpec:
    perturbations: dict[str, Perturbation]
    samples: int = 100
    threshold: float = 1e6
    observable: str = "delta_kappa"
    mode: str = "in-phase"

    def __post_init__(self):
        if self.samples < 1:
            raise SweepError("sample count must be >= 1")
        bad = set(self.perturbations) - set(PARAMETERS)
        if bad:
            raise SweepError(f"unknown perturbed parameter(s) {sorted(bad)}")


@dataclass
class YieldResult:
    yield_fraction: float
    names: list[str]
    samples: np.ndarray  # (n, len(names)) parameter values
    observations: np.ndarray
    passed: np.ndarray
    status: list[str]


def _design_value(base: CoupledResonatorParams, name: str) -> float:
    if name == "x_b":
        return base.x_b_fraction
    if name == "l_b":
        return base.l_b_fraction
    return float(getattr(base, name))


def draw_samples(base: CoupledResonatorParams, pert: PerturbationSpec, seed: int) -> tuple[list[str], np.ndarray]:
    rng = np.random.Generator(np.random.Philox(seed))
    names = sorted(pert.perturbations)
    u = rng.random((pert.samples, len(names)))
    z = rng.standard_normal((pert.samples, len(names)))
    out = np.empty_like(u)
    for j, name in enumerate(names):
        p = pert.perturbations[name]
        centre = _design_value(base, name)
        if p.distribution == "uniform":
            out[:, j] = centre + p.width * (2.0 * u[:, j] - 1.0)
        else:
            out[:, j] = centre + p.width * z[:, j]
    return names, out


def _mc_point(args):
    base, names, row, observable, mode = args
    params = base
    try:
        for n, v in zip(names, row):
            params = apply_parameter(params, n, float(v))
        obs, _ = evaluate(params, observable, mode)
    except (ResonanceError, NetlistError, ValueError, np.linalg.LinAlgError) as exc:
        return math.nan, "failed: " + str(exc).splitlines()[0].replace(",", ";")
    return float(obs), "ok"


def monte_carlo_yield(base: CoupledResonatorParams, pert: PerturbationSpec, seed: int, workers: int = 1) -> YieldResult:
    """Fraction of jointly perturbed designs whose observable is below the threshold."""
    names, samples = draw_samples(base, pert, seed)
    jobs = [(base, names, samples[i], pert.observable, pert.mode) for i in range(pert.samples)]
    res = _map(_mc_point, jobs, workers)
    obs = np.array([r[0] for r in res])
    status = [r[1] for r in res]
    passed = np.array([s == "ok" and o < pert.threshold for o, s in zip(obs, status)])
    return YieldResult(float(np.mean(passed)), names, samples, obs, passed, status)
