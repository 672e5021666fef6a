"""Resonance extraction: peak finding, Lorentzian fits, complex-pole search and
the bias-line decay difference.

``kappa`` is always the full width at half maximum of |S21|^2 in ordinary
frequency (Hz), i.e. the energy decay rate divided by 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import least_squares

from nanores.acsolver import (
    SParameterSweep,
    compile_graph,
    compute_s_parameters,
    log_characteristic,
)
from nanores.constants import TWO_PI
from nanores.netlist import CircuitGraph, CoupledResonatorParams, build_coupled_nanowire_circuit

LABELS = ("in-phase", "out-of-phase", "bias-line", "unknown")


class ResonanceError(RuntimeError):
    pass


class FitError(ResonanceError):
    """Lorentzian fit failed; carries the last iterate and its residual norm."""

    def __init__(self, msg, params=None, residual=None):
        super().__init__(msg)
        self.params = params
        self.residual = residual


class PoleSearchError(ResonanceError):
    pass


@dataclass(frozen=True)
class Resonance:
    f_res: float
    kappa: float
    amplitude: float = float("nan")
    label: str = "unknown"

    def __post_init__(self):
        if not self.f_res > 0:
            raise ValueError("f_res must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.label not in LABELS:
            raise ValueError(f"unknown mode label {self.label!r}")

    @property
    def Q_loaded(self) -> float:
        return self.f_res / self.kappa


@dataclass(frozen=True)
class PeakCandidate:
    frequency: float
    width: float
    height_db: float
    index: int


@dataclass(frozen=True)
class LorentzianFit:
    f0: float
    kappa: float
    amplitude: float
    baseline: float
    residual_norm: float
    iterations: int

    def model(self, f):
        return lorentzian(f, self.f0, self.kappa, self.amplitude, self.baseline)


@dataclass(frozen=True)
class ComplexPole:
    f_res: float
    kappa: float
    omega: complex
    iterations: int


@dataclass(frozen=True)
class DeltaKappaResult:
    kappa_with: float
    kappa_without: float
    delta_kappa: float
    f_with: float
    f_without: float
    label: str
    kappa_fit_with: float = float("nan")
    kappa_fit_without: float = float("nan")


def lorentzian(f, f0, kappa, amplitude, baseline):
    hw2 = (0.5 * kappa) ** 2
    return amplitude * hw2 / ((np.asarray(f) - f0) ** 2 + hw2) + baseline


# ---------------------------------------------------------------------------
# peak finding


def _half_max_width(f, p, i) -> float:
    """Width between the half-maximum crossings of power trace ``p`` around index ``i``."""
    half = 0.5 * p[i]
    lo = i
    while lo > 0 and p[lo] > half:
        lo -= 1
    hi = i
    while hi < len(p) - 1 and p[hi] > half:
        hi += 1
    if p[lo] <= half < p[lo + 1]:
        left = f[lo] + (half - p[lo]) * (f[lo + 1] - f[lo]) / (p[lo + 1] - p[lo])
    else:
        left = f[lo]
    if p[hi] <= half < p[hi - 1]:
        right = f[hi - 1] + (p[hi - 1] - half) * (f[hi] - f[hi - 1]) / (p[hi - 1] - p[hi])
    else:
        right = f[hi]
    width = right - left
    if width <= 0:
        width = f[min(i + 1, len(f) - 1)] - f[max(i - 1, 0)]
    return float(width)


def find_peaks(
    sweep: SParameterSweep,
    response: tuple[int, int] = (2, 1),
    band: tuple[float, float] | None = None,
    prominence_db: float = 6.0,
    median_halfwidth: int | None = None,
) -> list[PeakCandidate]:
    """Local maxima of |S_ij| standing ``prominence_db`` above the running median.

    The running median (in dB) spans ``2 * median_halfwidth + 1`` points,
    by default one sixteenth of the band on each side.
    """
    f = sweep.frequencies
    trace = sweep.sij(*response)
    if band is not None:
        m = (f >= band[0]) & (f <= band[1])
        f, trace = f[m], trace[m]
    n = len(f)
    if n == 0:
        return []
    if n < 16:
        raise ResonanceError(f"need at least 16 points in band, got {n}")
    mag = np.abs(trace)
    db = 20.0 * np.log10(np.maximum(mag, 1e-300))
    hw = median_halfwidth if median_halfwidth is not None else max(8, n // 16)
    padded = np.pad(db, hw, mode="edge")
    med = np.median(sliding_window_view(padded, 2 * hw + 1), axis=1)
    power = mag**2
    out = []
    for i in range(1, n - 1):
        if db[i] > db[i - 1] and db[i] >= db[i + 1] and db[i] - med[i] >= prominence_db:
            out.append(PeakCandidate(float(f[i]), _half_max_width(f, power, i), float(db[i]), i))
    return out


# ---------------------------------------------------------------------------
# Lorentzian fit


def lorentzian_fit(
    freqs: Sequence[float],
    power: Sequence[float],
    f0_guess: float | None = None,
    kappa_guess: float | None = None,
    max_iter: int = 200,
    xtol: float = 1e-10,
) -> LorentzianFit:
    """Least-squares fit of ``A (k/2)^2 / ((f - f0)^2 + (k/2)^2) + B`` to |S|^2 data.

    Raises FitError if the relative parameter step has not dropped below
    ``xtol`` within ``max_iter`` iterations.
    """
    f = np.asarray(freqs, dtype=float)
    y = np.asarray(power, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise FitError("frequency and power arrays must be 1-D and equal length")
    if len(f) < 5:
        raise FitError(f"need at least 5 points, got {len(f)}")
    if not np.all(np.isfinite(y)):
        raise FitError("non-finite power values")
    i_max = int(np.argmax(y))
    y_scale = float(np.max(np.abs(y))) or 1.0
    yn = y / y_scale
    if f0_guess is None:
        f0_guess = float(f[i_max])
    if kappa_guess is None:
        kappa_guess = _half_max_width(f, yn - np.min(yn), i_max)
    if not kappa_guess > 0:
        kappa_guess = float(np.ptp(f)) / 10 or 1.0
    fc, s = float(f0_guess), float(kappa_guess)
    u = (f - fc) / s
    b0 = float(np.min(yn))
    p0 = np.array([0.0, 1.0, max(float(yn[i_max]) - b0, 1e-12), b0])

    def resid(p):
        u0, w, a, b = p
        hw2 = 0.25 * w * w
        return a * hw2 / ((u - u0) ** 2 + hw2) + b - yn

    def jac(p):
        u0, w, a, b = p
        hw2 = 0.25 * w * w
        d = (u - u0) ** 2 + hw2
        lor = hw2 / d
        J = np.empty((len(u), 4))
        J[:, 0] = a * hw2 * 2.0 * (u - u0) / d**2
        J[:, 1] = a * 0.5 * w * (u - u0) ** 2 / d**2
        J[:, 2] = lor
        J[:, 3] = 1.0
        return J

    res = least_squares(resid, p0, jac=jac, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)
    u0, w, a, b = res.x
    rnorm = float(np.linalg.norm(res.fun) * y_scale)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(
            f"Lorentzian fit did not converge after {res.nfev} evaluations: {res.message}",
            params=(fc + u0 * s, abs(w) * s, a * y_scale, b * y_scale),
            residual=rnorm,
        )
    return LorentzianFit(
        f0=fc + u0 * s,
        kappa=abs(w) * s,
        amplitude=a * y_scale,
        baseline=b * y_scale,
        residual_norm=rnorm,
        iterations=int(res.nfev),
    )


def refine_and_fit(
    graph: CircuitGraph,
    candidate: PeakCandidate,
    response: tuple[int, int] = (2, 1),
    points: int = 101,
    fit_window: float = 3.0,
    refine_factor: float = 4.0,
    max_points: int = 1_000_000,
    label: str = "unknown",
) -> Resonance:
    """Re-solve the network on successively narrower grids around a peak and
    fit a Lorentzian until kappa changes by less than 1 % between levels.

    The first grid spans +-2 candidate widths; each level shrinks the span by
    ``refine_factor`` but never below ``fit_window`` fitted linewidths.
    """
    compile_graph(graph)  # validate once up front
    center = candidate.frequency
    half = 2.0 * max(candidate.width, 1e-9 * center)
    kappa_prev = None
    used = 0
    while True:
        f = np.linspace(center - half, center + half, points)
        f = f[f > 0]
        used += len(f)
        sw = compute_s_parameters(graph, f)
        power = np.abs(sw.sij(*response)) ** 2
        try:
            fit = lorentzian_fit(f, power)
        except FitError as exc:
            raise ResonanceError(f"fit failed near {center:.6g} Hz: {exc}") from exc
        if not (fit.kappa > 0 and f[0] <= fit.f0 <= f[-1]):
            raise ResonanceError(f"fit near {center:.6g} Hz left the refinement window")
        target = fit_window * fit.kappa
        in_window = half <= target * 1.0001
        if kappa_prev is not None and abs(fit.kappa - kappa_prev) < 0.01 * fit.kappa and in_window:
            return Resonance(fit.f0, fit.kappa, fit.amplitude, label)
        if used >= max_points:
            raise ResonanceError(f"refinement exceeded {max_points} points without converging near {center:.6g} Hz")
        kappa_prev = fit.kappa
        center = fit.f0
        half = max(half / refine_factor, target)


# ---------------------------------------------------------------------------
# complex-frequency pole search


def find_complex_pole(
    graph: CircuitGraph,
    f_guess: float,
    tol: float = 1e-12,
    max_iter: int = 100,
    band: float = 0.1,
    compiled=None,
) -> ComplexPole:
    """Natural frequency of the port-terminated network nearest ``f_guess``.

    Secant iteration on the characteristic function (see
    ``acsolver.log_characteristic``), carried in log form so the iteration is
    insensitive to the determinant's scale.  With the e^{+i omega t}
    convention the pole sits at omega_res + i pi kappa.
    """
    c = compiled or compile_graph(graph)
    w0 = TWO_PI * complex(f_guess)
    w1 = w0 * (1.0 + 1e-5)
    l0 = log_characteristic(graph, w0, c)
    l1 = log_characteristic(graph, w1, c)
    for it in range(1, max_iter + 1):
        if l1.real == -np.inf:  # landed exactly on the zero
            return ComplexPole(w1.real / TWO_PI, 2.0 * w1.imag / TWO_PI, complex(w1), it)
        ratio = np.exp(l0 - l1)
        denom = 1.0 - ratio
        if denom == 0 or not np.isfinite(denom):
            raise PoleSearchError(f"secant stalled near {w1.real / TWO_PI:.6g} Hz")
        w2 = w1 - (w1 - w0) / denom
        if not np.isfinite(w2) or abs(w2.real / TWO_PI - f_guess) > band * 2 * f_guess:
            raise PoleSearchError(
                f"pole search from {f_guess:.6g} Hz left the seed band (at {w2.real / TWO_PI:.6g} Hz)"
            )
        w0, l0 = w1, l1
        w1 = w2
        l1 = log_characteristic(graph, w1, c)
        if abs(w1 - w0) < tol * abs(w1):
            return ComplexPole(w1.real / TWO_PI, 2.0 * w1.imag / TWO_PI, complex(w1), it)
    raise PoleSearchError(f"pole search from {f_guess:.6g} Hz did not converge in {max_iter} iterations")


def find_modes(graph: CircuitGraph, f_min: float, f_max: float, n_scan: int = 241) -> list[ComplexPole]:
    """All natural frequencies whose real part lies in [f_min, f_max].

    Seeds are local minima of |characteristic| along the real axis.
    """
    c = compile_graph(graph)
    fs = np.linspace(f_min, f_max, n_scan)
    mag = np.array([log_characteristic(graph, TWO_PI * x, c).real for x in fs])
    seeds = [fs[i] for i in range(1, n_scan - 1) if mag[i] < mag[i - 1] and mag[i] <= mag[i + 1]]
    poles: list[ComplexPole] = []
    step = fs[1] - fs[0]
    for s in seeds:
        try:
            p = find_complex_pole(graph, s, compiled=c, band=max(0.1, 4 * step / s))
        except PoleSearchError:
            continue
        if not f_min <= p.f_res <= f_max:
            continue
        if any(abs(p.f_res - q.f_res) < 1e-7 * p.f_res for q in poles):
            continue
        poles.append(p)
    return sorted(poles, key=lambda p: p.f_res)


def label_modes(with_bias: Sequence[float], without_bias: Sequence[float], guard: float = 0.05) -> list[str]:
    """Label the modes of the full circuit.

    Modes without a partner (within ``guard``) in the bias-free circuit are
    bias-line modes; the rest are named in-phase, out-of-phase in frequency
    order.
    """
    labels = []
    coupled = 0
    for f in with_bias:
        if any(abs(f - g) <= guard * g for g in without_bias):
            labels.append(("in-phase", "out-of-phase")[coupled] if coupled < 2 else "unknown")
            coupled += 1
        else:
            labels.append("bias-line")
    return labels


# ---------------------------------------------------------------------------
# bias-line decay difference

ModeSelector = Union[str, int, float]


def _coupled_modes(params: CoupledResonatorParams) -> list[ComplexPole]:
    bare = params.bare_frequency
    return find_modes(build_coupled_nanowire_circuit(params), 0.2 * bare, 1.2 * bare)


def _select(modes: list[ComplexPole], selector: ModeSelector) -> tuple[ComplexPole, str]:
    if isinstance(selector, str):
        order = {"in-phase": 0, "out-of-phase": 1}
        if selector not in order:
            raise ResonanceError(f"unknown mode selector {selector!r}")
        k = order[selector]
        if len(modes) <= k:
            raise ResonanceError(f"no {selector} mode found (modes at {[m.f_res for m in modes]})")
        return modes[k], selector
    if isinstance(selector, (int, np.integer)):
        return modes[int(selector)], "unknown"
    f = float(selector)
    return min(modes, key=lambda m: abs(m.f_res - f)), "unknown"


def delta_kappa(
    params: CoupledResonatorParams,
    mode: ModeSelector = "in-phase",
    guard: float = 0.05,
    cross_check: bool = False,
) -> DeltaKappaResult:
    """Increase of a mode's decay rate caused by the bias lines.

    Both configurations (``params`` as given and with the bias lines removed)
    are solved by pole search; the same mode is matched by nearest frequency
    within ``guard``.  With ``cross_check`` the Lorentzian route is run too
    and its kappas are stored alongside.
    """
    without = replace(params, include_bias_lines=False)
    modes_without = _coupled_modes(without)
    ref, label = _select(modes_without, mode)
    if params.include_bias_lines:
        g_with = build_coupled_nanowire_circuit(params)
        try:
            p = find_complex_pole(g_with, ref.f_res, band=guard / 2)
        except PoleSearchError:
            p = None
        if p is None or abs(p.f_res - ref.f_res) > guard * ref.f_res:
            modes_with = _coupled_modes(params)
            if not modes_with:
                raise ResonanceError("no modes found with bias lines attached")
            p = min(modes_with, key=lambda m: abs(m.f_res - ref.f_res))
            if abs(p.f_res - ref.f_res) > guard * ref.f_res:
                raise ResonanceError(
                    "mode matching failed: with bias lines "
                    f"{[m.f_res for m in modes_with]} Hz, without {[m.f_res for m in modes_without]} Hz"
                )
    else:
        p = ref
    result = DeltaKappaResult(
        kappa_with=p.kappa,
        kappa_without=ref.kappa,
        delta_kappa=p.kappa - ref.kappa,
        f_with=p.f_res,
        f_without=ref.f_res,
        label=label,
    )
    if cross_check:
        fits = []
        for prm, pole in ((params, p), (without, ref)):
            cand = PeakCandidate(pole.f_res, pole.kappa, float("nan"), -1)
            fits.append(refine_and_fit(build_coupled_nanowire_circuit(prm), cand).kappa)
        result = replace(result, kappa_fit_with=fits[0], kappa_fit_without=fits[1])
    return result


def extract_resonances(
    graph: CircuitGraph,
    sweep: SParameterSweep,
    response: tuple[int, int] = (2, 1),
    band: tuple[float, float] | None = None,
    prominence_db: float = 6.0,
) -> list[Resonance]:
    """Peak-find on ``sweep`` and refine each candidate by pole search."""
    out = []
    for cand in find_peaks(sweep, response, band, prominence_db):
        try:
            p = find_complex_pole(graph, cand.frequency, band=0.05)
        except PoleSearchError:
            continue
        if p.kappa > 0:
            out.append(Resonance(p.f_res, p.kappa, 10 ** (cand.height_db / 20)))
    return out
