"""Acceptance criteria, one test each, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

import csv
import io
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from nanores import transducer as td
from nanores.acsolver import compute_s_parameters
from nanores.cli import main
from nanores.cpwgeom import CpwGeometry, LineParams, cpw_capacitance_per_length, total_inductance_per_length
from nanores.golden import DATA_DIR, run_golden_suite
from nanores.netlist import CircuitGraph, CoupledResonatorParams, Lumped, Port, TLineSegment, build_coupled_nanowire_circuit
from nanores.resonance import delta_kappa, lorentzian, lorentzian_fit

RESULTS: list[str] = []
NANOWIRE = CpwGeometry(w=70e-9, s=38e-6, eps_sub=11.6, L_ksheet=83e-12)


def report(n: int, title: str, checks: dict[str, bool], detail: str) -> None:
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {title} | {detail}"
    if failed:
        line += " | failed: " + ", ".join(failed)
    print(line)
    RESULTS.append(line)
    assert ok, line


def cli(*argv) -> str:
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    assert code == 0, err.getvalue()
    return out.getvalue()


def read_rows(path: Path) -> list[dict]:
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def sweep_curve(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = read_rows(path)
    keys = list(rows[0])
    return np.array([float(r[keys[0]]) for r in rows]), np.array([float(r[keys[1]]) for r in rows])


def test_criterion_01_cpw_capacitance():
    c = cpw_capacitance_per_length(NANOWIRE)
    n = 2000
    t = time.perf_counter()
    for _ in range(n):
        cpw_capacitance_per_length(NANOWIRE)
    dt = (time.perf_counter() - t) / n
    report(1, "CPW capacitance", {"C_l within 5% of 40 pF/m": abs(c / 40e-12 - 1) <= 0.05, "runtime < 1 ms": dt < 1e-3},
           f"C_l = {c * 1e12:.3f} pF/m, {dt * 1e6:.1f} us/call")


def test_criterion_02_kinetic_inductance():
    lt = total_inductance_per_length(NANOWIRE)
    z = LineParams.from_lc(1.2e-3, 40e-12, 6.3).Z_c
    report(2, "kinetic inductance and impedance",
           {"L_l within 2% of 1.2 mH/m": abs(lt / 1.2e-3 - 1) <= 0.02,
            "Z_c = 5477 ohm": abs(z - 5477) < 0.5,
            "reported as 5.5 kOhm": f"{z / 1e3:.1f}" == "5.5"},
           f"L_l = {lt * 1e3:.4f} mH/m, Z_c = {z:.1f} ohm")


def test_criterion_03_full_spectrum(tmp_path):
    cli("simulate", "-c", DATA_DIR / "default.ini", "-o", tmp_path)
    rows = read_rows(tmp_path / "resonances.csv")
    f = {r["label"]: [] for r in rows}
    for r in rows:
        f[r["label"]].append(float(r["f_res[Hz]"]))
    bias = sorted(f.get("bias-line", []))
    g = build_coupled_nanowire_circuit(CoupledResonatorParams.from_fractions(x_b=0.185, l_b=0.30))
    freqs = np.linspace(2e9, 14e9, 2000)
    compute_s_parameters(g, freqs[:16])
    t = time.perf_counter()
    compute_s_parameters(g, freqs)
    dt = time.perf_counter() - t
    fin, fout = f.get("in-phase", [math.nan])[0], f.get("out-of-phase", [math.nan])[0]
    report(3, "full-circuit spectrum",
           {"exactly four resonances": len(rows) == 4,
            "two bias-line modes": len(bias) == 2,
            "bias modes within 15% of 4.1/4.7 GHz": len(bias) == 2 and abs(bias[0] / 4.1e9 - 1) <= 0.15
            and abs(bias[1] / 4.7e9 - 1) <= 0.15,
            "in-phase within 10% of 10.8 GHz": abs(fin / 10.8e9 - 1) <= 0.10,
            "out-of-phase within 10% of 12.9 GHz": abs(fout / 12.9e9 - 1) <= 0.10,
            "in-phase below out-of-phase": fin < fout,
            "2000-point sweep < 5 s": dt < 5.0},
           "modes " + ", ".join(f"{r['label']} {float(r['f_res[Hz]']) / 1e9:.2f} GHz" for r in rows)
           + f"; sweep {dt:.3f} s")


def test_criterion_04_fig3a(tmp_path):
    t = time.perf_counter()
    out = cli("sweep", "-c", DATA_DIR / "fig3a.ini", "-o", tmp_path)
    dt = time.perf_counter() - t
    x, y = sweep_curve(tmp_path / "fig3a.csv")
    argmin = float(x[np.argmin(y)])
    lo, hi = (float(v.replace(" (unbounded)", "")) for v in out.split("x_b in [")[1].split("]")[0].split(", "))
    half = 0.5 * (hi - lo)
    report(4, "delta-kappa vs tap position",
           {"29 points": len(x) == 29,
            "argmin within 0.01 lambda of 0.185": abs(argmin - 0.185) <= 0.01,
            "window half-width in [0.0125, 0.05] lambda": 0.0125 <= half <= 0.05,
            "window bounded": "unbounded" not in out,
            "runtime < 60 s": dt < 60},
           f"argmin {argmin:.4f} lambda, window [{lo:.4f}, {hi:.4f}] half-width {half:.4f} lambda, {dt:.2f} s")


def test_criterion_05_fig3b(tmp_path):
    cli("sweep", "-c", DATA_DIR / "fig3b_xb0185.ini", "-o", tmp_path)
    cli("sweep", "-c", DATA_DIR / "fig3b_xb0200.ini", "-o", tmp_path)
    xa, ya = sweep_curve(tmp_path / "fig3b_xb0185.csv")
    xb, yb = sweep_curve(tmp_path / "fig3b_xb0200.csv")
    ma, mb = float(xa[np.argmin(ya)]), float(xb[np.argmin(yb)])
    report(5, "delta-kappa vs bias-line length",
           {"x_b=0.185 minimum within 0.03 of 0.30": abs(ma - 0.30) <= 0.03,
            "x_b=0.2 minimum within 0.03 of 0.30": abs(mb - 0.30) <= 0.03,
            "same sample grid": np.array_equal(xa, xb),
            "x_b=0.2 curve above at every l_b": bool(np.all(yb > ya))},
           f"argmin {ma:.3f} / {mb:.3f} lambda; min delta-kappa {ya.min() / 1e3:.1f} / {yb.min() / 1e3:.1f} kHz")


def test_criterion_06_fig3c(tmp_path):
    cli("sweep", "-c", DATA_DIR / "fig3c.ini", "-o", tmp_path)
    c, y = sweep_curve(tmp_path / "fig3c.csv")
    dev = np.abs(c - 1e-15)
    near, far = dev <= 0.35e-15 + 1e-22, dev >= 0.75e-15 - 1e-22
    report(6, "delta-kappa vs gate capacitance",
           {"samples at both inner edges": np.sum(np.isclose(dev, 0.35e-15, atol=1e-20)) == 2,
            "samples at both outer edges": np.sum(np.isclose(dev, 0.75e-15, atol=1e-20)) == 2,
            "below 1 MHz for |dC| <= 0.35 fF": bool(np.all(y[near] < 1e6)),
            "above 1 MHz for |dC| >= 0.75 fF": bool(np.all(y[far] > 1e6))},
           f"max inside {y[near].max() / 1e6:.3f} MHz, min outside {y[far].min() / 1e6:.2f} MHz")


def test_criterion_07_figures_of_merit():
    p = td.TransducerParams(mode_frequency=10e9, Z_c=5477.0, h_GaAs=100e-9, dipole_enm=4.0, eps_eff=6.3, eps_GaAs=12.8,
                            gamma_qd=300e6, kappa=0.0)
    g0 = td.coupling_strength_g0(p)
    c0 = td.cooperativity(g0, p.gamma_qd, p.kappa)
    cres = td.resonator_capacitance(40e-12, 150e-6)
    report(7, "coupling strength and cooperativity",
           {"g0/2pi in [170, 230] MHz": 170e6 <= g0 <= 230e6,
            "C0 in [1, 2.5]": 1.0 <= c0 <= 2.5,
            "C_res within 5% of 3 fF": abs(cres / 3e-15 - 1) <= 0.05},
           f"g0/2pi = {g0 / 1e6:.1f} MHz, C0 = {c0:.3f}, C_res = {cres * 1e15:.3f} fF")


def test_criterion_08_charge_noise():
    dn = td.surface_density_from_voltage(30e-3, 1e-9) * 1e-4
    report(8, "charge-noise inversion", {"delta_n in [1, 2]e11 /cm^2": 1e11 <= dn <= 2e11},
           f"delta_n = {dn:.4e} /cm^2")


def test_criterion_09_piezo_loss():
    cg = td.parallel_plate_capacitance(4e-12, 130e-9, 12.8)
    r = td.piezo_loss_ratio(7000.0, cg, 3e-15)
    report(9, "piezoelectric loss arithmetic",
           {"C_g within 2% of 3.5 fF": abs(cg / 3.5e-15 - 1) <= 0.02,
            "r_loss within 10% of 0.40%": abs(r / 0.004 - 1) <= 0.10,
            "r_loss below 1%": r < 0.01},
           f"C_g = {cg * 1e15:.3f} fF, r_loss = {r * 100:.3f} %")


def _property_checks() -> dict[str, bool]:
    checks = {}
    dev = CoupledResonatorParams.from_fractions(x_b=0.185, l_b=0.30)
    f = np.linspace(1e9, 16e9, 401)
    s = compute_s_parameters(build_coupled_nanowire_circuit(dev), f).s
    checks["reciprocity 1e-9"] = np.abs(s - np.swapaxes(s, 1, 2)).max() <= 1e-9
    shs = np.einsum("fki,fkj->fij", s.conj(), s)
    checks["lossless unitarity 1e-6"] = np.abs(shs - np.eye(4)).max() <= 1e-6
    sl = compute_s_parameters(build_coupled_nanowire_circuit(replace(dev, R_l=5e3, G_l=1e-5)), f).s
    checks["passivity"] = np.linalg.norm(sl, 2, axis=(1, 2)).max() <= 1 + 1e-9

    def line(name, a, b, length):
        return TLineSegment(name, a, b, length, 1e-6, 1e-10, 3e2, 1e-4)

    one = CircuitGraph.from_parts([line("T", "a", "b", 3e-3)], [Port(1, "a"), Port(2, "b")])
    two = CircuitGraph.from_parts([line("T1", "a", "m", 1.2e-3), line("T2", "m", "b", 1.8e-3)], [Port(1, "a"), Port(2, "b")])
    checks["cascade 1e-9"] = np.abs(compute_s_parameters(one, f).s - compute_s_parameters(two, f).s).max() <= 1e-9

    qw = CircuitGraph.from_parts(
        [TLineSegment("T", "in", "ld", 5e-3, 1e-6, 1e-10), Lumped("RL", "R", "ld", "0", 200.0)], [Port(1, "in", 50.0)]
    )
    checks["quarter-wave |S11| < 1e-4"] = abs(compute_s_parameters(qw, [5e9]).s[0, 0, 0]) < 1e-4

    rng = np.random.default_rng(2024)
    agree = []
    for _ in range(10):
        p = CoupledResonatorParams.from_fractions(
            x_b=rng.uniform(0.1, 0.24), l_b=rng.uniform(0.2, 0.35),
            C_g=rng.uniform(0.5e-15, 2e-15), C_k=rng.uniform(0.3e-15, 1.5e-15),
        )
        r = delta_kappa(p, cross_check=True)
        agree.append(abs(r.kappa_fit_with / r.kappa_with - 1) <= 0.05)
        agree.append(abs(r.kappa_fit_without / r.kappa_without - 1) <= 0.05)
    checks["pole vs Lorentzian 5% on 10 configs"] = all(agree)

    checks["T(node) = 0"] = td.bias_transmission(0.25, 5477.0, 50.0) == 0.0
    ga = td.coupling_strength_g0(td.TransducerParams(Z_c=1000.0))
    gb = td.coupling_strength_g0(td.TransducerParams(Z_c=4000.0))
    checks["g0 proportional to sqrt(Z_c)"] = abs(gb / ga - 2.0) < 1e-12

    ff = np.linspace(5e9 - 6e6, 5e9 + 6e6, 401)
    fit = lorentzian_fit(ff, lorentzian(ff, 5e9, 1e6, 0.4, 1e-3))
    checks["fit self-recovery 1e-8"] = abs(fit.f0 - 5e9) <= 1e-8 * 1e6 and abs(fit.kappa / 1e6 - 1) <= 1e-8
    clean = lorentzian(ff, 5e9, 1e6, 1.0, 0.0)
    worst = 0.0
    for seed in range(100):
        noisy = clean + 0.01 * np.random.default_rng(seed).standard_normal(len(ff))
        worst = max(worst, abs(lorentzian_fit(ff, noisy).kappa / 1e6 - 1))
    checks["noisy recovery 5% at 1% noise, 100 seeds"] = worst <= 0.05
    return checks


def test_criterion_10_property_suites():
    checks = _property_checks()
    report(10, "property suites", checks, f"{sum(checks.values())}/{len(checks)} properties hold")


def test_criterion_11_determinism(tmp_path):
    a = run_golden_suite(output_dir=tmp_path / "a")
    b = run_golden_suite(output_dir=tmp_path / "b")
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*.csv"))
    same = files_a == files_b and all(
        (tmp_path / "a" / p).read_bytes() == (tmp_path / "b" / p).read_bytes() for p in files_a
    )
    report(11, "determinism",
           {"golden suite passes twice": a.ok and b.ok,
            "byte-identical CSVs": same,
            "Monte Carlo output included": any(p.name == "montecarlo.csv" for p in files_a)},
           f"{len(files_a)} CSV files compared")
