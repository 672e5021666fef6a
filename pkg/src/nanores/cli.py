"""Command-line front end: ``nanores {simulate,sweep,fom,fit,golden}``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from nanores import transducer as td
from nanores.acsolver import SolverError, compute_s_parameters
from nanores.config import ConfigError, RunConfig, describe_schema, parse_perturbations
from nanores.constants import TWO_PI
from nanores.cpwgeom import CpwGeometry, line_params
from nanores.ingest import (
    CsvMapping,
    ParseError,
    _write_text,
    fit_measured_q,
    read_csv_sweep,
    read_touchstone,
    write_sweep_csv,
    yield_to_csv,
)
from nanores.netlist import CoupledResonatorParams, NetlistError, build_coupled_nanowire_circuit, read_netlist
from nanores.resonance import ResonanceError, extract_resonances, find_modes, label_modes
from nanores.sweep import (
    Perturbation,
    PerturbationSpec,
    SweepError,
    SweepSpec,
    monte_carlo_yield,
    run_sweep,
    tolerance_window,
)

log = logging.getLogger("nanores")


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config -> library objects


def circuit_params(cfg: RunConfig) -> CoupledResonatorParams:
    c = cfg["circuit"]
    L_l, C_l = c["L_l"], c["C_l"]
    if c["use_geometry"]:
        lp = line_params(geometry(cfg))
        L_l, C_l = lp.L_l, lp.C_l
    return CoupledResonatorParams.from_fractions(
        x_b=c["x_b_lambda"],
        l_b=c["l_b_lambda"],
        l=c["l"],
        L_l=L_l,
        C_l=C_l,
        C_g=c["C_g"],
        C_k=c["C_k"],
        Z_L=c["Z_L"],
        Z_port=c["Z_port"],
        include_bias_lines=c["include_bias_lines"],
    )


def geometry(cfg: RunConfig) -> CpwGeometry:
    g = cfg["geometry"]
    return CpwGeometry(g["w"], g["s"], g["eps_sub"], g["L_ksheet"])


def _out(cfg: RunConfig, key: str) -> Path:
    d = Path(cfg["output"]["directory"])
    d.mkdir(parents=True, exist_ok=True)
    return d / cfg["output"][key]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg: RunConfig, stdout=sys.stdout) -> list[dict]:
    sim = cfg["simulate"]
    workers = cfg["run"]["workers"]
    netlist = cfg["circuit"]["netlist"]
    if netlist:
        path = Path(netlist)
        if not path.is_absolute() and cfg.source != "<defaults>":
            beside = Path(cfg.source).parent / path
            path = beside if beside.exists() else path
        graph = read_netlist(path)
        params = None
    else:
        params = circuit_params(cfg)
        graph = build_coupled_nanowire_circuit(params)
    f = np.linspace(sim["f_start"], sim["f_stop"], sim["points"])
    sweep = compute_s_parameters(graph, f, workers=workers)
    write_sweep_csv(sweep, _out(cfg, "spectrum_csv"), overwrite=cfg["output"]["overwrite"])

    resp = (int(sim["response"][0]), int(sim["response"][1]))
    if max(resp) > graph.n_ports:
        raise CliError(f"simulate.response S{sim['response']} needs {max(resp)} ports; graph has {graph.n_ports}")
    res = extract_resonances(graph, sweep, resp, prominence_db=sim["prominence_db"])
    freqs = [r.f_res for r in res]
    if params is not None:
        if params.include_bias_lines:
            from dataclasses import replace

            bare = params.bare_frequency
            ref = [m.f_res for m in find_modes(build_coupled_nanowire_circuit(replace(params, include_bias_lines=False)), 0.2 * bare, 1.2 * bare)]
            labels = label_modes(freqs, ref)
        else:
            labels = [("in-phase", "out-of-phase")[i] if i < 2 else "unknown" for i in range(len(freqs))]
    else:
        labels = ["unknown"] * len(freqs)
    rows = [
        {"index": i + 1, "label": lab, "f_res": r.f_res, "kappa": r.kappa, "Q_loaded": r.Q_loaded, "peak": r.amplitude}
        for i, (r, lab) in enumerate(zip(res, labels))
    ]
    buf = io.StringIO()
    buf.write("# kind: resonances\n")
    buf.write(f"# response: S{sim['response']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "label", "f_res[Hz]", "kappa[Hz]", "Q_loaded[1]", "peak_over_median[1]"])
    for r in rows:
        w.writerow([r["index"], r["label"]] + [repr(float(r[k])) for k in ("f_res", "kappa", "Q_loaded", "peak")])
    _write_text(_out(cfg, "resonances_csv"), buf.getvalue(), cfg["output"]["overwrite"])

    print(f"{len(rows)} resonance(s) in {_fmt(sim['f_start'])}-{_fmt(sim['f_stop'])} Hz", file=stdout)
    for r in rows:
        print(
            f"  {r['index']}  {r['label']:<13} f_res = {r['f_res'] / 1e9:.4f} GHz  "
            f"kappa = {r['kappa'] / 1e6:.4g} MHz  Q_L = {r['Q_loaded']:.4g}",
            file=stdout,
        )
    return rows


# ---------------------------------------------------------------------------
# sweep


def sweep_spec(cfg: RunConfig) -> SweepSpec:
    s = cfg["sweep"]
    base = circuit_params(cfg)
    if s["values"]:
        from nanores.netlist import parse_value

        vals = tuple(parse_value(v) for v in s["values"].split(","))
        return SweepSpec(base, s["parameter"], vals, s["observable"], s["mode"])
    return SweepSpec.linear(base, s["parameter"], s["start"], s["stop"], s["points"],
                            observable=s["observable"], mode=s["mode"])


def cmd_sweep(cfg: RunConfig, stdout=sys.stdout):
    spec = sweep_spec(cfg)
    result = run_sweep(spec, workers=cfg["run"]["workers"])
    thr = cfg["sweep"]["threshold"]
    write_sweep_csv(result, _out(cfg, "sweep_csv"), overwrite=cfg["output"]["overwrite"],
                    comments={"threshold": repr(thr)})
    failed = sum(not r.ok for r in result.rows)
    unit = "lambda" if spec.parameter in ("x_b", "l_b") else ""
    print(f"swept {spec.parameter} over {len(result.rows)} points ({failed} failed)", file=stdout)
    print(f"argmin {spec.parameter} = {_fmt(result.argmin())} {unit}".rstrip(), file=stdout)
    try:
        win = tolerance_window(result, thr)
    except SweepError as exc:
        print(f"tolerance window: {exc}", file=stdout)
        return result, None
    lo = _fmt(win.lower) + ("" if win.lower_bounded else " (unbounded)")
    hi = _fmt(win.upper) + ("" if win.upper_bounded else " (unbounded)")
    print(f"{spec.observable} < {_fmt(thr)}: {spec.parameter} in [{lo}, {hi}] {unit}".rstrip(), file=stdout)
    print(f"window around argmin: -{_fmt(win.argmin - win.lower)} / +{_fmt(win.upper - win.argmin)} {unit}".rstrip(), file=stdout)
    return result, win


def cmd_montecarlo(cfg: RunConfig, stdout=sys.stdout):
    mc = cfg["montecarlo"]
    perts = {k: Perturbation(d, w) for k, (d, w) in parse_perturbations(mc["perturb"]).items()}
    spec = PerturbationSpec(perts, samples=mc["samples"], threshold=mc["threshold"])
    seed = cfg["run"]["seed"]
    res = monte_carlo_yield(circuit_params(cfg), spec, seed, workers=cfg["run"]["workers"])
    _write_text(_out(cfg, "montecarlo_csv"), yield_to_csv(res, seed, {"perturb": mc["perturb"]}), cfg["output"]["overwrite"])
    print(f"yield = {res.yield_fraction:.4f} ({int(res.passed.sum())}/{len(res.passed)}) at seed {seed}", file=stdout)
    return res


# ---------------------------------------------------------------------------
# figures of merit


@dataclass(frozen=True)
class FomEntry:
    name: str
    value: float
    unit: str
    inputs: str


def fom_report(cfg: RunConfig) -> list[FomEntry]:
    f = cfg["fom"]
    c = cfg["circuit"]
    geom = geometry(cfg)
    lp = line_params(geom)
    params = circuit_params(cfg)
    Z_c = f["Z_c"] if f["Z_c"] is not None else math.sqrt(params.L_l / params.C_l)
    C_res = f["C_res"] if f["C_res"] is not None else td.resonator_capacitance(params.C_l, params.l)
    eps_eff = f["eps_eff"] if f["eps_eff"] is not None else lp.eps_eff
    tp = td.TransducerParams(
        mode_frequency=f["mode_frequency"], Z_c=Z_c, C_res=C_res, h_GaAs=f["h_GaAs"], dipole_enm=f["dipole_enm"],
        eps_eff=eps_eff, eps_GaAs=f["eps_GaAs"], gamma_qd=f["gamma_qd"], kappa=f["kappa"],
    )
    v_vac = td.vacuum_voltage(tp.omega_m, C_res)
    e_qd = td.vacuum_field(v_vac, tp.h_GaAs, eps_eff, tp.eps_GaAs)
    g0 = td.coupling_strength_g0(tp)
    c0 = td.cooperativity(g0, tp.gamma_qd, tp.kappa)
    dn = td.surface_density_from_voltage(f["delta_V"], f["h_gap"])
    c_gate = td.parallel_plate_capacitance(f["gate_area"], f["gate_thickness"], tp.eps_GaAs)
    z_in = td.quarter_wave_input_impedance(Z_c, params.Z_L)

    rows = [
        FomEntry("C_l_geometry", lp.C_l, "F/m", "geometry.w,s,eps_sub"),
        FomEntry("L_l_geometry", lp.L_l, "H/m", "geometry.w,s,L_ksheet"),
        FomEntry("Z_c_geometry", lp.Z_c, "ohm", "geometry"),
        FomEntry("eps_eff", eps_eff, "1", "geometry.eps_sub" if f["eps_eff"] is None else "fom.eps_eff"),
        FomEntry("v_ph_geometry", lp.v_ph, "m/s", "geometry"),
        FomEntry("Z_c", Z_c, "ohm", "circuit.L_l,C_l" if f["Z_c"] is None else "fom.Z_c"),
        FomEntry("C_res", C_res, "F", "circuit.C_l,l" if f["C_res"] is None else "fom.C_res"),
        FomEntry("Z_in", z_in, "ohm", "Z_c,circuit.Z_L"),
        FomEntry("V_vac", v_vac, "V", "fom.mode_frequency,C_res"),
        FomEntry("E_QD", e_qd, "V/m", "V_vac,fom.h_GaAs,eps_eff,fom.eps_GaAs"),
        FomEntry("g0/2pi", g0, "Hz", "Z_c,fom.mode_frequency,h_GaAs,dipole_enm,eps_eff,eps_GaAs"),
        FomEntry("C0", c0, "1", "g0,fom.gamma_qd,fom.kappa"),
        FomEntry("delta_n", dn, "1/m^2", "fom.delta_V,h_gap"),
        FomEntry("C_g_parallel_plate", c_gate, "F", "fom.gate_area,gate_thickness,eps_GaAs"),
    ]
    if f["r_loss"] is not None:
        q = td.piezo_quality_factor(td.PiezoLossModel(f["r_loss"], c_gate, C_res))
        rows.append(FomEntry("Q_piezo", q, "1", "fom.r_loss,C_g_parallel_plate,C_res"))
    from dataclasses import replace

    bare = params.bare_frequency
    modes = find_modes(build_coupled_nanowire_circuit(replace(params, include_bias_lines=False)), 0.2 * bare, 1.2 * bare)
    if modes:
        rows.append(FomEntry("delta_omega/omega_m", (bare - modes[0].f_res) / bare, "1", "in-phase mode vs bare half-wave"))
    return rows


def cmd_fom(cfg: RunConfig, stdout=sys.stdout) -> list[FomEntry]:
    rows = fom_report(cfg)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{r.name:<{width}}  {r.value:.6g} {r.unit}", file=stdout)
    if cfg["output"]["fom_csv"]:
        buf = io.StringIO()
        buf.write("# kind: figures-of-merit\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "unit", "inputs"])
        for r in rows:
            w.writerow([r.name, repr(float(r.value)), r.unit, r.inputs])
        _write_text(_out(cfg, "fom_csv"), buf.getvalue(), cfg["output"]["overwrite"])
    return rows


# ---------------------------------------------------------------------------
# fit


def cmd_fit(path, band=None, response="21", csv_mapping: CsvMapping | None = None, stdout=sys.stdout):
    p = Path(path)
    if p.suffix.lower() == ".csv":
        rec = read_csv_sweep(p, csv_mapping)
    else:
        rec = read_touchstone(p)
    r = fit_measured_q(rec, band, (int(response[0]), int(response[1])))
    print(f"f_res = {r.f_res:.9g} Hz", file=stdout)
    print(f"kappa = {r.kappa:.6g} Hz", file=stdout)
    print(f"Q_L = {r.Q_loaded:.6g}", file=stdout)
    return r


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI configuration file")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
    common.add_argument("--workers", type=int, help="parallel workers (overrides run.workers)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (overrides run.seed)")
    common.add_argument("-o", "--output-dir", help="output directory (overrides output.directory)")

    ap = argparse.ArgumentParser(
        prog="nanores",
        description="Coupled high-impedance nanowire resonator simulator and transducer design tool.",
        epilog=describe_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter
    sub.add_parser("simulate", parents=[common], help="S-parameter spectrum and resonance table",
                   epilog=describe_schema(), formatter_class=fmt)
    sp = sub.add_parser("sweep", parents=[common], help="parameter sweep with tolerance window",
                        epilog=describe_schema(), formatter_class=fmt)
    sp.add_argument("--monte-carlo", action="store_true", help="run the [montecarlo] yield estimate instead")
    sub.add_parser("fom", parents=[common], help="figures-of-merit report", epilog=describe_schema(), formatter_class=fmt)
    fp = sub.add_parser("fit", help="fit loaded Q of measured data (.s2p or .csv)")
    fp.add_argument("data")
    fp.add_argument("--band", nargs=2, type=float, metavar=("F_MIN", "F_MAX"), help="fit band in Hz")
    fp.add_argument("--response", default="21")
    fp.add_argument("--freq-col", default="0", help="CSV frequency column (name or index)")
    fp.add_argument("--freq-unit", default="Hz")
    fp.add_argument("--mag-col", default="1", help="CSV magnitude column (name or index)")
    fp.add_argument("--magnitude", choices=("db", "linear"), default="db")
    gp = sub.add_parser("golden", help="run the golden-baseline regression suite")
    gp.add_argument("--regenerate", action="store_true", help="rewrite the expected files")
    gp.add_argument("--baseline-dir", help="directory holding manifest.json and expected outputs")
    return ap


def _col(s: str):
    return int(s) if s.isdigit() else s


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fit":
            mapping = CsvMapping(
                frequency=_col(args.freq_col),
                s={f"S{args.response}": (_col(args.mag_col), None)},
                frequency_unit=args.freq_unit,
                magnitude=args.magnitude,
            )
            cmd_fit(args.data, tuple(args.band) if args.band else None, args.response, mapping, stdout)
            return 0
        if args.command == "golden":
            from nanores.golden import run_golden_suite

            report = run_golden_suite(args.baseline_dir, regenerate=args.regenerate)
            for line in report.lines():
                print(line, file=stdout)
            return 0 if report.ok else 1
        overrides = list(args.set)
        if args.workers is not None:
            overrides.append(f"run.workers={args.workers}")
        if args.seed is not None:
            overrides.append(f"run.seed={args.seed}")
        if args.output_dir is not None:
            overrides.append(f"output.directory={args.output_dir}")
        cfg = RunConfig.load(args.config, overrides)
        if args.command == "simulate":
            cmd_simulate(cfg, stdout)
        elif args.command == "sweep":
            if args.monte_carlo:
                cmd_montecarlo(cfg, stdout)
            else:
                cmd_sweep(cfg, stdout)
        elif args.command == "fom":
            cmd_fom(cfg, stdout)
        return 0
    except ConfigError as exc:
        print(f"nanores: {exc}", file=stderr)
        return 2
    except (CliError, SolverError, NetlistError, ParseError, ResonanceError, SweepError, FileExistsError, OSError, ValueError) as exc:
        print(f"nanores: error: {exc}", file=stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
