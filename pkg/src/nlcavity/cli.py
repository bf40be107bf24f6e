"""Scenario runner: binds the physics modules to INI config files and
emits deterministic CSV tables plus a JSON run manifest.

Config format: flat key = value pairs under [scenario], [params], [grid],
[output]. Frequencies are given in Hz with an explicit _hz suffix and
converted to rad/s internally. Exit codes: 0 ok, 2 config error, 3
physics-validity error, 4 numerical-convergence error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detector, fock, hawking, qinfo, trilinear
from .constants import TWO_PI
from .errors import (
    ConvergenceError,
    InstabilityError,
    NoBistabilityError,
    NoHorizonError,
    NonLorentzianError,
    SingularFluxError,
    StiffnessError,
    TruncationError,
)
from .presets import build_detector_params, build_line_params, list_presets

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_NUMERICS = 4

_FMT = "{:.16e}"  # 17 significant digits, scientific


@dataclass
class ScenarioConfig:
    kind: str
    params: dict
    grid: dict
    output_dir: Path
    label: str = "run"
    warnings: list = field(default_factory=list)

    KINDS = ("detector-signal-noise", "detector-bistability", "detector-cooling",
             "hawking-line", "trilinear-evolve", "trilinear-info")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")


def load_config(path: Path) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (unit suffixes)
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read config {path}")
    if "scenario" not in parser or "kind" not in parser["scenario"]:
        raise ValueError("config must contain [scenario] kind = ...")
    out = Path(parser.get("output", "dir", fallback="."))
    return ScenarioConfig(
        kind=parser["scenario"]["kind"],
        params=dict(parser["params"]) if "params" in parser else {},
        grid=dict(parser["grid"]) if "grid" in parser else {},
        output_dir=out,
        label=parser.get("scenario", "label", fallback=Path(path).stem),
    )


def config_from_preset(name: str, out_dir: Path) -> ScenarioConfig:
    catalog = list_presets()
    if name not in catalog:
        raise ValueError(f"unknown preset {name!r}; have {sorted(catalog)}")
    body = catalog[name]
    return ScenarioConfig(kind=body["scenario"]["kind"],
                          params=dict(body.get("params", {})),
                          grid=dict(body.get("grid", {})),
                          output_dir=Path(out_dir), label=name)


def _floats(text: str):
    return [float(tok) for tok in str(text).replace(",", " ").split()]


def _fmt_cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _FMT.format(float(v))


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_manifest(cfg: ScenarioConfig, resolved: dict, columns: dict, files: list):
    manifest = {
        "scenario": cfg.kind,
        "label": cfg.label,
        "params": cfg.params,
        "grid": cfg.grid,
        "resolved": resolved,
        "columns": columns,
        "warnings": cfg.warnings,
        "artifacts": files,
    }
    path = cfg.output_dir / f"{cfg.label}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def _pool_map(fn, items):
    n = int(os.environ.get("NLCAVITY_THREADS", "1"))
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# detector scenarios
# ---------------------------------------------------------------------------

def _detector_common(cfg):
    params = build_detector_params(cfg.params)
    E_bi, dw_bi, I_bi = detector.bistability_onset(params)
    resolved = {
        "gamma_pT": params.gamma_pT, "gamma_bm": params.gamma_bm,
        "K_eff": detector.effective_duffing(params),
        "E_bi": E_bi, "delta_omega_bi": dw_bi, "I_bi": I_bi,
        "zero_point_m": detector.zero_point(params),
        "validity_gates": params.validity_gates(I_bi),
    }
    for gate, val in resolved["validity_gates"].items():
        if val > 0.2:
            cfg.warnings.append(f"validity gate {gate} = {val:.3g} is not << 1")
    return params, resolved


def _sweep_point(params, dw, I0, bath_T):
    drive = detector.DrivePoint(I_0=I0, delta_omega=dw)
    wp = params.omega_T + dw
    try:
        th = detector.effective_thermo(params, drive, bath_T=bath_T)
        ws = wp + th.R_omega * params.omega_m
        band = 2.0 * th.R_gamma * params.gamma_bm
        sig = detector.signal_spectrum(params, drive, ws, band, bath_T)
        noi = detector.noise_spectrum(params, drive, ws, band)
        cav = detector.caves_bound(params, drive, ws, band)
        return dict(signal=sig, noise=noi, caves=cav,
                    ratio=noi / sig if sig > 0 else math.nan,
                    R_omega=th.R_omega, R_gamma=th.R_gamma,
                    n_back=th.n_back_plus, residual=th.lorentzian_residual,
                    failure="")
    except (InstabilityError, NonLorentzianError) as exc:
        return dict(signal=math.nan, noise=math.nan, caves=math.nan,
                    ratio=math.nan, R_omega=math.nan, R_gamma=math.nan,
                    n_back=math.nan, residual=math.nan,
                    failure=type(exc).__name__)


def _run_detector_signal_noise(cfg: ScenarioConfig):
    params, resolved = _detector_common(cfg)
    I_bi = resolved["I_bi"]
    dw_bi = resolved["delta_omega_bi"]
    ratios = _floats(cfg.grid.get("detuning_ratios", "0, 0.2, 0.4"))
    n_pts = int(float(cfg.grid.get("drive_points", 30)))
    lo = float(cfg.grid.get("drive_min_ratio", 0.05))
    hi = float(cfg.grid.get("drive_max_ratio", 0.95))
    bath_T = float(cfg.grid.get("bath_T_K", 0.0))
    drive_ratios = np.linspace(lo, hi, n_pts)

    curves = [("duffing", r) for r in ratios] + [("harmonic", 0.0)]
    harmonic = build_detector_params(dict(cfg.params, K_d="0"))
    _, _, I_bi_harm = detector.bistability_onset(harmonic)

    rows = []
    for label, r in curves:
        p = harmonic if label == "harmonic" else params
        scale = I_bi_harm if label == "harmonic" else I_bi
        dw = r * abs(dw_bi)
        pts = _pool_map(lambda x: _sweep_point(p, dw, float(x) * scale, bath_T),
                        list(drive_ratios))
        for x, res in zip(drive_ratios, pts):
            if res["failure"]:
                cfg.warnings.append(
                    f"{label} detuning {r}: drive {x:.3f} I_bi failed {res['failure']}")
            rows.append([x, label, r, x * scale, res["signal"], res["noise"],
                         res["caves"], res["ratio"], res["R_omega"],
                         res["R_gamma"], res["n_back"], res["residual"],
                         res["failure"]])

    header = ["I_over_Ibi", "curve", "detuning_ratio", "I_0_A", "signal_A2",
              "noise_A2", "caves_A2", "noise_to_signal", "R_omega", "R_gamma",
              "n_back_plus", "lorentzian_residual", "gate_failure"]
    path = cfg.output_dir / f"{cfg.label}_signal_noise.csv"
    _write_csv(path, header, rows)
    return resolved, {"signal_noise": header}, [str(path)]


def _run_detector_bistability(cfg: ScenarioConfig):
    params, resolved = _detector_common(cfg)
    lo = float(cfg.grid.get("ratio_min", 1.0))
    hi = float(cfg.grid.get("ratio_max", 3.0))
    n = int(float(cfg.grid.get("points", 101)))
    rows = []
    for r in np.linspace(lo, hi, n):
        low, up = detector.bistability_boundary(params, float(r))
        rows.append([r, low, up])
    header = ["detuning_over_detuning_bi", "I_lower_over_Ibi", "I_upper_over_Ibi"]
    path = cfg.output_dir / f"{cfg.label}_bistability.csv"
    _write_csv(path, header, rows)
    return resolved, {"bistability": header}, [str(path)]


def _run_detector_cooling(cfg: ScenarioConfig):
    params, resolved = _detector_common(cfg)
    I_bi = resolved["I_bi"]
    dw_bi = resolved["delta_omega_bi"]
    mode = cfg.grid.get("detuning_mode", "ratio")
    if mode == "optimal-harmonic":
        detuning = -math.sqrt(params.omega_m ** 2 + params.gamma_pT ** 2)
    else:
        detuning = float(cfg.grid.get("detuning_ratio", 1.3)) * dw_bi
    resolved["detuning"] = detuning
    n_pts = int(float(cfg.grid.get("drive_points", 40)))
    lo = float(cfg.grid.get("drive_min_ratio", 0.2))
    hi = float(cfg.grid.get("drive_max_ratio", 1.2))
    temps = _floats(cfg.grid.get("bath_T_K", "0"))
    I_grid = np.linspace(lo, hi, n_pts) * I_bi

    all_rows = detector.cooling_curve(params, detuning, I_grid, temps)
    rows = []
    for row in all_rows:
        if row["gate_failure"]:
            cfg.warnings.append(
                f"drive {row['I_0'] / I_bi:.3f} I_bi, T={row['bath_T']}: "
                f"{row['gate_failure']}")
        rows.append([row["I_0"] / I_bi, row["bath_T"], row["n_net"],
                     row["R_omega"], row["R_gamma"], row["n_back"],
                     row["residual"], row["gate_failure"]])
    header = ["I_over_Ibi", "bath_T_K", "n_net", "R_omega", "R_gamma",
              "n_back_plus", "lorentzian_residual", "gate_failure"]
    path = cfg.output_dir / f"{cfg.label}_cooling.csv"
    _write_csv(path, header, rows)
    return resolved, {"cooling": header}, [str(path)]


# ---------------------------------------------------------------------------
# hawking scenario
# ---------------------------------------------------------------------------

def _run_hawking_line(cfg: ScenarioConfig):
    params = build_line_params(cfg.params)
    amplitude = float(cfg.params.get("amplitude_phi0", 0.2))
    if "rise_scale_m" in cfg.params:
        rise = float(cfg.params["rise_scale_m"])
    else:
        frac = float(cfg.params.get("gradient_rate_over_plasma", 0.1))
        target = frac * params.plasma_frequency(0.0) / TWO_PI
        rise = hawking.rise_scale_for_gradient_rate(amplitude, params, target)
    pulse = hawking.tanh_pulse(amplitude, rise)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        horizons = hawking.find_horizon(pulse, params)
        T_H = hawking.hawking_temperature(pulse, params, horizons[0])
        power = hawking.radiated_power(T_H)
        count = hawking.photons_per_pulse(pulse, params)
    cfg.warnings.extend(str(w.message) for w in caught)

    gates = hawking.validity_report(pulse, params)
    resolved = {
        "C_J_F": params.C_J, "u_m_per_s": params.u,
        "c0flux_m_per_s": hawking.propagation_velocity(0.0, params),
        "rise_scale_m": rise, "horizons_m": horizons,
        "T_H_K": T_H, "power_W": power, "photons_per_pulse": count,
        "gates": gates,
    }
    if gates["Z_A_over_R_Q"] >= 1.0:
        cfg.warnings.append(f"impedance gate Z_A/R_Q = {gates['Z_A_over_R_Q']:.3g} >= 1")

    lo, hi = pulse.window
    n = int(float(cfg.grid.get("xi_points", 201)))
    rows = []
    for xi in np.linspace(lo, hi, n):
        flux = pulse(float(xi))
        c = hawking.propagation_velocity(flux, params)
        g_tt, g_tx, g_xx = hawking.metric_components(pulse, params, float(xi))
        rows.append([xi, flux, c, g_tt])
    header = ["xi_m", "flux_phi0", "c_m_per_s", "g_tt"]
    p1 = cfg.output_dir / f"{cfg.label}_profile.csv"
    _write_csv(p1, header, rows)

    header2 = ["horizon_m", "T_H_K", "power_W", "photons_per_pulse",
               "Z_A_over_R_Q", "max_flux_ratio"]
    p2 = cfg.output_dir / f"{cfg.label}_summary.csv"
    _write_csv(p2, header2, [[horizons[0], T_H, power, count,
                              gates["Z_A_over_R_Q"], gates["max_flux_ratio"]]])
    return resolved, {"profile": header, "summary": header2}, [str(p1), str(p2)]


# ---------------------------------------------------------------------------
# trilinear scenarios
# ---------------------------------------------------------------------------

def _tau_grid(cfg):
    tau_max = float(cfg.grid.get("tau_max", 3.0))
    n = int(float(cfg.grid.get("tau_points", 400)))
    return np.linspace(0.0, tau_max, n)


def _trilinear_setup(mean_occ, dim):
    spec = fock.HilbertSpec((dim, dim, dim))
    params = trilinear.TrilinearParams.degenerate(chi=1.0, omega_a=2.0, dims=spec.dims)
    initial = trilinear.PumpInitialState.coherent(mean_occ, dim)
    psi0 = trilinear.initial_product_state(initial, spec)
    return spec, params, initial, psi0


def _run_trilinear_evolve(cfg: ScenarioConfig):
    mean_occ = float(cfg.params.get("mean_occupation", 9))
    # margin over the pump tail gate keeps the signal/idler boundary clean
    dim = int(float(cfg.params.get("dim_per_mode", 0))) or \
        fock.min_coherent_dim(mean_occ) + 3
    taus = _tau_grid(cfg)
    spec, params, initial, psi0 = _trilinear_setup(mean_occ, dim)

    A = math.sqrt(mean_occ)
    curve = trilinear.semiclassical_pump(mean_occ, taus)
    nb_semi = trilinear.semiclassical_occupation(curve)

    states = trilinear.evolve_full(psi0, params, taus)
    n_ops = trilinear.mode_numbers(spec)
    rows = []
    for i, tau in enumerate(taus):
        nb_param = trilinear.parametric_occupation(A, float(tau))
        branches = trilinear.short_time_state(initial, float(tau))
        nb_short = sum(abs(b.weight) ** 2
                       * float(np.sum(np.arange(b.s + 1) * b.amplitudes ** 2))
                       for b in branches)
        na_full, nb_full, nc_full = (fock.expectation(states[i], op).real
                                     for op in n_ops)
        rows.append([tau,
                     mean_occ - nb_param, nb_param,
                     curve.N_a[i], nb_semi[i],
                     mean_occ - nb_short, nb_short,
                     na_full, nb_full, nc_full,
                     trilinear.occupation_factorization_residual(states[i]),
                     states[i].norm() - 1.0,
                     states[i].max_boundary_population()])
    header = ["tau", "Na_parametric", "Nb_parametric", "Na_semiclassical",
              "Nb_semiclassical", "Na_shorttime", "Nb_shorttime",
              "Na_full", "Nb_full", "Nc_full", "Na_var_residual",
              "norm_drift", "boundary_population"]
    resolved = {"dim_per_mode": dim, "beta_plus": curve.beta_plus,
                "beta_minus": curve.beta_minus, "modulus": curve.modulus}
    path = cfg.output_dir / f"{cfg.label}_evolve.csv"
    _write_csv(path, header, rows)
    return resolved, {"evolve": header}, [str(path)]


def _info_diagnostics(rho_b, rho_a_q, n_a, n_b):
    fid_dim = rho_b.spec.total_dim
    sigma = qinfo.ThermalReference(n_b, omega=1.0, dim=fid_dim).density_matrix()
    fid = qinfo.fidelity(rho_b, sigma)
    info = qinfo.information(rho_b)
    qp, qm = qinfo.squeezing_params(rho_a_q)
    d_gap = qinfo.effective_dimension(n_a) - qinfo.effective_dimension(n_b) ** 2
    return fid, info, qp, qm, d_gap


def _run_trilinear_info(cfg: ScenarioConfig):
    means = _floats(cfg.params.get("mean_occupations", "1, 3, 6, 9"))
    taus = _tau_grid(cfg)
    tiers = cfg.params.get("tiers", "short,full")
    rows = []
    resolved = {"dims": {}}
    for mean_occ in means:
        dim = fock.min_coherent_dim(mean_occ) + 3
        resolved["dims"][mean_occ] = dim
        spec, params, initial, psi0 = _trilinear_setup(mean_occ, dim)

        if "short" in tiers:
            for tau in taus:
                rho_a, rho_b = trilinear.short_time_reduced(initial, float(tau))
                diag = rho_b.diagonal()
                n_b = float(np.sum(diag * np.arange(diag.size)))
                n_a = mean_occ - n_b
                fid, info, qp, qm, d_gap = _info_diagnostics(rho_b, rho_a, n_a, n_b)
                s_a = qinfo.von_neumann_entropy(rho_a)
                s_b = qinfo.von_neumann_entropy(rho_b)
                rows.append([tau, mean_occ, "short", n_b, fid, info,
                             2.0 * s_a, 2.0 * s_b - s_a, qp, qm, d_gap])

        if "full" in tiers:
            states = trilinear.evolve_full(psi0, params, taus)
            n_ops = trilinear.mode_numbers(spec)
            for tau, state in zip(taus, states):
                rho_a = fock.partial_trace(state, keep=[0])
                rho_b = fock.partial_trace(state, keep=[1])
                n_a = fock.expectation(state, n_ops[0]).real
                n_b = fock.expectation(state, n_ops[1]).real
                fid, info, qp, qm, d_gap = _info_diagnostics(rho_b, rho_a, n_a, n_b)
                i_abc, i_bc = qinfo.mutual_information_partitions(state)
                rows.append([tau, mean_occ, "full", n_b, fid, info,
                             i_abc, i_bc, qp, qm, d_gap])

    header = ["tau", "mean_occupation", "tier", "N_b", "fidelity",
              "information_nats", "I_a_bc", "I_b_c", "q_plus", "q_minus",
              "d_eff_gap"]
    path = cfg.output_dir / f"{cfg.label}_info.csv"
    _write_csv(path, header, rows)
    return resolved, {"info": header}, [str(path)]


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_RUNNERS = {
    "detector-signal-noise": _run_detector_signal_noise,
    "detector-bistability": _run_detector_bistability,
    "detector-cooling": _run_detector_cooling,
    "hawking-line": _run_hawking_line,
    "trilinear-evolve": _run_trilinear_evolve,
    "trilinear-info": _run_trilinear_info,
}


def run(cfg: ScenarioConfig) -> int:
    """Execute one scenario; returns the process exit status."""
    try:
        if not cfg.grid and cfg.kind != "hawking-line":
            raise ValueError("empty grid section")
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        resolved, columns, files = _RUNNERS[cfg.kind](cfg)
    # physics gates first: several of them subclass ValueError
    except (SingularFluxError, NoBistabilityError, NoHorizonError,
            TruncationError, InstabilityError, NonLorentzianError) as exc:
        print(f"physics validity error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ConvergenceError, StiffnessError) as exc:
        print(f"numerical convergence error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = _write_manifest(cfg, resolved, columns, files)
    print(f"wrote {len(files)} artifact(s) + manifest {manifest}")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nlcavity",
                                 description="nonlinear-cavity scenario runner")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario config or preset")
    runp.add_argument("config", nargs="?", help="path to INI config")
    runp.add_argument("--preset", help="preset name instead of a config file")
    runp.add_argument("--out", default=".", help="output directory")
    sub.add_parser("presets", help="list available presets")

    args = ap.parse_args(argv)
    if args.command == "presets":
        for name, body in sorted(list_presets().items()):
            print(f"{name}: {body['scenario']['kind']}")
        return EXIT_OK
    if args.command == "run":
        try:
            if args.preset:
                cfg = config_from_preset(args.preset, Path(args.out))
            elif args.config:
                cfg = load_config(Path(args.config))
                if args.out != ".":
                    cfg.output_dir = Path(args.out)
            else:
                raise ValueError("need a config path or --preset")
        except (ValueError, KeyError, configparser.Error) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return run(cfg)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
