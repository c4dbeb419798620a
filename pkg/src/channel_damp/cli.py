"""Scenario runner: configuration, execution, artifact emission.

Each scenario exercises one slice of the laboratory and reports structured
pass/fail checks; the process exit code is 0 only if every check passes
(1: check failure, 2: configuration error, 3: internal error).

Acceptance ownership: phi1-oracle (1), spectral-scan (2, 9),
wave-identities (3), green-audit (4), multiplier-audit (5), cross-oracle (6),
linear-damping (7), nonlinear-demo (8).
"""

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import __version__, evolve, io_formats, multipliers, profiles, rayleigh, sturm, waveop
from . import _stencils as st
from .errors import (
    ChannelDampError,
    NeumannZeroMode,
    ParseError,
    RangeError,
    UnknownKey,
)

SCENARIOS = (
    "phi1-oracle", "spectral-scan", "wave-identities", "green-audit",
    "multiplier-audit", "linear-damping", "cross-oracle", "nonlinear-demo",
)

_TOP_KEYS = {"scenario", "seed", "out", "profile", "params"}
_PARAM_KEYS = {"k_max", "k_list", "T", "dt", "eps", "K_x", "n_samples",
               "eta0", "times", "eps_u_demo"}


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    out: Optional[str] = None
    profile_spec: Dict = field(default_factory=dict)
    params: Dict = field(default_factory=dict)

    def echo(self):
        return {"scenario": self.scenario, "seed": self.seed,
                "profile": dict(self.profile_spec), "params": dict(self.params),
                "version": __version__}


def parse_config(path) -> ScenarioConfig:
    """Read and validate a TOML scenario configuration."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        data = tomllib.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ParseError(f"config file {path} does not exist")
    except Exception as exc:
        raise ParseError(f"config parse failure: {exc}") from exc
    return config_from_dict(data)


def config_from_dict(data: Dict) -> ScenarioConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise UnknownKey(f"unknown config keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ParseError("config needs a 'scenario' key")
    scenario = data["scenario"]
    if scenario not in SCENARIOS:
        raise RangeError(f"unknown scenario {scenario!r}; see --list-scenarios")
    seed = int(data.get("seed", 0))
    if seed < 0:
        raise RangeError("seed must be nonnegative")
    prof_spec = dict(data.get("profile", {}))
    prof_spec.setdefault("family", "couette_constant")
    prof_spec.setdefault("n_y", 257)
    n_y = int(prof_spec["n_y"])
    if n_y < 33 or n_y % 2 == 0:
        raise RangeError(f"n_y = {n_y} out of range (odd, >= 33)")
    params = dict(data.get("params", {}))
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise UnknownKey(f"unknown params keys: {sorted(unknown)}")
    return ScenarioConfig(scenario=scenario, seed=seed, out=data.get("out"),
                          profile_spec=prof_spec, params=params)


def _check(name, value, passed, threshold):
    return {"name": name, "value": float(value) if np.isfinite(value) else None,
            "passed": bool(passed), "threshold": threshold}


def _damping_data(y, eta0=-8.0):
    return profiles.bump_fn(0.30, 0.40, 0.60, 0.70)[0](y) * np.exp(1j * eta0 * y)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def scenario_phi1_oracle(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    errs = {}
    for n in (257, 513):
        prof = profiles.couette_constant(n)
        for k in (1, 3, 8):
            tab = rayleigh.phi1_table(prof, k)
            D = prof.y[:, None] - prof.y[None, :]
            D = np.where(D == 0, 1.0, D)
            exact = np.sinh(k * D) / (k * D)
            np.fill_diagonal(exact, 1.0)
            errs[(n, k)] = float((np.abs(tab.phi1 - exact) / exact).max())
    for k in (1, 3, 8):
        checks.append(_check(f"phi1_rel_err_k{k}_ny513", errs[(513, k)],
                             errs[(513, k)] <= 1e-6, "<= 1e-6"))
    order = float(np.log2(errs[(257, 3)] / errs[(513, 3)]))
    checks.append(_check("phi1_convergence_order", order, order >= 3.5, ">= 3.5"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 5.0, "< 5 s"))
    rows = [(k, errs[(257, k)], errs[(513, k)]) for k in (1, 3, 8)]
    return {"checks": checks,
            "series": [{"name": "phi1_oracle_errors",
                        "header": ["k", "rel_err_ny257", "rel_err_ny513"],
                        "rows": rows}]}


def scenario_spectral_scan(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    n_y = int(cfg.profile_spec.get("n_y", 257))
    prof = profiles.couette_bump(n_y, eps_u=0.05)
    D = np.abs(prof.y[:, None] - prof.y[None, :])
    consts = {"est2": [], "est3": [], "est5": []}
    est1_phi_min = np.inf
    est1_mono_min = np.inf
    for k in (1, 2, 4, 8):
        tab = rayleigh.phi1_table(prof, k)
        est1_phi_min = min(est1_phi_min, float(tab.phi1.min()))
        Dyp = prof.y[:, None] - prof.y[None, :]
        est1_mono_min = min(est1_mono_min, float((Dyp * tab.dphi1).min()))
        off = k * D > 0.75
        expo = np.log(tab.phi1[off]) / (k * D[off])
        consts["est2"].append(max(expo.max(), 1.0 / expo.min()))
        mask = D > 0
        r = np.abs(tab.dphi1[mask]) / tab.phi1[mask] / (k * np.minimum(k * D[mask], 1.0))
        consts["est3"].append(max(r.max(), 1.0 / r.min()))
        quad = mask & (k * D <= 1.0)
        r5 = (tab.phi1[quad] - 1.0) / ((k * D[quad]) ** 2 * tab.phi1[quad])
        consts["est5"].append(float(r5.max()))
    checks.append(_check("est1_phi1_floor", est1_phi_min, est1_phi_min >= 1.0, ">= 1"))
    checks.append(_check("est1_monotone_floor", est1_mono_min,
                         est1_mono_min >= -1e-12, ">= 0 (1e-12 slack)"))
    spread = {}
    for name, vals in consts.items():
        spread[name] = max(vals) / min(vals)
        checks.append(_check(f"{name}_constant_spread", spread[name],
                             spread[name] < 2.0, "< 2x across k"))
    # criterion 9: stability gate
    floors = {}
    k_max = int(cfg.params.get("k_max", 8))
    for fam, maker in (("couette_constant", profiles.couette_constant),
                       ("couette_bump", lambda n: profiles.couette_bump(n, eps_u=0.05))):
        p = maker(n_y)
        rep = rayleigh.spectral_assumption_check(p, k_max)
        floors[fam] = min(rep.indicator_floor.values())
        checks.append(_check(f"stable_{fam}", 1.0 if rep.verdict == "stable" else 0.0,
                             rep.verdict == "stable", "verdict == stable"))
        checks.append(_check(f"indicator_floor_{fam}", floors[fam],
                             floors[fam] > 0.0, "> 0 (fitted floor)"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 60.0, "< 30 s (scan) + 60 s (gate)"))
    rows = [(k, consts["est2"][i], consts["est3"][i], consts["est5"][i])
            for i, k in enumerate((1, 2, 4, 8))]
    return {"checks": checks,
            "constants": {"indicator_floors": floors},
            "series": [{"name": "fitted_constants",
                        "header": ["k", "C_est2", "C_est3", "C_est5"],
                        "rows": rows}]}


def scenario_wave_identities(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    prof_c = profiles.couette_constant(129)
    ws_c = waveop.build_wave_set(prof_c, 1)
    ident = max(np.abs(ws_c.D - np.eye(129)).max(),
                np.abs(ws_c.D1 - np.eye(129)).max(),
                np.abs(ws_c.Dinv - np.eye(129)).max())
    checks.append(_check("couette_identity", ident, ident < 1e-12, "Id to round-off"))

    rows = []
    kernels = []
    for k in (1, 2, 3):
        res = {}
        dual = {}
        invmax = 0.0
        for n in (257, 513):
            prof = profiles.couette_bump(n, eps_u=0.05)
            data = rayleigh.SpectralData(prof, k)
            ws = waveop.build_wave_set(prof, k, data)
            om = profiles.bump_fn(0.3, 0.42, 0.58, 0.7)[0](prof.y) * np.sin(3 * np.pi * prof.y)
            res[n] = waveop.intertwine_residual(prof, ws, k, om)
            g = np.sin(np.pi * prof.y) * prof.chi2
            dual[n] = waveop.duality_residual(prof, ws, g, g)
            if n == 257:
                invmax = ws.report["inv_identity"]
                comm = np.abs(waveop.commutator_kernel(prof, ws) - (ws.D - ws.D1)).max()
                kernels.append({"name": f"wave_D_k{k}", "k": k, "array": ws.D})
        checks.append(_check(f"intertwine_k{k}_ny257", res[257], res[257] <= 1e-3, "<= 1e-3"))
        ratio = res[257] / res[513]
        checks.append(_check(f"intertwine_halving_k{k}", ratio, ratio >= 4.0, ">= 4x"))
        checks.append(_check(f"duality_k{k}_ny257", dual[257], dual[257] <= 1e-3, "<= 1e-3"))
        checks.append(_check(f"inverse_identity_k{k}", invmax, invmax <= 1e-6, "<= 1e-6"))
        checks.append(_check(f"commutator_match_k{k}", comm, comm <= 1e-8, "<= 1e-8"))
        rows.append((k, res[257], res[513], dual[257], invmax))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 60.0, "< 60 s"))
    return {"checks": checks, "kernels": kernels,
            "series": [{"name": "wave_identities",
                        "header": ["k", "intertwine_257", "intertwine_513",
                                   "duality_257", "inv_identity"],
                        "rows": rows}]}


def scenario_green_audit(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    n = int(cfg.profile_spec.get("n_y", 257))
    prof = profiles.couette_constant(n)
    one = np.ones(n)
    gk = sturm.green_kernel(prof.y, one, one, 1, "dirichlet")
    i = int(np.searchsorted(prof.y, 0.25))
    j = int(np.searchsorted(prof.y, 0.5))
    exact = np.sinh(0.25) * np.sinh(0.5) / np.sinh(1.0)
    err = abs(gk.G[i, j] - exact)
    checks.append(_check("dirichlet_sinh_value", err, err <= 1e-6, "<= 1e-6"))
    checks.append(_check("operator_green_identity", gk.report["operator_green_identity"],
                         gk.report["operator_green_identity"] <= 1e-8, "<= 1e-8"))
    try:
        sturm.green_kernel(prof.y, one, one, 0, "neumann")
        rejected = False
    except NeumannZeroMode:
        rejected = True
    checks.append(_check("neumann_k0_rejected", 1.0 if rejected else 0.0,
                         rejected, "raises NeumannZeroMode"))
    # variable-coefficient audit rows
    prof_b = profiles.density_bump(129, eps_theta=0.05)
    gk_b = sturm.green_kernel(prof_b.y, 1.0 / prof_b.theta, 1.0 / prof_b.theta, 2, "dirichlet")
    checks.append(_check("bump_operator_green_identity",
                         gk_b.report["operator_green_identity"],
                         gk_b.report["operator_green_identity"] <= 1e-8, "<= 1e-8"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 10.0, "< 10 s"))
    return {"checks": checks,
            "kernels": [{"name": "green_dirichlet_k1", "k": 1, "array": gk.G}],
            "constants": {"formula_vs_factorization": gk.report["formula_vs_factorization"],
                          "wronskian_rel_spread": gk_b.report.get("wronskian_rel_spread")}}


def scenario_multiplier_audit(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    P = multipliers.DEFAULT_PARAMS
    # w == 1 beyond the window on a sample grid
    bad = 0
    for eta in (5.0, 30.0, 100.0, 400.0):
        for k in (0, 1, 3, 9):
            for t in (2 * eta, 2 * eta + 1.0, 3 * eta):
                if multipliers.w_value(t, k, eta, P) != 1.0:
                    bad += 1
    checks.append(_check("w_equals_one_past_window", bad, bad == 0, "== 1 for t >= 2 eta"))
    jun = max(multipliers.junction_continuity_residuals(eta, P).max()
              for eta in (30.0, 100.0, 250.0))
    checks.append(_check("junction_continuity", jun, jun <= 1e-12, "<= 1e-12"))
    n_samples = int(cfg.params.get("n_samples", 10_000))
    rep = multipliers.ratio_audit(P, sample_count=n_samples, seed=cfg.seed)
    viol = (rep["nonresonant_ratio_violations"] + rep["resonant_rate_violations"]
            + rep["rate_ratio_violations"])
    checks.append(_check("ratio_audit_violations", viol, viol == 0, "== 0 at fitted constants"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 10.0, "< 10 s"))
    return {"checks": checks, "constants": rep}


def scenario_cross_oracle(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    n = int(cfg.profile_spec.get("n_y", 257))
    prof = profiles.couette_bump(n, eps_u=float(cfg.profile_spec.get("eps_u", 0.05)))
    om0 = _damping_data(prof.y, eta0=float(cfg.params.get("eta0", -8.0)))
    times = [1.0, 5.0, 10.0]
    lin = evolve.evolve_linear(prof, 1, om0, max(times), 0.005, save_times=times)
    spec = evolve.evolve_linear_spectral(prof, 1, om0, times)
    w = st.trapz_weights(n, prof.h)
    rows = []
    for i, t in enumerate(times):
        a, b = lin["psi"][i], spec["psi"][i]
        rel = float(np.sqrt(w @ np.abs(a - b) ** 2) / np.sqrt(w @ np.abs(b) ** 2))
        rows.append((t, rel))
        checks.append(_check(f"cross_oracle_rel_t{t:g}", rel, rel <= 1e-3, "<= 1e-3"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 120.0, "< 2 min"))
    return {"checks": checks,
            "series": [{"name": "cross_oracle", "header": ["t", "rel_l2_diff"],
                        "rows": rows}]}


def scenario_linear_damping(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    n = int(cfg.profile_spec.get("n_y", 257))
    prof = profiles.couette_bump(n, eps_u=float(cfg.profile_spec.get("eps_u", 0.05)))
    om0 = _damping_data(prof.y, eta0=float(cfg.params.get("eta0", -8.0)))
    times = list(np.geomspace(20.0, 200.0, 16))
    traj = evolve.evolve_linear(prof, 1, om0, 200.0, 0.02, save_times=times)
    w = st.trapz_weights(n, prof.h)
    uy = [float(np.sqrt(w @ np.abs(1j * psi) ** 2)) for psi in traj["psi"]]
    ux = [float(np.sqrt(w @ np.abs(st.deriv1(psi, prof.h)) ** 2)) for psi in traj["psi"]]
    fit_y = evolve.damping_rates(traj["times"], uy)
    fit_x = evolve.damping_rates(traj["times"], ux)
    checks.append(_check("uy_exponent", fit_y["exponent"],
                         -2.5 <= fit_y["exponent"] <= -1.5, "in [-2.5, -1.5]"))
    checks.append(_check("ux_neq_exponent", fit_x["exponent"],
                         -1.4 <= fit_x["exponent"] <= -0.6, "in [-1.4, -0.6]"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 300.0, "< 5 min"))
    rows = list(zip(traj["times"], uy, ux))
    return {"checks": checks,
            "constants": {"uy_fit": fit_y, "ux_fit": fit_x},
            "series": [{"name": "linear_damping",
                        "header": ["t", "Uy_L2", "Ux_neq_L2"], "rows": rows}]}


def scenario_nonlinear_demo(cfg: ScenarioConfig):
    t0 = time.time()
    checks = []
    n = int(cfg.profile_spec.get("n_y", 257))
    K = int(cfg.params.get("K_x", 32))
    eps = float(cfg.params.get("eps", 1e-3))
    T = float(cfg.params.get("T", 50.0))
    eps_u = float(cfg.params.get("eps_u_demo", 0.3))
    prof = profiles.couette_bump(n, eps_u=eps_u)
    dt = float(cfg.params.get("dt", evolve.CFL / (K * np.abs(prof.u).max())))
    y = prof.y
    bump = profiles.bump_fn(0.32, 0.42, 0.58, 0.68)[0](y)
    w0 = np.zeros((K + 1, n), dtype=complex)
    d0 = np.zeros_like(w0)
    w0[1] = eps * bump * np.exp(-8j * y)
    w0[2] = 0.3 * eps * bump * np.exp(-8j * y)
    d0[1] = 0.5 * eps * bump * np.exp(-8j * y)
    fit_lo = list(np.geomspace(2.5, T / 2, 10))
    snap_times = sorted(set(round(t, 6) for t in fit_lo + [float(T)]))
    state, diag, snaps = evolve.run_nonlinear(
        prof, w0, d0, T=T + 2 * dt, dt=dt, diag_every=50,
        snapshot_times=snap_times)
    E = np.array(diag.energy)
    drift = float(np.abs(E - E[0]).max() / E[0])
    checks.append(_check("energy_drift_rel", drift, drift <= 1e-5, "<= 1e-5"))
    lo_ok = min(diag.supp_lo) >= 2 * prof.kappa0 - 0.02 - 1e-12
    hi_ok = max(diag.supp_hi) <= 1 - 2 * prof.kappa0 + 0.02 + 1e-12
    checks.append(_check("support_lo", min(diag.supp_lo), lo_ok,
                         f">= {2 * prof.kappa0 - 0.02}"))
    checks.append(_check("support_hi", max(diag.supp_hi), hi_ok,
                         f"<= {1 - 2 * prof.kappa0 + 0.02}"))
    oT, dT, PhiT, taT = snaps[round(float(T), 6)]
    WT = evolve.scattering_profile(prof, oT, taT, PhiT)
    dists = []
    for t in fit_lo:
        o1, _, Phi1, ta1 = snaps[round(t, 6)]
        W1 = evolve.scattering_profile(prof, o1, ta1, Phi1)
        dists.append(evolve.scattering_distance(prof, W1, WT))
    coef = np.polyfit(np.log(fit_lo), np.log(dists), 1)
    scat = float(coef[0])
    checks.append(_check("scattering_exponent", scat,
                         -1.5 <= scat <= -0.5, "in [-1.5, -0.5]"))
    rt = time.time() - t0
    checks.append(_check("runtime_s", rt, rt < 900.0, "< 15 min"))
    diag_rows = list(zip(diag.times, diag.uy_l2, diag.ux_neq_l2, diag.psi_neq_l2,
                         diag.energy, diag.supp_lo, diag.supp_hi))
    scat_rows = list(zip(fit_lo, dists))
    return {"checks": checks,
            "constants": {"scattering_exponent": scat, "energy_drift": drift,
                          "dt": dt, "eps": eps, "profile_eps_u": eps_u},
            "series": [{"name": "nonlinear_diagnostics",
                        "header": ["t", "Uy_L2", "Ux_neq_L2", "psi_neq_L2",
                                   "energy", "supp_lo", "supp_hi"],
                        "rows": diag_rows},
                       {"name": "scattering_cauchy",
                        "header": ["t", "dist_to_final"], "rows": scat_rows}],
            "fields": [{"name": "final_state", "t": state.t,
                        "omega": state.omega_hat, "d": state.d_hat}]}


_SCEN_FUNCS = {
    "phi1-oracle": scenario_phi1_oracle,
    "spectral-scan": scenario_spectral_scan,
    "wave-identities": scenario_wave_identities,
    "green-audit": scenario_green_audit,
    "multiplier-audit": scenario_multiplier_audit,
    "cross-oracle": scenario_cross_oracle,
    "linear-damping": scenario_linear_damping,
    "nonlinear-demo": scenario_nonlinear_demo,
}


def run_scenario(cfg: ScenarioConfig):
    """Execute the configured scenario and return its results dict."""
    np.random.seed(cfg.seed)  # defensive; scenarios use explicit generators
    return _SCEN_FUNCS[cfg.scenario](cfg)


def emit_outputs(results: Dict, out_dir, config_echo=None):
    """Write summary, CSV series, binary kernels/fields, and the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IOError(f"output directory {out} not writable: {exc}") from exc
    paths = []
    # wall-clock values would break byte-for-byte reproducibility of the
    # artifact set; the measured runtime still prints with the check line
    hashed_checks = [dict(c, value=None) if c["name"] == "runtime_s" else c
                     for c in results.get("checks", [])]
    summary = {
        "config": config_echo or {},
        "checks": hashed_checks,
        "constants": results.get("constants", {}),
        "all_passed": all(c["passed"] for c in results.get("checks", [])),
    }
    spath = out / "summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    paths.append(spath)
    for series in results.get("series", []):
        p = out / f"{series['name']}.csv"
        io_formats.write_csv(p, series["header"], series["rows"])
        paths.append(p)
    for kern in results.get("kernels", []):
        p = out / f"{kern['name']}.bin"
        io_formats.write_kernel_binary(p, kern["array"], kern["k"])
        paths.append(p)
    for fld in results.get("fields", []):
        p = out / f"{fld['name']}.bin"
        io_formats.write_field_binary(p, fld["t"], fld["omega"], fld["d"])
        paths.append(p)
    manifest = io_formats.write_manifest(out, paths)
    return paths + [manifest]


def main(argv=None):
    ap = argparse.ArgumentParser(prog="channel-damp",
                                 description="Inviscid-damping numerical laboratory")
    ap.add_argument("--config", type=str, help="TOML scenario configuration")
    ap.add_argument("--out", type=str, default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--ny", type=int, default=None, help="override grid size")
    ap.add_argument("--kmax", type=int, default=None, help="override k_max")
    ap.add_argument("--scenario", type=str, default=None,
                    help="scenario name (alternative to --config)")
    ap.add_argument("--list-scenarios", action="store_true")
    args = ap.parse_args(argv)

    if args.list_scenarios:
        for s in SCENARIOS:
            print(s)
        return 0

    threads = os.environ.get("CHANNEL_DAMP_THREADS")
    if threads is not None:
        # caps BLAS-level parallelism; the scenarios themselves are serial
        os.environ.setdefault("OMP_NUM_THREADS", threads)

    try:
        if args.config:
            cfg = parse_config(args.config)
        elif args.scenario:
            cfg = config_from_dict({"scenario": args.scenario})
        else:
            print("error: need --config or --scenario", file=sys.stderr)
            return 2
        if args.seed is not None:
            cfg.seed = args.seed
        if args.ny is not None:
            if args.ny < 33 or args.ny % 2 == 0:
                raise RangeError(f"n_y = {args.ny} out of range")
            cfg.profile_spec["n_y"] = args.ny
        if args.kmax is not None:
            cfg.params["k_max"] = args.kmax
        out_dir = args.out or cfg.out or f"out_{cfg.scenario}"
    except (ParseError, UnknownKey, RangeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        results = run_scenario(cfg)
        emit_outputs(results, out_dir, cfg.echo())
    except (ParseError, UnknownKey, RangeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ChannelDampError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return 3

    ok = True
    for c in results["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        ok &= c["passed"]
        print(f"[{status}] {cfg.scenario}:{c['name']} value={c['value']:.6g} ({c['threshold']})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
