"""Command line entry point: ``kraichnan <command> --config run.yaml --out DIR``.

Every command writes its artifacts plus one ``manifest.json`` into the output
directory. The manifest echoes the resolved configuration, so passing it back
as ``--config`` reproduces the numeric artifacts byte for byte.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 comparison failure.
"""

import argparse
import json
import os
import sys
import time
from importlib import metadata

import numpy as np

from . import config as cf
from . import girsanov as gs
from . import io
from . import master_eq as me
from . import sampler, selfsimilar
from .errors import ComparisonFailure, ConfigError, DomainError, EnsembleBlowUp, NumericalError, PreconditionError
from .solver import DIAG_KEYS, SolverConfig, simulate
from .spectra import classify_regularity

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_COMPARE = 0, 2, 3, 4
MANIFEST = "manifest.json"


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command, cfg, out):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.files = []
        self.derived = {}
        self.start = time.time()
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def json(self, name, obj):
        _write_json(self.path(name), obj)

    def csv(self, name, header, rows):
        io.write_csv(self.path(name), header, rows)

    def manifest(self, status="ok", error=None):
        outputs = {f: io.sha256(os.path.join(self.out, f)) for f in sorted(set(self.files))}
        doc = {
            "manifest_version": 1,
            "command": self.command,
            "status": status,
            "config": self.cfg,
            "derived": self.derived,
            "tool": {"name": "kraichnan", "version": _version(), "numpy": np.__version__},
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.start)),
            "wall_clock_s": time.time() - self.start,
            "outputs": outputs,
        }
        if error is not None:
            doc["error"] = error
        _write_json(os.path.join(self.out, MANIFEST), doc)


def _derived(prep):
    m = prep.model
    eq = me.MasterEquation(m, min(m.kmax, prep.grid.N // 2 - 1), prep.scheme.nu, prep.scheme.beta)
    return {
        "kappa": m.kappa,
        "c_norm": m.c_norm,
        "noise_kmax": m.kmax,
        "dealias_band": prep.grid.dealias_band,
        "master_eq_stability_bound": eq.stability_bound,
        "steps": int(round(prep.T / prep.dt)),
    }


def _solver_config(prep, **extra):
    c = prep.config
    dyn, out = c["dynamics"], c["outputs"]
    kw = dict(
        model=prep.model,
        scheme=prep.scheme,
        dt=prep.dt,
        T=prep.T,
        dealias=bool(dyn["dealias"]),
        forcing=prep.forcing,
        seed=prep.seed,
        members=prep.M,
        record_every=int(out["diagnostics_stride"]),
        checkpoints=tuple(out["checkpoints"]) or (prep.T,),
        snapshot_times=tuple(out["snapshot_times"]),
        corrector=bool(dyn["corrector"]),
        weighting=dyn["weighting"],
        transport=dyn["transport"],
        cfl_max=float(dyn["cfl_max"]),
        substeps=int(dyn["substeps"]),
        diag_beta=float(dyn["beta"]),
        diag_gamma=float(dyn["gamma"]),
    )
    kw.update(extra)
    return SolverConfig(**kw)


def _emit_stats(run, prep, stats):
    rec = stats.record
    rows = []
    for i, t in enumerate(rec.times):
        for j, mid in enumerate(stats.member_ids):
            rows.append([float(t), mid] + [float(rec.diagnostics[k][i, j]) for k in DIAG_KEYS])
    run.csv("diagnostics.csv", ["time", "member"] + list(DIAG_KEYS), rows)
    K = stats.K
    n = np.arange(-K, K + 1)
    rows = []
    for i, t in enumerate(stats.checkpoint_times):
        for a, n1 in enumerate(n):
            for b, n2 in enumerate(n):
                rows.append([float(t), int(n1), int(n2), float(stats.mode_energy[i, a, b]),
                             float(stats.mode_energy_se[i, a, b])])
    run.csv("mode_energy.csv", ["time", "n1", "n2", "mean", "stderr"], rows)
    rows = []
    for i, t in enumerate(stats.checkpoint_times):
        s, avg = me.shell_average(stats.mode_energy[i], prep.grid.L)
        rows += [[float(t), int(k), float(v)] for k, v in zip(s, avg)]
    run.csv("spectra.csv", ["time", "shell", "energy"], rows)
    keep = int(prep.config["outputs"]["snapshot_members"])
    for t, vals in sorted(rec.snapshots.items()):
        for j in range(min(keep, vals.shape[0])):
            io.write_snapshot(run.path(f"snapshot_t{t:.6g}_m{stats.member_ids[j]}.bin"), vals[j], prep.grid.L, t)


def cmd_simulate(cfg, run):
    prep = cf.preflight(cfg)
    run.derived = _derived(prep)
    sc = _solver_config(prep)
    try:
        stats = simulate(prep.initial, sc)
    except EnsembleBlowUp as exc:
        _emit_stats(run, prep, exc.partial)
        raise
    _emit_stats(run, prep, stats)
    mean_l2, se_l2 = stats.norm_stats("L2")
    run.json("summary.json", {"M": prep.M, "T": prep.T, "final_L2_mean": mean_l2[-1], "final_L2_stderr": se_l2[-1]})


def _initial_spectrum(prep, K):
    mode = prep.config["master_eq"]["initial"]
    if mode == "zero":
        return np.zeros((2 * K + 1, 2 * K + 1))
    if mode != "data":
        raise ConfigError("master_eq.initial must be 'data' or 'zero'")
    lat = prep.grid.to_lattice(prep.initial.hat, K)
    a = np.abs(lat) ** 2
    a[K, K] = 0.0
    return a


def cmd_master_eq(cfg, run):
    prep = cf.preflight(cfg)
    mc = cfg["master_eq"]
    K = mc["K"] if mc["K"] is not None else (prep.grid.dealias_band if cfg["dynamics"]["dealias"] else prep.grid.N // 2 - 1)
    K = cf._num(K, "master_eq.K", 1, prep.grid.N // 2 - 1, integer=True)
    nu, beta = prep.scheme.nu, prep.scheme.beta
    eq = me.MasterEquation(prep.model, K, nu, beta, mc["closure"])
    T = mc["T"] if mc["T"] is not None else prep.T
    dt = mc["dt"]
    if dt is None:
        # largest step within the stability bound that divides T
        dt = min(prep.dt, eq.stability_bound)
        dt = T / max(1, int(np.ceil(T / dt - 1e-9))) if T > 0 else dt
    run.derived = _derived(prep) | {"K": K, "stability_bound": eq.stability_bound, "dt": dt}
    a0 = _initial_spectrum(prep, K)
    traj = me.integrate(a0, prep.model, nu, beta, T=T, dt=dt, closure=mc["closure"],
                        record_every=int(mc["record_every"]))
    n = np.arange(-K, K + 1)
    rows = []
    for t, a in zip(traj.times, traj.a):
        rows += [[float(t), int(n1), int(n2), float(a[i, j])] for i, n1 in enumerate(n) for j, n2 in enumerate(n)]
    run.csv("lattice_energy.csv", ["time", "n1", "n2", "a"], rows)
    rows = []
    for t, a in zip(traj.times, traj.a):
        s, avg = me.shell_average(a, prep.grid.L)
        rows += [[float(t), int(k), float(v)] for k, v in zip(s, avg)]
    run.csv("spectra.csv", ["time", "shell", "energy"], rows)
    io.write_snapshot(run.path("final_lattice.bin"), traj.a[-1], prep.grid.L, traj.times[-1], io.KIND_LATTICE)
    mass = traj.a.sum(axis=(1, 2))
    rep = me.l2_monotonicity_check(traj, prep.model) if mc["closure"] == "wrap" and nu == 0 else None
    summary = {
        "K": K,
        "closure": mc["closure"],
        "mass_initial": mass[0],
        "mass_final": mass[-1],
        "mass_relative_drift": float(abs(mass[-1] - mass[0]) / mass[0]) if mass[0] > 0 else 0.0,
    }
    if rep is not None:
        summary.update(l2_nonincreasing=rep.l2_nonincreasing, max_principle=rep.max_principle)
    run.json("summary.json", summary)


def _read_lattice_csv(path, value_cols):
    header, data = io.read_csv(path)
    times = np.unique(data[:, 0])
    K = int(np.max(data[:, 1]))
    out = []
    for col in value_cols:
        v = data[:, header.index(col)]
        arr = np.zeros((times.size, 2 * K + 1, 2 * K + 1))
        ti = np.searchsorted(times, data[:, 0])
        arr[ti, data[:, 1].astype(int) + K, data[:, 2].astype(int) + K] = v
        out.append(arr)
    return times, K, out


def cmd_compare(cfg, run):
    c = cfg["compare"]
    mc_dir, oracle_dir = c["mc"], c["oracle"]
    if not mc_dir or not oracle_dir:
        raise ConfigError("compare needs Monte Carlo and oracle artifact directories")
    try:
        times, K, (mean, se) = _read_lattice_csv(os.path.join(mc_dir, "mode_energy.csv"), ["mean", "stderr"])
        ot, Ko, (a,) = _read_lattice_csv(os.path.join(oracle_dir, "lattice_energy.csv"), ["a"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read comparison inputs: {exc}") from None
    traj = me.SpectrumTrajectory(ot, a, Ko, cfg["noise"]["L"], "absorbing", float("nan"))
    rep = me.compare_mc(times, mean, se, traj, rel_floor=c["rel_floor"], threshold=c["threshold"],
                        required=c["required"])
    run.derived = {"mc_checksum": io.sha256(os.path.join(mc_dir, "mode_energy.csv")),
                   "oracle_checksum": io.sha256(os.path.join(oracle_dir, "lattice_energy.csv"))}
    run.json("comparison.json", {
        "passed": rep.passed,
        "fraction_within": rep.fraction_within,
        "n_active": rep.n_active,
        "worst": list(rep.worst),
        "threshold": rep.threshold,
        "required": rep.required,
    })
    if not rep.passed:
        raise ComparisonFailure(f"only {rep.fraction_within:.3f} of active modes within {rep.threshold} sigma")


def cmd_girsanov(cfg, run):
    prep = cf.preflight(cfg)
    g = cfg["girsanov"]
    dyn = cfg["dynamics"]
    gamma = g["gamma"] if g["gamma"] is not None else dyn["gamma"]
    beta = g["beta"] if g["beta"] is not None else dyn["beta"]
    drift = cf.make_scheme(g["scheme"], 0.0, beta, gamma)
    if drift.symbol(prep.grid) is None:
        raise ConfigError("girsanov.scheme must carry a drift")
    gs._check_pairing(prep.model, drift)
    if prep.M < 2:
        raise ConfigError("girsanov needs ensemble.M >= 2")
    run.derived = _derived(prep)
    lin = cf.make_scheme("linear", prep.scheme.nu, prep.scheme.beta)
    sc = _solver_config(prep, scheme=lin, girsanov=drift, girsanov_sign=float(g["sign"]),
                        checkpoints=(), snapshot_times=(), record_every=max(1, int(round(prep.T / prep.dt))))
    stats = simulate(prep.initial, sc)
    acc = stats.girsanov
    F = stats.record.diagnostics["L2"][-1] ** 2
    dens = acc.density
    rows = [[mid, float(a), float(b), float(c), float(d), float(f)] for mid, a, b, c, d, f in
            zip(stats.member_ids, acc.stochastic_integral, acc.quadratic, acc.log_density, dens, F)]
    run.csv("girsanov.csv", ["member", "stochastic_integral", "quadratic", "log_density", "density", "L2sq"], rows)
    rw = gs.reweighted_expectation(F, dens)
    ent, ent_se = gs.entropy_bound(acc)
    report = {
        "observable": "L2sq",
        "scheme": drift.name,
        "sign": float(g["sign"]),
        "T": prep.T,
        "martingale_mean": float(dens.mean()),
        "martingale_stderr": float(dens.std(ddof=1) / np.sqrt(dens.size)),
        "entropy_bound": ent,
        "entropy_bound_stderr": ent_se,
        **rw.as_dict(),
    }
    if g["direct"]:
        nl = cf.make_scheme(g["scheme"], prep.scheme.nu, prep.scheme.beta, gamma)
        direct = simulate(prep.initial, _solver_config(prep, scheme=nl, seed=prep.seed + 1, checkpoints=(),
                                                       snapshot_times=(), record_every=sc.record_every))
        G = direct.record.diagnostics["L2"][-1] ** 2
        report["direct_estimate"] = float(G.mean())
        report["direct_stderr"] = float(G.std(ddof=1) / np.sqrt(G.size))
        report["z"] = float((rw.estimate - G.mean()) / np.hypot(rw.stderr, report["direct_stderr"]))
    run.json("girsanov.json", report)


def cmd_selfsimilar(cfg, run):
    from .grid import Grid

    s = cfg["selfsimilar"]
    alpha = cf._num(s["alpha"], "selfsimilar.alpha", 0, 2)
    beta = cf._num(s["beta"], "selfsimilar.beta", 0, 2)
    p = cf._num(s["p"], "selfsimilar.p", 1)
    pred = cf._range(selfsimilar.integrability_predicates, alpha, beta, p)
    quad = cf._range(selfsimilar.quadrature_confirmation, alpha, beta, p, t_min=s["t_min"], levels=int(s["levels"]))
    rows = []
    for name, vals in quad.values.items():
        rows += [[name, float(t), float(v)] for t, v in zip(quad.t_mins, vals)]
    run.csv("integrals.csv", ["integrand", "t_min", "value"], rows)
    prof = cf._range(selfsimilar.SimilarityProfile, alpha, beta, radius=cf._num(s["radius"], "selfsimilar.radius", 0))
    grid = cf._range(Grid, int(s["N"]), cfg["noise"]["L"])
    t = cf._num(s["t"], "selfsimilar.t", 0)
    hs = [cf._num(h, "selfsimilar.h", 0) for h in s["h"]]
    res = [selfsimilar.residual(prof, t, grid, h=h) for h in hs]
    pde = np.array([r.pde_relative for r in res])
    order = float(np.polyfit(np.log(hs), np.log(pde), 1)[0]) if len(hs) > 1 and np.all(pde > 0) else float("nan")
    run.csv("residuals.csv", ["h", "transport_relative", "pde_relative"],
            [[h, r.transport_relative, r.pde_relative] for h, r in zip(hs, res)])
    run.json("selfsimilar.json", {
        "alpha": alpha, "beta": beta, "p": p,
        "predicates": pred.as_dict(),
        "quadrature": {"verdicts": quad.verdicts, "slopes": quad.slopes, "exponents": quad.exponents,
                       "predicates": quad.predicates()},
        "agree": all(quad.predicates()[k] == getattr(pred, k) for k in quad.predicates()),
        "transport_relative": res[0].transport_relative,
        "pde_order": order,
    })


def cmd_noise_diag(cfg, run):
    prep = cf.preflight(cfg)
    d = cfg["noise_diag"]
    run.derived = _derived(prep)
    shifts = [cf._num(v, "noise_diag.shifts", 1, prep.grid.N // 2, integer=True) for v in d["shifts"]]
    sep, emp, exact = sampler.structure_function(prep.model, int(d["samples"]), shifts, prep.seed)
    run.csv("structure_function.csv", ["separation", "empirical", "exact"],
            [[float(a), float(b), float(c)] for a, b, c in zip(sep, emp, exact)])
    reg = classify_regularity(prep.model.density)
    run.json("noise.json", {"kappa": prep.model.kappa, "c_norm": prep.model.c_norm, "kmax": prep.model.kmax,
                            "regularity": reg.labels})


COMMANDS = {
    "simulate": cmd_simulate,
    "master-eq": cmd_master_eq,
    "compare": cmd_compare,
    "girsanov": cmd_girsanov,
    "selfsimilar": cmd_selfsimilar,
    "noise-diag": cmd_noise_diag,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="kraichnan", description="Transport-noise vorticity experiments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="YAML config or a previous manifest.json")
    ap.add_argument("--out", help="output directory (overrides outputs.directory)")
    ap.add_argument("--seed", type=int, help="override ensemble.master_seed")
    ap.add_argument("--members", type=int, help="override ensemble.M")
    ap.add_argument("--mc", help="compare: Monte Carlo artifact directory")
    ap.add_argument("--oracle", help="compare: master-equation artifact directory")
    return ap


def _error_object(exc, kind):
    return {"error": kind, "type": type(exc).__name__, "message": str(exc)}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cf.load(args.config) if args.config else cf.resolve({})
        if args.seed is not None:
            cfg["ensemble"]["master_seed"] = args.seed
        if args.members is not None:
            cfg["ensemble"]["M"] = args.members
        if args.out:
            cfg["outputs"]["directory"] = args.out
        out = cfg["outputs"]["directory"]
    except ConfigError as exc:
        print(json.dumps(_error_object(exc, "config")), file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args.command, cfg, out)
    if args.command == "compare":
        # recorded in the manifest so a rerun finds the same inputs
        cfg["compare"]["mc"] = args.mc or cfg["compare"]["mc"]
        cfg["compare"]["oracle"] = args.oracle or cfg["compare"]["oracle"]
    try:
        COMMANDS[args.command](cfg, run)
    except (ConfigError, PreconditionError, DomainError) as exc:
        code, err = EXIT_CONFIG, _error_object(exc, "config")
    except NumericalError as exc:
        code, err = EXIT_NUMERIC, _error_object(exc, "numerical")
    except ComparisonFailure as exc:
        code, err = EXIT_COMPARE, _error_object(exc, "comparison")
    else:
        run.manifest()
        return EXIT_OK
    run.json("error.json", err)
    run.manifest(status="failed", error=err)
    print(json.dumps(err), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
