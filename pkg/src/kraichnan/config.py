"""Run configuration: YAML documents merged over defaults and validated up front.

Every parameter is checked and every object the run needs is constructed in
``preflight`` before any compute starts, so a bad file fails fast.
"""

import copy
import json
from dataclasses import dataclass

import numpy as np
import yaml

from . import schemes as sch
from .errors import ConfigError, KraichnanError
from .grid import Grid
from .operators import ScalarField
from .selfsimilar import SelfSimilarForcing, SimilarityProfile
from .solver import MidpointForcing
from .spectra import build_noise_model, make_density

DEFAULTS = {
    "noise": {"family": "log_euler", "params": {"gamma": 1.0}, "L": 2 * np.pi, "N": 32,
              "cutoff": None, "kmax": None},
    "dynamics": {"scheme": "linear", "nu": 0.0, "beta": 1.0, "gamma": 1.0, "dt": 1e-3, "T": 0.1,
                 "dealias": True, "corrector": True, "weighting": "exponential",
                 "transport": "conservative", "cfl_max": 1.0, "substeps": 1},
    "data": {
        "initial": {"preset": "single-mode", "amplitude": 1.0, "seed": 0, "mode": [1, 0],
                    "band": [1.0, 3.0], "radius": 1.0},
        "forcing": {"kind": "none", "alpha": 0.5, "beta": 0.25, "t0": 1.0, "radius": 2.5, "path": None},
    },
    "ensemble": {"M": 1, "master_seed": 0},
    "outputs": {"directory": "out", "snapshot_times": [], "diagnostics_stride": 1, "checkpoints": [],
                "snapshot_members": 1},
    "master_eq": {"closure": "absorbing", "K": None, "dt": None, "T": None, "record_every": 1,
                  "initial": "data"},
    "girsanov": {"scheme": "log_euler", "gamma": None, "beta": None, "sign": 1.0, "direct": False},
    "selfsimilar": {"alpha": 0.5, "beta": 0.25, "p": 2.0, "t_min": 0.1, "levels": 8, "t": 1.0,
                    "N": 256, "radius": 2.5, "h": [0.02, 0.01, 0.005, 0.0025]},
    "noise_diag": {"samples": 200, "shifts": [1, 2, 4, 8], "separations": 12},
    "compare": {"mc": None, "oracle": None, "threshold": 3.0, "required": 0.95, "rel_floor": 1e-6},
}

PRESETS = ("single-mode", "random-band", "radial-bump")
SCHEMES = ("linear", "log_euler", "hypo_ns", "flandoli")


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for key, val in (over or {}).items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {path + key!r}")
        if isinstance(base[key], dict) and key != "params":
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key} must be a mapping")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def load(path):
    """Read a YAML config, or the config echoed inside a run manifest."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    if "manifest_version" in doc:
        doc = doc["config"]
    return resolve(doc)


def resolve(doc):
    """Defaults merged with ``doc``; unknown keys are rejected."""
    if "params" in doc.get("noise", {}) and not isinstance(doc["noise"]["params"], dict):
        raise ConfigError("noise.params must be a mapping")
    cfg = _merge(DEFAULTS, doc)
    if "params" in doc.get("noise", {}):
        cfg["noise"]["params"] = dict(doc["noise"]["params"])
    return json.loads(json.dumps(cfg))


def _range(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError as exc:
        raise ConfigError(f"parameter out of range: {exc}") from None


def _num(value, name, lo=None, hi=None, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value}")
    if (lo is not None and value < lo) or (hi is not None and value > hi) or not np.isfinite(value):
        raise ConfigError(f"parameter out of range: {name}={value} outside [{lo}, {hi}]")
    return int(value) if integer else float(value)


def make_scheme(name, nu=0.0, beta=1.0, gamma=1.0):
    if name not in SCHEMES:
        raise ConfigError(f"unknown scheme {name!r}; choose from {list(SCHEMES)}")
    if name == "linear":
        return sch.Linear(nu, beta)
    if name == "log_euler":
        return _range(sch.LogEulerScheme, gamma, nu, beta)
    if name == "hypo_ns":
        return _range(sch.HypoNSScheme, beta, nu)
    s = _range(sch.flandoli_scheme, gamma)
    return sch.GeneralR(s.multiplier, nu, beta, s.pairs_with)


def initial_field(grid, spec):
    preset = spec["preset"]
    amp = _num(spec["amplitude"], "data.initial.amplitude")
    if preset not in PRESETS:
        raise ConfigError(f"unknown initial preset {preset!r}; choose from {list(PRESETS)}")
    x1, x2 = grid.coords
    if preset == "single-mode":
        n = spec["mode"]
        if len(n) != 2 or any(int(v) != v for v in n) or not 0 < max(abs(n[0]), abs(n[1])) <= grid.dealias_band:
            raise ConfigError(f"parameter out of range: data.initial.mode {n} must be a nonzero mode in the band")
        return ScalarField(grid, amp * np.cos(grid.dk * (n[0] * x1 + n[1] * x2)))
    if preset == "random-band":
        lo, hi = (_num(v, "data.initial.band") for v in spec["band"])
        if not 0 <= lo < hi:
            raise ConfigError(f"parameter out of range: data.initial.band [{lo}, {hi}]")
        rng = np.random.default_rng(_num(spec["seed"], "data.initial.seed", 0, integer=True))
        sel = (grid.kmag >= lo) & (grid.kmag <= hi) & grid.band_mask(grid.dealias_band) & (grid.ksq > 0)
        if not sel.any():
            raise ConfigError("data.initial.band selects no modes")
        hat = np.zeros(grid.rshape, dtype=complex)
        hat[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
        w = grid.from_hat(hat)
        w = ScalarField(grid, w)
        hat = w.hat * grid.band_mask(grid.dealias_band)
        hat[0, 0] = 0.0
        norm = np.sqrt(np.sum(grid.rfft_weight * np.abs(hat) ** 2) * grid.L**2)
        return ScalarField(grid, hat=amp * hat / norm)
    # radial-bump: zero-integral annular profile centred in the box
    r = _num(spec["radius"], "data.initial.radius", 0)
    if r >= grid.L / 2:
        raise ConfigError(f"parameter out of range: data.initial.radius {r} must be below L/2")
    prof = SimilarityProfile(1.0, 0.5, amplitude=amp, radius=r)
    c = grid.L / 2
    w = prof.value(x1 - c, x2 - c)
    return ScalarField(grid, w - w.mean())


class FileForcing(MidpointForcing):
    """Time-independent forcing read from a grid snapshot."""

    def __init__(self, values):
        self.values = values
        super().__init__(lambda t, grid: self.values)


def make_forcing(grid, spec, dyn):
    kind = spec["kind"]
    if kind == "none":
        return None
    if kind == "selfsimilar":
        prof = _range(SimilarityProfile, _num(spec["alpha"], "forcing.alpha"), _num(spec["beta"], "forcing.beta"),
                      radius=_num(spec["radius"], "forcing.radius", 0))
        t0 = _num(spec["t0"], "forcing.t0", 0)
        ext = (t0 + dyn["T"]) ** (1 / prof.alpha) * prof.extent
        if t0 <= 0 or ext >= grid.L / 2:
            raise ConfigError(f"parameter out of range: self-similar support {ext:.4g} over the run exceeds L/2")
        return SelfSimilarForcing(prof, t0)
    if kind == "file":
        from .io import read_snapshot

        data, L, _, _ = read_snapshot(spec["path"])
        if data.shape != (grid.N, grid.N) or not np.isclose(L, grid.L):
            raise ConfigError("forcing file does not match the grid")
        return FileForcing(data)
    raise ConfigError(f"unknown forcing kind {kind!r}; choose none, selfsimilar or file")


@dataclass
class Prepared:
    """Objects built from a resolved config."""

    config: dict
    grid: Grid
    model: object
    scheme: object
    initial: ScalarField
    forcing: object
    dt: float
    T: float
    M: int
    seed: int


def preflight(cfg):
    """Validate the whole document and build the run objects."""
    try:
        nz, dyn, ens = cfg["noise"], cfg["dynamics"], cfg["ensemble"]
        grid = _range(Grid, _num(nz["N"], "noise.N", 8, integer=True), _num(nz["L"], "noise.L", 0))
        density = _range(make_density, nz["family"], **nz["params"])
        cutoff = _num(nz["cutoff"], "noise.cutoff", 0, allow_none=True)
        kmax = _num(nz["kmax"], "noise.kmax", 1, grid.N // 2 - 1, integer=True, allow_none=True)
        if kmax is None and dyn["dealias"]:
            kmax = grid.dealias_band
        model = _range(build_noise_model, density, grid, cutoff=cutoff, kmax=kmax)
        dt = _num(dyn["dt"], "dynamics.dt", 0)
        T = _num(dyn["T"], "dynamics.T", 0)
        if dt <= 0:
            raise ConfigError("parameter out of range: dynamics.dt must be positive")
        scheme = make_scheme(dyn["scheme"], _num(dyn["nu"], "dynamics.nu", 0),
                             _num(dyn["beta"], "dynamics.beta", 0, 2), _num(dyn["gamma"], "dynamics.gamma", 0))
        initial = initial_field(grid, cfg["data"]["initial"])
        forcing = make_forcing(grid, cfg["data"]["forcing"], dyn)
        M = _num(ens["M"], "ensemble.M", 1, integer=True)
        seed = _num(ens["master_seed"], "ensemble.master_seed", 0, integer=True)
        for t in cfg["outputs"]["snapshot_times"] + cfg["outputs"]["checkpoints"]:
            _num(t, "outputs time", 0, T)
        _num(cfg["outputs"]["diagnostics_stride"], "outputs.diagnostics_stride", 1, integer=True)
    except KraichnanError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    return Prepared(cfg, grid, model, scheme, initial, forcing, dt, T, M, seed)
