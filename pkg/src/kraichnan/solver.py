"""Pseudo-spectral Euler-Maruyama stepping of the Ito transport equation.

One step with integrating factor E = exp(-lam dt), lam = kappa |k|^2 + nu |k|^beta:

    w_hat <- E w_hat - S FT(div((dW + b dt) w)) + P int_f_hat,   b = R curl^-1 w.

With ``weighting="left"``, S = P = E (plain Euler-Maruyama after the
integrating factor). The default ``"exponential"`` uses
S = sqrt((1 - E^2) / (2 lam dt)), which matches the variance of the stochastic
convolution over one step, and P = (1 - E) / (lam dt). The plain choice carries
an O(lam dt) bias in second moments; the exponential one removes it. Drift
and noise share the weight S, so Girsanov weights stay exact.

Products are formed on the grid and truncated to the 2/3 band. Ensemble
members are stacked along a leading axis and each draws its increments from
its own counter-based stream, so results do not depend on batching.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import girsanov as gs
from .errors import BlowUp, ConfigError, EnsembleBlowUp, PreconditionError, SingularPairing, StabilityError
from .operators import ScalarField, biot_savart_hat, inverse_laplacian_symbol
from .sampler import IncrementDrawer, member_key, stream
from .schemes import Linear, dissipation_rate


@dataclass(frozen=True)
class SolverConfig:
    model: object
    scheme: object = field(default_factory=Linear)
    dt: float = 1e-3
    T: float = 0.0
    dealias: bool = True
    forcing: object = None
    seed: int = 0
    members: int = 1
    record_every: int = 1
    checkpoints: tuple = ()
    snapshot_times: tuple = ()
    transport: str = "conservative"
    corrector: bool = True
    cfl_max: float = 1.0
    substeps: int = 1
    girsanov: object = None
    girsanov_sign: float = 1.0
    compensator: bool = False
    member_ids: tuple | None = None
    diag_p: float = 4.0
    diag_beta: float | None = None
    diag_gamma: float | None = None
    keep_final: bool = False
    weighting: str = "exponential"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise ConfigError(f"T must be non-negative, got {self.T}")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigError(f"T={self.T} is not an integer number of steps of dt={self.dt}")
        if self.transport not in ("conservative", "advective"):
            raise ConfigError(f"transport must be conservative or advective, got {self.transport!r}")
        if self.weighting not in ("exponential", "left"):
            raise ConfigError(f"weighting must be exponential or left, got {self.weighting!r}")
        if self.members < 1 or int(self.members) != self.members:
            raise ConfigError(f"members must be a positive integer, got {self.members}")
        if self.record_every < 1 or self.substeps < 1:
            raise ConfigError("record_every and substeps must be >= 1")
        if self.member_ids is not None and len(self.member_ids) != self.members:
            raise ConfigError("member_ids must list one id per member")
        if self.dealias and self.model.kmax > self.model.grid.dealias_band:
            raise ConfigError(
                f"noise modes up to {self.model.kmax} exceed the dealiasing band "
                f"{self.model.grid.dealias_band}; rebuild the model with kmax <= band"
            )
        if self.girsanov is not None and self.girsanov.symbol(self.model.grid) is None:
            raise ConfigError("girsanov scheme has no drift")
        if self.compensator and (self.scheme.symbol(self.model.grid) is not None or self.forcing is not None
                                 or self.scheme.nu or not self.corrector):
            raise ConfigError("the L2 compensator is only available for unforced linear transport")

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def band(self):
        g = self.model.grid
        return g.dealias_band if self.dealias else g.N // 2 - 1

    def step_index(self, t):
        i = round(t / self.dt)
        if abs(i * self.dt - t) > 1e-9 * max(1.0, t) or not 0 <= i <= self.steps:
            raise ConfigError(f"time {t} is not a step time in [0, {self.T}]")
        return int(i)


class MidpointForcing:
    """Forcing given by a callable fn(t, grid) -> grid values; midpoint rule per step."""

    def __init__(self, fn):
        self.fn = fn

    def at(self, grid, t):
        return ScalarField(grid, self.fn(t, grid))

    def integral(self, grid, t0, t1):
        return (t1 - t0) * self.at(grid, 0.5 * (t0 + t1)).hat


class Stepper:
    """Batched one-step map for a fixed configuration."""

    def __init__(self, cfg):
        self.cfg = cfg
        g = self.grid = cfg.model.grid
        self.mask = g.band_mask(cfg.band)
        kappa = cfg.model.kappa if cfg.corrector else 0.0
        self.rate = kappa * g.ksq + dissipation_rate(cfg.scheme, g)
        self.E = np.exp(-self.rate * cfg.dt)
        x = self.rate * cfg.dt
        if cfg.weighting == "left":
            self.S = self.P = self.E
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                self.S = np.where(x > 0, np.sqrt(-np.expm1(-2 * x) / (2 * x)), 1.0)
                self.P = np.where(x > 0, -np.expm1(-x) / x, 1.0)
        sym = cfg.scheme.symbol(g)
        self.drift = None if sym is None else sym * self.mask
        self.gdrift = None if cfg.girsanov is None else cfg.girsanov.symbol(g) * self.mask
        self.drawer = IncrementDrawer(cfg.model)

    def velocity_hat(self, w_hat, symbol):
        return biot_savart_hat(self.grid, w_hat) * symbol

    def increment(self, keys, n):
        """Increment for step n of each member (sum of ``substeps`` finer draws)."""
        cfg = self.cfg
        sub = cfg.substeps
        h = cfg.dt / sub
        vals = np.zeros((len(keys), self.drawer.amp.size), dtype=complex)
        for m, key in enumerate(keys):
            for j in range(sub):
                vals[m] += self.drawer.draw_values(stream(key, n * sub + j), h)
        return self.drawer.assemble(vals)

    def transport(self, w_hat, u_hat):
        g = self.grid
        w = g.from_hat(w_hat)
        u = g.from_hat(u_hat)
        if self.cfg.transport == "conservative":
            flux = g.to_hat(u * w[..., None, :, :]) * self.mask
            return 1j * g.k1 * flux[..., 0, :, :] + 1j * g.k2 * flux[..., 1, :, :]
        grad = g.from_hat(np.stack([1j * g.k1 * w_hat, 1j * g.k2 * w_hat], axis=-3))
        return g.to_hat(np.sum(u * grad, axis=-3)) * self.mask

    def advance(self, w_hat, dW_hat, f_int=None):
        u_hat = dW_hat
        if self.drift is not None:
            u_hat = u_hat + self.cfg.dt * self.velocity_hat(w_hat, self.drift)
        new = self.E * w_hat - self.S * self.transport(w_hat, u_hat)
        if f_int is not None:
            new = new + self.P * f_int
        new = new * self.mask
        new[..., 0, 0] = w_hat[..., 0, 0]
        return new


def cfl_number(cfg, w_hat):
    """dt max|b| k_max + sqrt(4 kappa dt) k_max for the current state."""
    g = cfg.model.grid
    kmax = cfg.band * g.dk
    bmax = 0.0
    sym = cfg.scheme.symbol(g)
    if sym is not None:
        u = g.from_hat(biot_savart_hat(g, w_hat) * sym)
        bmax = float(np.max(np.sqrt(np.sum(u**2, axis=-3))))
    return cfg.dt * bmax * kmax + np.sqrt(4 * cfg.model.kappa * cfg.dt) * kmax


def _diag_gamma(cfg):
    return cfg.diag_gamma if cfg.diag_gamma is not None else getattr(cfg.scheme, "gamma", 1.0)


def _batch_diagnostics(cfg, w_hat):
    g = cfg.model.grid
    w = g.from_hat(w_hat)
    mag2 = np.abs(w_hat) ** 2
    wt = g.rfft_weight * g.L**2
    beta = cfg.diag_beta if cfg.diag_beta is not None else getattr(cfg.scheme, "beta", 0.5)
    gamma = _diag_gamma(cfg)
    p = cfg.diag_p

    def ssum(weight):
        return np.sum(wt * weight * mag2, axis=(-2, -1))

    out = {
        "L1": np.sum(np.abs(w), axis=(-2, -1)) * g.h**2,
        "L2": np.sqrt(ssum(1.0)),
        "Lp": (np.sum(np.abs(w) ** p, axis=(-2, -1)) * g.h**2) ** (1 / p),
        "Hm1": np.sqrt(ssum(inverse_laplacian_symbol(g))),
        "Hbeta2": np.sqrt(ssum(g.kmag**beta)),
        "logw": np.sqrt(ssum(np.log(np.e + g.kmag) ** (2 * gamma))),
    }
    gsch = cfg.girsanov if cfg.girsanov is not None else cfg.scheme
    if gsch.symbol(g) is not None:
        try:
            out["cm"] = gs.cm_multiplier_sum(cfg.model, gsch, mag2)
        except SingularPairing:
            # drift outside the Cameron-Martin space: the norm is infinite
            out["cm"] = np.full(w_hat.shape[0], np.inf)
    else:
        out["cm"] = np.zeros(w_hat.shape[0])
    return out


DIAG_KEYS = ("L1", "L2", "Lp", "Hm1", "Hbeta2", "logw", "cm")


@dataclass
class TrajectoryRecord:
    """Per-record diagnostics; arrays have shape (records,) or (records, members)."""

    times: np.ndarray
    diagnostics: dict
    snapshots: dict = field(default_factory=dict)
    logw_integral: np.ndarray | None = None


@dataclass
class EnsembleStats:
    members: int
    member_ids: tuple
    record: TrajectoryRecord
    checkpoint_times: np.ndarray
    K: int
    mode_energy: np.ndarray
    mode_energy_se: np.ndarray
    mode_mean: np.ndarray
    mode_mean_se: np.ndarray  # standard errors of real and imaginary parts, packed as complex
    girsanov: object = None
    compensator: np.ndarray | None = None
    final_hat: np.ndarray | None = None

    def norm_stats(self, key):
        v = self.record.diagnostics[key]
        return v.mean(axis=1), v.std(axis=1, ddof=1) / np.sqrt(self.members) if self.members > 1 else 0 * v[:, 0]


def _check_initial(w0, cfg):
    if w0.grid != cfg.model.grid:
        raise ConfigError("initial field lives on a different grid than the noise model")
    if cfg.scheme.symbol(w0.grid) is not None or cfg.girsanov is not None:
        if not w0.zero_mean:
            raise PreconditionError("nonlinear schemes need zero-mean initial vorticity")


def simulate(w0, cfg, keys=None):
    """Advance all members; returns raw arrays used by ``run`` and ``run_ensemble``."""
    _check_initial(w0, cfg)
    g = cfg.model.grid
    st = Stepper(cfg)
    M = cfg.members
    ids = tuple(cfg.member_ids) if cfg.member_ids is not None else tuple(range(M))
    if keys is None:
        keys = [member_key(cfg.seed, i) for i in ids]
    w_hat = np.broadcast_to(w0.hat * st.mask, (M,) + g.rshape).copy()
    w_hat[:, 0, 0] = w0.hat[0, 0]
    cfl = cfl_number(cfg, w_hat)
    if np.max(cfl) > cfg.cfl_max:
        raise StabilityError(f"CFL number {np.max(cfl):.3g} exceeds {cfg.cfl_max}; reduce dt")

    K = cfg.band
    ck_steps = sorted({cfg.step_index(t) for t in cfg.checkpoints})
    snap_steps = {cfg.step_index(t): t for t in cfg.snapshot_times}
    rec_steps = set(range(0, cfg.steps + 1, cfg.record_every)) | {cfg.steps}

    times, diags, snaps = [], {k: [] for k in DIAG_KEYS}, {}
    ck_e, ck_e2, ck_m, ck_m2 = [], [], [], []
    logw_int = np.zeros(M)
    prev_logw = None

    acc = None
    if cfg.girsanov is not None:
        acc = gs.GirsanovAccumulator.zeros(M, cfg.girsanov, cfg.girsanov_sign)
    comp = np.zeros(M) if cfg.compensator else None
    comp_eq = gs.compensator_equation(cfg.model, K) if cfg.compensator else None

    failed = {}

    logw_weight = g.rfft_weight * g.L**2 * np.log(np.e + g.kmag) ** (2 * _diag_gamma(cfg))

    def observe(n, w_hat):
        nonlocal prev_logw
        lw = np.sum(logw_weight * np.abs(w_hat) ** 2, axis=(-2, -1))
        if prev_logw is not None:
            logw_int[:] += 0.5 * cfg.dt * (lw + prev_logw)
        prev_logw = lw
        if n in rec_steps:
            d = _batch_diagnostics(cfg, w_hat)
            times.append(n * cfg.dt)
            for k in DIAG_KEYS:
                diags[k].append(d[k])
        if n in snap_steps:
            snaps[snap_steps[n]] = g.from_hat(w_hat)
        if n in ck_steps:
            lat = g.to_lattice(w_hat, K)
            e = np.abs(lat) ** 2
            ck_e.append(e.mean(0))
            ck_e2.append(e.var(0, ddof=1) / M if M > 1 else np.zeros_like(e[0]))
            ck_m.append(lat.mean(0))
            if M > 1:
                ck_m2.append(np.sqrt(lat.real.var(0, ddof=1) / M) + 1j * np.sqrt(lat.imag.var(0, ddof=1) / M))
            else:
                ck_m2.append(np.zeros_like(lat[0]))

    observe(0, w_hat)
    for n in range(cfg.steps):
        dW = st.increment(keys, n)
        f_int = None
        if cfg.forcing is not None:
            f_int = cfg.forcing.integral(g, n * cfg.dt, (n + 1) * cfg.dt)
        if acc is not None:
            acc.update(cfg.model, st.velocity_hat(w_hat, st.gdrift), dW, cfg.dt)
        if comp is not None:
            comp += gs.l2_compensator_step(comp_eq, st, w_hat, K)
        w_hat = st.advance(w_hat, dW, f_int)
        bad = ~np.all(np.isfinite(w_hat), axis=(-2, -1))
        if np.any(bad):
            for m in np.flatnonzero(bad):
                failed.setdefault(ids[m], n + 1)
            if len(failed) == M:
                break
            w_hat[bad] = 0.0
        observe(n + 1, w_hat)

    record = TrajectoryRecord(
        np.array(times),
        {k: np.array(v) for k, v in diags.items()},
        snaps,
        logw_int,
    )
    stats = EnsembleStats(
        members=M,
        member_ids=ids,
        record=record,
        checkpoint_times=np.array([s * cfg.dt for s in ck_steps]),
        K=K,
        mode_energy=np.array(ck_e),
        mode_energy_se=np.sqrt(np.array(ck_e2)),
        mode_mean=np.array(ck_m),
        mode_mean_se=np.array(ck_m2),
        girsanov=acc,
        compensator=comp,
        final_hat=w_hat if cfg.keep_final else None,
    )
    if failed:
        if M == 1:
            raise BlowUp(next(iter(failed.values())))
        raise EnsembleBlowUp(failed, stats)
    return stats


def step(w, cfg, t, dW):
    """One step for a single field; ``dW`` is a VectorFieldIncrement from the same model."""
    _check_initial(w, cfg)
    st = Stepper(replace(cfg, members=1, member_ids=None))
    f_int = None if cfg.forcing is None else cfg.forcing.integral(w.grid, t, t + cfg.dt)
    out = st.advance(w.hat * st.mask, dW.hat, f_int)
    if not np.all(np.isfinite(out)):
        raise BlowUp(round(t / cfg.dt) + 1)
    return ScalarField(w.grid, hat=out)


def run(w0, cfg, member_id=0):
    """Single trajectory for one member; diagnostics have shape (records,)."""
    one = replace(cfg, members=1, member_ids=(member_id,))
    stats = simulate(w0, one)
    rec = stats.record
    return TrajectoryRecord(
        rec.times,
        {k: v[:, 0] for k, v in rec.diagnostics.items()},
        {t: v[0] for t, v in rec.snapshots.items()},
        rec.logw_integral[0],
    )


def run_ensemble(w0, cfg):
    if cfg.members < 2:
        raise ConfigError("run_ensemble needs at least two members")
    return simulate(w0, cfg)
