"""Simulation of underdamped and overdamped Langevin dynamics.

The underdamped SDE (unit mass and temperature) is

    dx = v dt,    dv = -grad U(x) dt - gamma v dt + sqrt(2 gamma) dW,

and its overdamped limit is ``dx = -grad U(x) dt + sqrt(2) dW``.

Besides the stochastic integrators this module propagates exact Gaussian
moments for quadratic potentials and fits exponential decay rates to time
series, so empirical rates can be compared with spectral gaps.

Reproducibility: every trajectory owns a counter-based Philox stream keyed
by ``(seed, trajectory index)``, draws a fixed number of variates per step
in fixed-size chunks, and ensemble statistics are reduced in trajectory
order. The output is therefore independent of the number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DivergenceError, FitFailureError, InvalidParameterError
from .potentials import PotentialSpec

__all__ = [
    "Scheme",
    "FitMode",
    "IntegratorConfig",
    "MomentState",
    "DecayFit",
    "PointMass",
    "Gaussian",
    "EnsembleTable",
    "MonotoneReport",
    "DIVERGENCE_THRESHOLD",
    "trajectory_rng",
    "step_underdamped",
    "step_overdamped",
    "simulate_ensemble",
    "moment_flow_quadratic",
    "stationary_covariance",
    "fit_decay",
    "chi2_proxy",
    "verify_monotone_l2",
]

DIVERGENCE_THRESHOLD = 1e8
NOISE_CHUNK = 256


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "EulerMaruyama"
    SPLITTING = "Splitting"


class FitMode(str, enum.Enum):
    TAIL_LINEAR = "TailLinear"
    ENVELOPE = "Envelope"


@dataclass(frozen=True)
class IntegratorConfig:
    """Time stepping parameters; ``gamma = 0`` gives Hamiltonian dynamics."""

    scheme: Scheme
    dt: float
    t_final: float
    gamma: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        dt, t_final, gamma = float(self.dt), float(self.t_final), float(self.gamma)
        if not (dt > 0 and math.isfinite(dt)):
            raise InvalidParameterError(f"dt must be positive, got {self.dt}")
        if not (t_final > 0 and math.isfinite(t_final)):
            raise InvalidParameterError(f"t_final must be positive, got {self.t_final}")
        if dt > t_final:
            raise InvalidParameterError("dt must not exceed t_final")
        if not (gamma >= 0 and math.isfinite(gamma)):
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma}")
        if dt * gamma >= 2:
            raise InvalidParameterError(f"dt * gamma = {dt * gamma:g} is outside the stable region (< 2)")
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "t_final", t_final)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "seed", seed)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for trajectory ``index`` of ensemble ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _check_finite(step: int, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"non-finite state or gradient at step {step}", step=step)


def _underdamped(x, v, force, grad, scheme, dt, gamma, noise):
    """One step from ``(x, v)`` with ``force = -grad U(x)``; returns ``(x, v, force)``."""
    if scheme is Scheme.EULER_MARUYAMA:
        x_new = x + v * dt
        v_new = v + force * dt - gamma * v * dt + math.sqrt(2.0 * gamma * dt) * noise
        return x_new, v_new, -grad(x_new)
    # BAOAB: half kick, half drift, exact Ornstein-Uhlenbeck, half drift, half kick
    c1 = math.exp(-gamma * dt)
    c2 = math.sqrt(-math.expm1(-2.0 * gamma * dt))
    v = v + 0.5 * dt * force
    x = x + 0.5 * dt * v
    v = c1 * v + c2 * noise
    x = x + 0.5 * dt * v
    force = -grad(x)
    v = v + 0.5 * dt * force
    return x, v, force


def step_underdamped(x, v, spec: PotentialSpec, cfg: IntegratorConfig, noise, step: int = 0):
    """Advance ``(x, v)`` by one step of ``cfg.scheme``.

    ``noise`` is one standard Gaussian vector per step, shaped like ``v``.
    Euler-Maruyama uses the gradient at the old position; the splitting
    scheme is BAOAB, whose Ornstein-Uhlenbeck part refreshes the velocity
    with variance ``1 - exp(-2 gamma dt)``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != v.shape:
        raise InvalidParameterError(f"noise shape {noise.shape} does not match velocity shape {v.shape}")
    _check_finite(step, x, v)
    force = -np.asarray(spec.gradient(x), dtype=float)
    _check_finite(step, force)
    x, v, force = _underdamped(x, v, force, spec.gradient, cfg.scheme, cfg.dt, cfg.gamma, noise)
    _check_finite(step, x, v, force)
    return x, v


def step_overdamped(x, spec: PotentialSpec, dt: float, noise, step: int = 0):
    """Euler-Maruyama step ``x - grad U(x) dt + sqrt(2 dt) noise``."""
    dt = float(dt)
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    _check_finite(step, x)
    g = np.asarray(spec.gradient(x), dtype=float)
    _check_finite(step, g)
    out = x - g * dt + math.sqrt(2.0 * dt) * np.asarray(noise, dtype=float)
    _check_finite(step, out)
    return out


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True)
class PointMass:
    x0: Sequence[float]
    v0: Sequence[float] | None = None


@dataclass(frozen=True)
class Gaussian:
    """Gaussian initial law on ``(x, v)`` (block order), or on ``x`` alone when overdamped."""

    mean: Sequence[float]
    cov: Sequence[Sequence[float]]


Observable = Union[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _observable(name: Observable, spec: PotentialSpec, overdamped: bool):
    if callable(name):
        return getattr(name, "__name__", "custom"), name
    table = {
        "x": lambda x, v: x[:, 0],
        "x2": lambda x, v: np.sum(x * x, axis=1),
        "energy_x": lambda x, v: spec.energy(x),
    }
    if not overdamped:
        table.update({
            "v": lambda x, v: v[:, 0],
            "v2": lambda x, v: np.sum(v * v, axis=1),
            "xv": lambda x, v: np.sum(x * v, axis=1),
            "energy": lambda x, v: spec.energy(x) + 0.5 * np.sum(v * v, axis=1),
        })
    if name not in table:
        raise InvalidParameterError(f"unknown observable {name!r}; choose from {sorted(table)}")
    return name, table[name]


@dataclass(frozen=True)
class EnsembleTable:
    times: np.ndarray
    names: tuple[str, ...]
    mean: np.ndarray  # (n_times, n_observables)
    stderr: np.ndarray
    n_traj: int
    diverged: tuple[int, ...] = ()

    def column(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        k = self.names.index(name)
        return self.mean[:, k], self.stderr[:, k]

    def rows(self) -> list[list[float]]:
        out = []
        for t, mu, se in zip(self.times, self.mean, self.stderr):
            row = [float(t)]
            for a, b in zip(mu, se):
                row += [float(a), float(b)]
            out.append(row)
        return out

    def header(self) -> list[str]:
        cols = ["t"]
        for n in self.names:
            cols += [f"{n}_mean", f"{n}_stderr"]
        return cols


def _initial_state(init, d: int, rng: np.random.Generator, overdamped: bool):
    if isinstance(init, PointMass):
        x0 = np.asarray(init.x0, dtype=float).reshape(d)
        v0 = np.zeros(d) if init.v0 is None else np.asarray(init.v0, dtype=float).reshape(d)
        return x0, v0
    if isinstance(init, Gaussian):
        k = d if overdamped else 2 * d
        mean = np.asarray(init.mean, dtype=float).reshape(k)
        cov = np.asarray(init.cov, dtype=float).reshape(k, k)
        # eigen-factorisation tolerates singular covariances
        vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
        if vals.min() < -1e-10 * max(1.0, abs(vals).max()):
            raise InvalidParameterError("initial covariance is not positive semidefinite")
        z = vecs @ (np.sqrt(np.clip(vals, 0, None)) * rng.standard_normal(k)) + mean
        return (z, np.zeros(d)) if overdamped else (z[:d], z[d:])
    raise InvalidParameterError(f"unsupported initial distribution {init!r}")


def _run_batch(indices, spec, cfg, init, funcs, record_every, n_out, overdamped):
    d = spec.dimension
    nb = len(indices)
    rngs = [trajectory_rng(cfg.seed, i) for i in indices]
    x = np.empty((nb, d))
    v = np.empty((nb, d))
    for r, rng in enumerate(rngs):
        x[r], v[r] = _initial_state(init, d, rng, overdamped)
    alive = np.ones(nb, dtype=bool)
    values = np.full((n_out, len(funcs), nb), np.nan)

    def record(k):
        for o, f in enumerate(funcs):
            col = np.asarray(f(x, v), dtype=float)
            values[k, o] = np.where(alive, col, np.nan)

    record(0)
    grad = spec.gradient
    force = None if overdamped else -np.asarray(grad(x), dtype=float)
    n_steps = cfg.n_steps
    sq = math.sqrt(2.0 * cfg.dt)
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while step < n_steps:
            chunk = min(NOISE_CHUNK, n_steps - step)
            noise = np.stack([rng.standard_normal((chunk, d)) for rng in rngs], axis=1)
            for c in range(chunk):
                if overdamped:
                    x = x - np.asarray(grad(x), dtype=float) * cfg.dt + sq * noise[c]
                else:
                    x, v, force = _underdamped(x, v, force, grad, cfg.scheme, cfg.dt, cfg.gamma, noise[c])
                step += 1
                bad = ~(np.all(np.abs(x) <= DIVERGENCE_THRESHOLD, axis=1)
                        & np.all(np.abs(v) <= DIVERGENCE_THRESHOLD, axis=1))
                if np.any(bad & alive):
                    alive &= ~bad
                    x[~alive] = 0.0
                    v[~alive] = 0.0
                    if force is not None:
                        force[~alive] = 0.0
                if step % record_every == 0:
                    record(step // record_every)
    return values, np.asarray(indices)[~alive]


def simulate_ensemble(
    spec: PotentialSpec,
    cfg: IntegratorConfig,
    n_traj: int,
    init,
    observables: Sequence[Observable] = ("x",),
    dt_out: float | None = None,
    workers: int = 1,
    overdamped: bool = False,
) -> EnsembleTable:
    """Run ``n_traj`` independent trajectories and average observables.

    Observables are evaluated every ``dt_out`` (a multiple of ``cfg.dt``,
    default about 100 outputs). Built-in names: ``x`` and ``v`` (first
    coordinate), ``x2``, ``v2``, ``xv``, ``energy``, ``energy_x``; callables
    ``f(x, v)`` receive arrays of shape ``(batch, d)``. With
    ``overdamped=True`` the overdamped Euler-Maruyama scheme is used and
    ``cfg.scheme``/``cfg.gamma`` are ignored.

    A trajectory is dropped once a coordinate leaves ``[-1e8, 1e8]`` or
    becomes non-finite; more than 1% dropped raises :class:`DivergenceError`.
    """
    if isinstance(n_traj, bool) or int(n_traj) != n_traj or n_traj < 1:
        raise InvalidParameterError(f"n_traj must be a positive integer, got {n_traj!r}")
    n_traj = int(n_traj)
    workers = max(1, int(workers))
    n_steps = cfg.n_steps
    if dt_out is None:
        record_every = max(1, n_steps // 100)
    else:
        ratio = float(dt_out) / cfg.dt
        record_every = int(round(ratio))
        if record_every < 1 or abs(ratio - record_every) > 1e-9 * ratio:
            raise InvalidParameterError("dt_out must be a positive multiple of dt")
    n_out = n_steps // record_every + 1
    named = [_observable(o, spec, overdamped) for o in observables]
    if not named:
        raise InvalidParameterError("at least one observable is required")
    names = tuple(n for n, _ in named)
    funcs = [f for _, f in named]

    batches = [b for b in np.array_split(np.arange(n_traj), workers) if len(b)]
    args = (spec, cfg, init, funcs, record_every, n_out, overdamped)
    if len(batches) == 1:
        results = [_run_batch(batches[0], *args)]
    else:
        with ThreadPoolExecutor(max_workers=len(batches)) as pool:
            results = list(pool.map(lambda b: _run_batch(b, *args), batches))
    values = np.concatenate([r[0] for r in results], axis=2)
    diverged = tuple(int(i) for r in results for i in r[1])
    if len(diverged) > 0.01 * n_traj:
        raise DivergenceError(
            f"{len(diverged)} of {n_traj} trajectories diverged", trajectories=diverged
        )
    keep = np.ones(n_traj, dtype=bool)
    keep[list(diverged)] = False
    kept = values[:, :, keep]
    n = kept.shape[2]
    mean = kept.mean(axis=2)
    stderr = kept.std(axis=2, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    times = np.arange(n_out) * record_every * cfg.dt
    return EnsembleTable(times=times, names=names, mean=mean, stderr=stderr, n_traj=n_traj, diverged=diverged)


# ---------------------------------------------------------- Gaussian moments


@dataclass(frozen=True)
class MomentState:
    mean: np.ndarray
    cov: np.ndarray
    time: float


def stationary_covariance(m: float, d: int = 1) -> np.ndarray:
    """Covariance ``diag(Id/m, Id)`` of the invariant law for ``U = m |x|^2/2``."""
    return np.diag(np.concatenate([np.full(d, 1.0 / m), np.ones(d)]))


H_NORM = 0.01  # internal step times |A|


def _rk4_matrix(Z):
    """Classical RK4 step matrix ``I + Z + Z^2/2 + Z^3/6 + Z^4/24`` of ``y' = L y`` with ``Z = h L``."""
    I = np.eye(Z.shape[0])
    return I + Z @ (I + Z @ (I / 2 + Z @ (I / 6 + Z / 24)))


def _rk4_forcing_matrix(Z):
    """``I + Z/2 + Z^2/6 + Z^3/24``: RK4 applied to a constant forcing term."""
    I = np.eye(Z.shape[0])
    return I + Z @ (I / 2 + Z @ (I / 6 + Z / 24))


def moment_flow_quadratic(m, gamma, mean0, cov0, dt_out, t_final) -> list[MomentState]:
    """Exact mean and covariance ODEs for ``U = m |x|^2 / 2``, integrated by RK4.

    ``mean' = A mean`` and ``cov' = A cov + cov A^T + B`` with
    ``A = [[0, I], [-m I, -gamma I]]`` and ``B = diag(0, 2 gamma I)``. The
    classical RK4 step is at most ``dt_out / 16`` and small enough that
    ``h |A| <= 0.01`` (global error far below 1e-9 on unit-scale data); the
    covariance is re-symmetrised after every step.
    """
    m, gamma, dt_out, t_final = float(m), float(gamma), float(dt_out), float(t_final)
    for name, val in (("m", m), ("gamma", gamma), ("dt_out", dt_out), ("t_final", t_final)):
        if not (val > 0 and math.isfinite(val)):
            raise InvalidParameterError(f"{name} must be positive, got {val}")
    mean = np.array(mean0, dtype=float).ravel()
    if mean.size % 2 or mean.size == 0:
        raise InvalidParameterError("mean0 must have even length 2d")
    d = mean.size // 2
    cov = np.array(cov0, dtype=float)
    if cov.shape != (2 * d, 2 * d):
        raise InvalidParameterError(f"cov0 must have shape {(2 * d, 2 * d)}")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise InvalidParameterError("cov0 must be symmetric")
    if np.linalg.eigvalsh(cov).min() < -1e-10:
        raise InvalidParameterError("cov0 must be positive semidefinite")

    I = np.eye(d)
    A = np.block([[np.zeros((d, d)), I], [-m * I, -gamma * I]])
    B = np.zeros((2 * d, 2 * d))
    B[d:, d:] = 2.0 * gamma * I
    n_sub = max(16, math.ceil(dt_out * np.linalg.norm(A, 2) / H_NORM))
    h = dt_out / n_sub
    n_out = int(round(t_final / dt_out))

    # On a linear system one RK4 step is the degree-4 Taylor polynomial of
    # exp(h L); build it once for the mean and for vec(cov), where
    # vec(A C + C A^T) = (I (x) A + A (x) I) vec(C) in row-major order.
    k = 2 * d
    Ik = np.eye(k)
    Lc = np.kron(A, Ik) + np.kron(Ik, A)
    P_mean = _rk4_matrix(h * A)
    P_cov = _rk4_matrix(h * Lc)
    c_cov = h * _rk4_forcing_matrix(h * Lc) @ B.ravel()

    states = [MomentState(mean.copy(), cov.copy(), 0.0)]
    for n in range(1, n_out + 1):
        for _ in range(n_sub):
            mean = P_mean @ mean
            cov = (P_cov @ cov.ravel() + c_cov).reshape(k, k)
            cov = 0.5 * (cov + cov.T)
        states.append(MomentState(mean.copy(), cov.copy(), n * dt_out))
    return states


# -------------------------------------------------------------- decay fits


@dataclass(frozen=True)
class DecayFit:
    rate: float
    log_intercept: float
    window: tuple[float, float]
    residual_rms: float
    mode: FitMode
    rate_stderr: float = float("nan")
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "log_intercept": self.log_intercept,
            "window": list(self.window),
            "residual_rms": self.residual_rms,
            "rate_stderr": self.rate_stderr,
            "mode": self.mode.value,
            "n_points": self.n_points,
        }


def _linear_fit(t, y):
    n = t.size
    tm = t.mean()
    tc = t - tm
    sxx = float(np.dot(tc, tc))
    slope = float(np.dot(tc, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * tm)
    resid = y - (intercept + slope * t)
    rms = float(np.sqrt(np.mean(resid * resid)))
    se = float(np.sqrt(np.dot(resid, resid) / (n - 2) / sxx)) if n > 2 else float("nan")
    return slope, intercept, rms, se


def _refine_peak(t3, y3):
    """Vertex of the parabola through three samples (log values)."""
    c = np.polyfit(t3 - t3[1], y3, 2)
    if c[0] >= 0:
        return t3[1], y3[1]
    dt = -c[1] / (2 * c[0])
    if not (t3[0] - t3[1] <= dt <= t3[2] - t3[1]):
        return t3[1], y3[1]
    return t3[1] + dt, float(np.polyval(c, dt))


def fit_decay(times, values, mode: FitMode | str = FitMode.TAIL_LINEAR, window=None) -> DecayFit:
    """Fit ``values ~ C exp(-rate t)`` on ``window = (t_start, t_end)``.

    ``TailLinear`` regresses ``log(values)`` on time (at least 8 points).
    ``Envelope`` locates strict local maxima, refines each by a parabola
    through the neighbouring log values and regresses the peak logs on the
    peak times (at least 4 maxima); use it for oscillating decay.
    """
    mode = FitMode(mode)
    t = np.asarray(times, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if t.shape != y.shape:
        raise FitFailureError("times and values differ in length")
    if window is None:
        window = (float(t.min()), float(t.max()))
    t0, t1 = float(window[0]), float(window[1])
    if not t0 < t1:
        raise FitFailureError("window must satisfy t_start < t_end")
    sel = (t >= t0) & (t <= t1)
    tw, yw = t[sel], y[sel]
    if np.any(~(yw > 0)):
        raise FitFailureError("values must be positive on the fit window")

    if mode is FitMode.TAIL_LINEAR:
        if tw.size < 8:
            raise FitFailureError(f"TailLinear needs >= 8 points in the window, got {tw.size}")
        slope, icpt, rms, se = _linear_fit(tw, np.log(yw))
        return DecayFit(-slope, icpt, (t0, t1), rms, mode, se, int(tw.size))

    ly = np.log(yw)
    peaks = np.flatnonzero((ly[1:-1] > ly[:-2]) & (ly[1:-1] > ly[2:])) + 1
    if peaks.size < 4:
        raise FitFailureError(f"Envelope needs >= 4 strict local maxima in the window, got {peaks.size}")
    pt, py = zip(*(_refine_peak(tw[p - 1:p + 2], ly[p - 1:p + 2]) for p in peaks))
    slope, icpt, rms, se = _linear_fit(np.array(pt), np.array(py))
    return DecayFit(-slope, icpt, (t0, t1), rms, mode, se, int(peaks.size))


# ------------------------------------------------------- monotonicity check


def chi2_proxy(mean, cov, stationary_cov) -> float:
    """``tr(D S^-1 D) + mean^T S^-1 mean`` with ``D = cov - S``; zero at stationarity."""
    S_inv = np.linalg.inv(np.asarray(stationary_cov, dtype=float))
    D = np.asarray(cov, dtype=float) - np.asarray(stationary_cov, dtype=float)
    mu = np.asarray(mean, dtype=float)
    return float(np.trace(D @ S_inv @ D) + mu @ S_inv @ mu)


@dataclass(frozen=True)
class MonotoneReport:
    values: np.ndarray
    violations: tuple[int, ...]

    @property
    def monotone(self) -> bool:
        return not self.violations


def verify_monotone_l2(series, stationary_cov=None, stderr=None, tol: float = 1e-8) -> MonotoneReport:
    """Report steps where the Gaussian chi^2 proxy increases.

    ``series`` is a list of :class:`MomentState` (then ``stationary_cov`` is
    required) or a precomputed array of proxy values. Without ``stderr`` an
    increase above ``tol`` counts as a violation; with per-point standard
    errors the allowance is two standard errors of the difference. The proxy
    only stands in for the full L2 distance, so violations are reported, not
    raised.
    """
    items = list(series)
    if items and isinstance(items[0], MomentState):
        if stationary_cov is None:
            raise InvalidParameterError("stationary_cov is required for MomentState series")
        vals = np.array([chi2_proxy(s.mean, s.cov, stationary_cov) for s in items])
    else:
        vals = np.asarray(items, dtype=float)
    inc = np.diff(vals)
    if stderr is None:
        allow = np.full(inc.shape, tol)
    else:
        se = np.asarray(stderr, dtype=float)
        allow = 2.0 * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    bad = np.flatnonzero(inc > allow) + 1
    return MonotoneReport(values=vals, violations=tuple(int(k) for k in bad))
