"""Quantum-jump trajectories of a ticking clock.

Each step of length ``dt``:

1. the unread spin measurement and free evolution act as a first-order
   drift ``rho - dt (i[H, rho] + gamma_m [X, [X, rho]])``;
2. a tick is drawn with probability ``eps_w * rho_mm`` of the drifted state;
3. the clockwork Kraus operator for the outcome is applied, followed by the
   unobserved loss (or thermal) channel, and the state is renormalized.

Trajectories are evolved in batches with plain elementwise arithmetic, so a
trajectory's record depends only on ``(model, plan, index)`` and never on
how the ensemble is chunked or parallelized.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from .exceptions import ConfigError, ImpossibleEventError, StateInvariantError, StepTooLargeError
from .models import (
    ThreeLevelHybrid,
    clockwork_kraus_pair,
    dissipator,
    excited_index,
    ground_state,
    hamiltonian,
    jump_kraus_pair,
    measured_observable,
    pumping_superoperator,
    _unit,
    C,
    G,
    M,
)
from .numkernel import unvec, vec, vec_superop_term

logger = logging.getLogger(__name__)

__all__ = [
    "SimulationPlan",
    "TickRecord",
    "EnsembleResult",
    "drift_step",
    "tick_probability",
    "conditional_update",
    "StepMaps",
    "step_maps",
    "trajectory_uniforms",
    "run_trajectory",
    "run_ensemble",
    "exact_count_moments",
]

POSITIVITY_ABORT = -1e-6
DEFAULT_CHUNK = 1024

InitialState = Union[str, np.ndarray]


@dataclass(frozen=True)
class SimulationPlan:
    dt: float = 1e-3
    n_steps: int = 1000
    n_traj: int = 1
    seed: int = 0
    initial_state: InitialState = "steady"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) < 1 or int(self.n_traj) < 1:
            raise ConfigError("n_steps and n_traj must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if isinstance(self.initial_state, str) and self.initial_state not in ("steady", "ground"):
            raise ConfigError(f"unknown initial state {self.initial_state!r}")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def check_model(self, model) -> None:
        """Reject (or warn about) steps that are too coarse for the model's rates."""
        load = model.max_rate() * self.dt
        if load >= 1.0:
            raise StepTooLargeError(f"max rate * dt = {load:.3g} >= 1; reduce dt")
        if load >= 0.5:
            warnings.warn(f"max rate * dt = {load:.3g} >= 0.5; first-order stepping is inaccurate",
                          RuntimeWarning, stacklevel=2)

    def resolve_initial_state(self, model) -> np.ndarray:
        init = self.initial_state
        if isinstance(init, str):
            if init == "ground":
                return ground_state(model)
            from .ldt import steady_state
            return steady_state(model)
        rho = np.asarray(init, dtype=complex)
        if rho.shape != (model.dim, model.dim):
            raise ConfigError(f"initial state has shape {rho.shape}, expected {(model.dim,) * 2}")
        return rho


@dataclass
class TickRecord:
    """Step indices at which a tick (dN = 1) was recorded."""

    ticks: np.ndarray
    n_steps: int
    dt: float

    def __post_init__(self):
        self.ticks = np.asarray(self.ticks, dtype=np.int64)

    @property
    def count(self) -> int:
        return int(self.ticks.size)

    def dn(self) -> np.ndarray:
        out = np.zeros(self.n_steps, dtype=np.int8)
        out[self.ticks] = 1
        return out

    def counts_at(self, times) -> np.ndarray:
        """N(t): ticks recorded in steps whose interval ends at or before t."""
        steps = _steps_for_times(times, self.dt)
        return np.searchsorted(self.ticks, steps, side="left")

    def __eq__(self, other):
        if not isinstance(other, TickRecord):
            return NotImplemented
        return (self.n_steps == other.n_steps and self.dt == other.dt
                and np.array_equal(self.ticks, other.ticks))


def _steps_for_times(times, dt):
    return np.rint(np.asarray(times, dtype=float) / dt).astype(np.int64)


@dataclass
class EnsembleResult:
    records: list
    seed: int
    dt: float
    n_steps: int
    mean_state_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mean_states: Optional[np.ndarray] = None
    max_hermiticity_defect: float = 0.0
    max_trace_defect: float = 0.0
    min_eigenvalue: float = 1.0

    @property
    def n_traj(self) -> int:
        return len(self.records)

    def counts_at(self, times) -> np.ndarray:
        """Matrix of N(t), shape (n_traj, len(times))."""
        times = np.atleast_1d(times)
        if len(self.records) == 0:
            return np.zeros((0, times.size), dtype=np.int64)
        return np.stack([r.counts_at(times) for r in self.records])

    def count_moments(self, times):
        """Sample mean and unbiased variance of N(t) per window end time."""
        n = self.counts_at(times).astype(float)
        ddof = 1 if n.shape[0] > 1 else 0
        return n.mean(axis=0), n.var(axis=0, ddof=ddof)

    def tick_matrix(self) -> np.ndarray:
        out = np.zeros((self.n_traj, self.n_steps), dtype=np.int8)
        for i, r in enumerate(self.records):
            out[i, r.ticks] = 1
        return out


# --- single-state reference operations -------------------------------------------------

def _comm(a, b):
    return a @ b - b @ a


def drift_step(rho: np.ndarray, model, dt: float) -> np.ndarray:
    """First-order average over the unread spin measurement and free evolution."""
    h = hamiltonian(model)
    x = measured_observable(model)
    return rho - dt * (1j * _comm(h, rho) + model.gamma_m * _comm(x, _comm(x, rho)))


def tick_probability(rho_after_drift: np.ndarray, epsilon_w: float) -> float:
    """Probability ``eps_w * rho_ee`` (two-level) or ``eps_w * rho_mm`` of a tick."""
    p = epsilon_w * float(np.real(rho_after_drift[0, 0]))
    return min(max(p, 0.0), 1.0)


def _unread_channel(model, dt):
    """Superoperator matrix of the unobserved loss / thermal channel (None if absent)."""
    if model.dim == 2:
        return None
    if isinstance(model, ThreeLevelHybrid):
        l_h = _unit(3, G, M)
        l_c = _unit(3, G, C)
        gen = (dissipator(l_h, model.gamma_h)
               + dissipator(l_h.conj().T, model.gamma_h * math.exp(-model.beta_h_omega_m))
               + dissipator(l_c, model.gamma_c)
               + dissipator(l_c.conj().T, model.gamma_c * math.exp(-model.beta_c_omega_c)))
        return expm(dt * gen)
    pair = jump_kraus_pair("loss", model.gamma_c * dt, 3)
    return (vec_superop_term(pair.m0, pair.m0.conj().T)
            + vec_superop_term(pair.m1, pair.m1.conj().T))


def conditional_update(rho: np.ndarray, k: int, model, dt: float) -> np.ndarray:
    """State after one step conditioned on tick outcome ``k`` (0 or 1).

    ``rho`` is the state at the start of the step; the drift is applied
    here. Raises ImpossibleEventError when ``k == 1`` has zero probability.
    """
    if k not in (0, 1):
        raise ValueError(f"tick outcome must be 0 or 1, got {k}")
    drifted = drift_step(rho, model, dt)
    pair = clockwork_kraus_pair(model, dt)
    op = pair.m1 if k else pair.m0
    num = op @ drifted @ op.conj().T
    norm = float(np.real(np.trace(num)))
    if norm <= 0.0:
        if k:
            raise ImpossibleEventError("tick requested but p_tick = 0")
        raise ImpossibleEventError("no-tick requested but p_tick = 1")
    out = num / norm
    channel = _unread_channel(model, dt)
    if channel is not None:
        out = unvec(channel @ vec(out))
    out = out / np.real(np.trace(out))
    return 0.5 * (out + out.conj().T)


# --- batched kernel ----------------------------------------------------------------

@dataclass(frozen=True)
class StepMaps:
    """Per-step linear maps in column-stacked form, stored as sparse entry lists."""

    dim: int
    drift: tuple
    no_tick: tuple
    tick: tuple
    epsilon_w: float
    excited: int


def _entries(mat, tol=0.0):
    mat = np.asarray(mat, dtype=complex)
    rows, cols = np.nonzero(np.abs(mat) > tol)
    return tuple((int(i), int(j), complex(mat[i, j])) for i, j in zip(rows, cols))


def step_maps(model, dt: float) -> StepMaps:
    d = model.dim
    eye = np.eye(d)
    h = hamiltonian(model)
    gen = -1j * (vec_superop_term(h, eye) - vec_superop_term(eye, h)) + pumping_superoperator(model)
    drift = np.eye(d * d) + dt * gen
    pair = clockwork_kraus_pair(model, dt)
    k0 = vec_superop_term(pair.m0, pair.m0.conj().T)
    k1 = vec_superop_term(pair.m1, pair.m1.conj().T)
    channel = _unread_channel(model, dt)
    if channel is not None:
        k0 = channel @ k0
        k1 = channel @ k1
    ex = excited_index(model)
    return StepMaps(d, _entries(drift), _entries(k0), _entries(k1), pair.epsilon, ex)


def _apply(entries, v):
    out = np.zeros_like(v)
    for i, j, a in entries:
        out[:, i] += a * v[:, j]
    return out


def trajectory_uniforms(seed: int, traj_index: int, n_steps: int) -> np.ndarray:
    """Uniform draws in [0, 1) of one trajectory, keyed by (seed, index)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(traj_index),))
    return np.random.Generator(np.random.Philox(ss)).random(n_steps)


def _run_batch(model, plan, indices, rho0, maps, state_every):
    d = maps.dim
    n = len(indices)
    u = np.stack([trajectory_uniforms(plan.seed, i, plan.n_steps) for i in indices])
    v = np.repeat(vec(rho0)[None, :].astype(complex), n, axis=0)
    diag = [i * (d + 1) for i in range(d)]
    mm = maps.excited * (d + 1)
    ticks = np.zeros((n, plan.n_steps), dtype=bool)
    herm_defect = 0.0
    trace_defect = 0.0
    min_eig = np.inf
    state_sums = []
    idx_t = np.array([j + i * d for j in range(d) for i in range(d)])
    for step in range(plan.n_steps):
        v = _apply(maps.drift, v)
        p = np.clip(maps.epsilon_w * v[:, mm].real, 0.0, 1.0)
        k = (u[:, step] <= p) & (p > 0.0)
        ticks[:, step] = k
        v = np.where(k[:, None], _apply(maps.tick, v), _apply(maps.no_tick, v))
        tr = v[:, diag].real.sum(axis=1)
        v = v / tr[:, None]
        # hermitize: vec index of (j, i) for each (i, j)
        vt = v[:, idx_t].conj()
        herm_defect = max(herm_defect, float(np.abs(v - vt).max()))
        v = 0.5 * (v + vt)
        trace_defect = max(trace_defect, float(np.abs(v[:, diag].real.sum(axis=1) - 1.0).max()))
        rho = unvec(v, d)
        ev = np.linalg.eigvalsh(rho)[:, 0]
        step_min = float(ev.min())
        min_eig = min(min_eig, step_min)
        if step_min < POSITIVITY_ABORT:
            bad = indices[int(np.argmin(ev))]
            raise StateInvariantError(
                f"trajectory {bad}: density matrix lost positivity (min eigenvalue {step_min:.3e})",
                step=step)
        if state_every and (step + 1) % state_every == 0:
            state_sums.append(rho.sum(axis=0))
    records = [TickRecord(np.flatnonzero(ticks[i]), plan.n_steps, plan.dt) for i in range(n)]
    sums = np.array(state_sums) if state_every else None
    return records, sums, herm_defect, trace_defect, min_eig


def run_trajectory(model, plan: SimulationPlan, traj_index: int = 0) -> TickRecord:
    """Simulate one trajectory; a pure function of ``(model, plan.seed, traj_index)``."""
    if not 0 <= traj_index < plan.n_traj:
        raise ConfigError(f"trajectory index {traj_index} outside [0, {plan.n_traj})")
    plan.check_model(model)
    rho0 = plan.resolve_initial_state(model)
    maps = step_maps(model, plan.dt)
    records, *_ = _run_batch(model, plan, [traj_index], rho0, maps, 0)
    return records[0]


def run_ensemble(model, plan: SimulationPlan, workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK, state_every: int = 0) -> EnsembleResult:
    """Simulate ``plan.n_traj`` independent trajectories.

    Trajectories are split into fixed chunks of ``chunk_size`` and the
    chunks are run on ``workers`` threads. ``state_every > 0`` also records
    the ensemble-averaged density matrix every that many steps.
    """
    plan.check_model(model)
    rho0 = plan.resolve_initial_state(model)
    maps = step_maps(model, plan.dt)
    chunks = [list(range(a, min(a + chunk_size, plan.n_traj)))
              for a in range(0, plan.n_traj, chunk_size)]

    def job(ix):
        return _run_batch(model, plan, ix, rho0, maps, state_every)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    records = [r for part in parts for r in part[0]]
    result = EnsembleResult(records, plan.seed, plan.dt, plan.n_steps)
    result.max_hermiticity_defect = max(p[2] for p in parts)
    result.max_trace_defect = max(p[3] for p in parts)
    result.min_eigenvalue = min(p[4] for p in parts)
    if state_every:
        total = parts[0][1].copy()
        for p in parts[1:]:
            total += p[1]
        result.mean_states = total / plan.n_traj
        result.mean_state_times = plan.dt * state_every * np.arange(1, total.shape[0] + 1)
    logger.debug("ensemble done: %d trajectories, %d steps", plan.n_traj, plan.n_steps)
    return result


def exact_count_moments(model, plan: SimulationPlan, times):
    """Exact mean and variance of N(t) for the discrete-time stepping scheme.

    Propagates the generating function of the simulated Markov chain and
    its first two z-derivatives; no sampling is involved. Differences from
    the continuous-time predictions are the O(dt) error of the stepping.
    """
    maps = step_maps(model, plan.dt)
    d = maps.dim
    n = d * d

    def dense(entries):
        out = np.zeros((n, n), dtype=complex)
        for i, j, a in entries:
            out[i, j] = a
        return out

    drift = dense(maps.drift)
    t1 = dense(maps.tick) @ drift
    t_all = dense(maps.no_tick) @ drift + t1
    steps = _steps_for_times(np.atleast_1d(times), plan.dt)
    tr = np.zeros(n)
    tr[:: d + 1] = 1.0
    v = vec(plan.resolve_initial_state(model)).astype(complex)
    v1 = np.zeros_like(v)
    v2 = np.zeros_like(v)
    means, variances = [], []
    targets = iter(sorted(set(steps.tolist())))
    results = {}
    nxt = next(targets, None)
    for step in range(int(steps.max()) + 1):
        if step == nxt:
            m = float((tr @ v1).real)
            f2 = float((tr @ v2).real)
            results[step] = (m, f2 + m - m * m)
            nxt = next(targets, None)
        v2 = t_all @ v2 + 2.0 * (t1 @ v1)
        v1 = t_all @ v1 + t1 @ v
        v = t_all @ v
    for s in steps:
        means.append(results[int(s)][0])
        variances.append(results[int(s)][1])
    return np.array(means), np.array(variances)
