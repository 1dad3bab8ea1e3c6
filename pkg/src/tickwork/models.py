"""Clock parameter bundles and the operators built from them.

Basis ordering is fixed: ``(|e>, |g>)`` for the two-level clock and
``(|m>, |c>, |g>)`` for the three-level clocks. Units have hbar = k_B = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from .exceptions import ConfigError, StepTooLargeError
from .numkernel import Superoperator, vec_superop_term

__all__ = [
    "TwoLevelAthermal",
    "ThreeLevelAthermal",
    "ThreeLevelHybrid",
    "ClockModel",
    "KrausPair",
    "GaussianMeasurement",
    "ReadoutSample",
    "hamiltonian",
    "measured_observable",
    "spin_observable",
    "gaussian_kraus",
    "jump_kraus_pair",
    "clockwork_kraus_pair",
    "lindblad_terms",
    "pumping_superoperator",
    "hermitian_dissipator",
    "dissipator",
    "commutator_nonclassicality",
    "sample_readout",
    "ground_state",
    "excited_index",
    "model_from_dict",
]

# two-level indices
E, G2 = 0, 1
# three-level indices
M, C, G = 0, 1, 2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|


def _check_rates(model, names):
    for name in names:
        value = getattr(model, name)
        if not np.isfinite(value) or value < 0:
            raise ConfigError(f"{name} must be a finite non-negative number, got {value!r}")


@dataclass(frozen=True)
class TwoLevelAthermal:
    """Qubit pumped by unread sigma_x measurements, ticking on |e> -> |g> emission."""

    omega: float = 1.0
    gamma_m: float = 1.0
    gamma_w: float = 6.0

    kind = "two_level"

    def __post_init__(self):
        _check_rates(self, ("gamma_m", "gamma_w"))
        if not np.isfinite(self.omega):
            raise ConfigError("omega must be finite")

    @property
    def dim(self) -> int:
        return 2

    def max_rate(self) -> float:
        return max(self.gamma_w, 2.0 * self.gamma_m)


@dataclass(frozen=True)
class ThreeLevelAthermal:
    """Three-level clock with spin-measurement pumping and a zero-temperature loss."""

    omega_m: float = 1.0
    omega_c: float = 0.1
    theta: float = math.pi / 2
    phi: float = 0.0
    gamma_m: float = 3.0
    gamma_c: float = 4.0
    gamma_w: float = 3.0

    kind = "three_level"

    def __post_init__(self):
        _check_rates(self, ("gamma_m", "gamma_c", "gamma_w"))
        if not (np.isfinite(self.omega_m) and np.isfinite(self.omega_c)):
            raise ConfigError("frequencies must be finite")
        if self.omega_c < 0:
            raise ConfigError(f"omega_c must be >= 0, got {self.omega_c}")
        if not self.omega_m > self.omega_c:
            raise ConfigError(
                f"need omega_m > omega_c, got omega_m={self.omega_m}, omega_c={self.omega_c}")
        if not 0.0 <= self.theta <= math.pi:
            raise ConfigError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ConfigError(f"phi must lie in [0, 2pi), got {self.phi}")

    @property
    def dim(self) -> int:
        return 3

    @property
    def omega_w(self) -> float:
        return self.omega_m - self.omega_c

    def max_rate(self) -> float:
        return max(self.gamma_w, self.gamma_c, 2.0 * self.gamma_m)


@dataclass(frozen=True)
class ThreeLevelHybrid(ThreeLevelAthermal):
    """Three-level clock that also couples to hot (g<->m) and cold (g<->c) baths.

    ``beta_h_omega_m`` and ``beta_c_omega_c`` are the dimensionless
    Boltzmann exponents of the two baths.
    """

    gamma_h: float = 4.0
    beta_h_omega_m: float = 3.0
    beta_c_omega_c: float = 100.0

    kind = "hybrid"

    def __post_init__(self):
        super().__post_init__()
        _check_rates(self, ("gamma_h",))
        if not (np.isfinite(self.beta_h_omega_m) and np.isfinite(self.beta_c_omega_c)):
            raise ConfigError("thermal exponents must be finite")

    def max_rate(self) -> float:
        return max(super().max_rate(), self.gamma_h)


ClockModel = Union[TwoLevelAthermal, ThreeLevelAthermal, ThreeLevelHybrid]

_KINDS = {cls.kind: cls for cls in (TwoLevelAthermal, ThreeLevelAthermal, ThreeLevelHybrid)}


def model_from_dict(data: dict) -> ClockModel:
    """Build a model from ``{"kind": ..., <field>: value, ...}``."""
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[kind]
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {kind} parameters: {sorted(unknown)}")
    try:
        return cls(**{k: float(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def excited_index(model) -> int:
    """Index of the level whose emission is counted as a tick."""
    return E if model.dim == 2 else M


def ground_state(model) -> np.ndarray:
    d = model.dim
    rho = np.zeros((d, d), dtype=complex)
    rho[d - 1, d - 1] = 1.0
    return rho


def hamiltonian(model) -> np.ndarray:
    if model.dim == 2:
        return np.diag([model.omega, 0.0]).astype(complex)
    return np.diag([model.omega_m, model.omega_c, 0.0]).astype(complex)


def spin_observable(theta: float, phi: float) -> np.ndarray:
    """Measured observable ``|+><+| - |-><-|`` on the (m, g) pair; |c> is dark."""
    plus = np.zeros(3, dtype=complex)
    minus = np.zeros(3, dtype=complex)
    plus[M] = math.cos(theta / 2)
    plus[G] = math.sin(theta / 2) * np.exp(-1j * phi)
    minus[M] = math.sin(theta / 2) * np.exp(1j * phi)
    minus[G] = -math.cos(theta / 2)
    return np.outer(plus, plus.conj()) - np.outer(minus, minus.conj())


def measured_observable(model) -> np.ndarray:
    if model.dim == 2:
        return SIGMA_X.copy()
    return spin_observable(model.theta, model.phi)


@dataclass(frozen=True)
class KrausPair:
    """No-event / event operators of a single photon-counting step."""

    m0: np.ndarray
    m1: np.ndarray
    epsilon: float

    def completeness_defect(self) -> float:
        d = self.m0.shape[0]
        s = self.m0.conj().T @ self.m0 + self.m1.conj().T @ self.m1
        return float(np.abs(s - np.eye(d)).max())

    def channel(self, rho: np.ndarray) -> np.ndarray:
        """Unread (averaged) action of the pair."""
        return self.m0 @ rho @ self.m0.conj().T + self.m1 @ rho @ self.m1.conj().T


def jump_kraus_pair(channel: str, epsilon: float, dim: int = 3) -> KrausPair:
    """Kraus pair for one counting interval of length ``dt`` with ``epsilon = gamma * dt``.

    ``channel`` is ``"clockwork"`` (|m> -> |c>, or |e> -> |g> when
    ``dim == 2``) or ``"loss"`` (|c> -> |g>, three-level only).
    """
    if not 0.0 <= epsilon < 1.0:
        raise StepTooLargeError(f"jump weight epsilon={epsilon} must lie in [0, 1); reduce dt")
    keep = math.sqrt(1.0 - epsilon)
    jump = math.sqrt(epsilon)
    m0 = np.eye(dim, dtype=complex)
    m1 = np.zeros((dim, dim), dtype=complex)
    if channel == "clockwork":
        if dim == 2:
            m0[E, E] = keep
            m1[G2, E] = jump
        else:
            m0[M, M] = keep
            m1[C, M] = jump
    elif channel == "loss":
        if dim != 3:
            raise ValueError("the loss channel exists only for the three-level clock")
        m0[C, C] = keep
        m1[G, C] = jump
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return KrausPair(m0, m1, float(epsilon))


def clockwork_kraus_pair(model, dt: float) -> KrausPair:
    return jump_kraus_pair("clockwork", model.gamma_w * dt, model.dim)


@dataclass(frozen=True)
class GaussianMeasurement:
    """Weak measurement of ``observable`` with strength ``epsilon_m = gamma_m * dt``."""

    observable: np.ndarray
    epsilon_m: float

    def __post_init__(self):
        if not self.epsilon_m > 0:
            raise ConfigError("epsilon_m must be positive")

    @property
    def readout_variance(self) -> float:
        """Variance of the readout r at fixed state, ``1 / (8 gamma_m dt)``."""
        return 1.0 / (8.0 * self.epsilon_m)


@dataclass(frozen=True)
class ReadoutSample:
    r: float
    dw: float


def gaussian_kraus(gm: GaussianMeasurement, r: float) -> np.ndarray:
    """Measurement operator ``(4 eps/pi)^(1/4) exp(-2 eps (r - X)^2)``.

    Evaluated by applying the scalar Gaussian to the eigenvalues of X in
    its eigenbasis.
    """
    evals, evecs = np.linalg.eigh(gm.observable)
    eps = gm.epsilon_m
    weights = (4.0 * eps / math.pi) ** 0.25 * np.exp(-2.0 * eps * (r - evals) ** 2)
    return (evecs * weights) @ evecs.conj().T


def sample_readout(gm: GaussianMeasurement, rho: np.ndarray, dt: float, rng) -> ReadoutSample:
    """Draw the readout ``r = <X> + dW / (sqrt(8 gamma_m) dt)`` at state ``rho``."""
    gamma_m = gm.epsilon_m / dt
    dw = rng.normal(0.0, math.sqrt(dt))
    mean = float(np.real(np.trace(gm.observable @ rho)))
    return ReadoutSample(mean + dw / (math.sqrt(8.0 * gamma_m) * dt), dw)


def hermitian_dissipator(x: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> -[x, [x, rho]]``."""
    d = x.shape[0]
    eye = np.eye(d)
    x2 = x @ x
    return -(vec_superop_term(x2, eye) + vec_superop_term(eye, x2)) + 2.0 * vec_superop_term(x, x)


def pumping_superoperator(model) -> np.ndarray:
    return model.gamma_m * hermitian_dissipator(measured_observable(model))


def dissipator(l_op: np.ndarray, rate: float = 1.0, jump_weight: float = 1.0) -> np.ndarray:
    """``rate * (w L rho L^+ - {rho, L^+ L}/2)`` with ``w = jump_weight``."""
    d = l_op.shape[0]
    eye = np.eye(d)
    ldl = l_op.conj().T @ l_op
    jump = vec_superop_term(l_op, l_op.conj().T)
    anti = vec_superop_term(ldl, eye) + vec_superop_term(eye, ldl)
    return rate * (jump_weight * jump - 0.5 * anti)


def _unit(d, i, j):
    op = np.zeros((d, d), dtype=complex)
    op[i, j] = 1.0
    return op


def lindblad_terms(model, s: float = 0.0) -> Superoperator:
    """Tilted generator W(s); the counted clockwork jump carries ``exp(-s)``."""
    d = model.dim
    eye = np.eye(d)
    h = hamiltonian(model)
    w = -1j * (vec_superop_term(h, eye) - vec_superop_term(eye, h))
    w = w + pumping_superoperator(model)
    tilt = math.exp(-s)
    if d == 2:
        w = w + dissipator(SIGMA_MINUS, model.gamma_w, tilt)
        return Superoperator(w, float(s))
    l_w = _unit(3, C, M)
    l_c = _unit(3, G, C)
    w = w + dissipator(l_w, model.gamma_w, tilt)
    w = w + dissipator(l_c, model.gamma_c)
    if isinstance(model, ThreeLevelHybrid):
        l_h = _unit(3, G, M)
        w = w + dissipator(l_h, model.gamma_h)
        w = w + dissipator(l_h.conj().T, model.gamma_h * math.exp(-model.beta_h_omega_m))
        w = w + dissipator(l_c.conj().T, model.gamma_c * math.exp(-model.beta_c_omega_c))
    return Superoperator(w, float(s))


def commutator_nonclassicality(model) -> float:
    """Frobenius norm of ``[X, H]``; zero when the measurement commutes with H."""
    if model.dim != 3:
        raise ValueError("defined for three-level models only")
    x = measured_observable(model)
    h = hamiltonian(model)
    return float(np.linalg.norm(x @ h - h @ x))
