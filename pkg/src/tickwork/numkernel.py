"""Dense linear algebra for small open-system generators.

Density matrices are vectorized by column stacking, so that

    vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)

All superoperators in the package follow this convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, NonUniqueSteadyStateError, NumericalError

__all__ = [
    "NumericsConfig",
    "DEFAULT_NUMERICS",
    "Superoperator",
    "vec",
    "unvec",
    "vec_superop_term",
    "trace_functional",
    "hessenberg",
    "eigenvalues",
    "rightmost_eigenvalue",
    "rightmost_real_eigenvalue",
    "steady_null_vector",
]

MAX_DIM = 81
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances used by the solvers and validity checks."""

    residual: float = 1e-10
    hermiticity: float = 1e-9
    positivity: float = 1e-9
    equality: float = 1e-12
    imag_tol: float = 1e-9
    null_tol: float = 1e-9
    max_qr_iter: int = 60


DEFAULT_NUMERICS = NumericsConfig()


@dataclass(frozen=True)
class Superoperator:
    """A d^2 x d^2 generator acting on column-stacked density matrices.

    ``tilt_s`` records the counting-field value the generator was built
    with; ``0.0`` means an ordinary (trace-preserving) Lindbladian.
    """

    matrix: np.ndarray
    tilt_s: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"superoperator must be square, got shape {m.shape}")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise ValueError(f"superoperator size {m.shape[0]} is not a square number")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d."""
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def __add__(self, other):
        if isinstance(other, Superoperator):
            if other.tilt_s != self.tilt_s:
                raise ValueError("cannot add superoperators with different tilts")
            other = other.matrix
        return Superoperator(self.matrix + other, self.tilt_s)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.shape[-1])))
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def vec_superop_term(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of the map ``rho -> a @ rho @ b`` in column-stacked form."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"left factor must be square, got {a.shape}")
    if b.shape != a.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.kron(b.T, a)


def trace_functional(d: int) -> np.ndarray:
    """Row vector t with ``t @ vec(rho) == trace(rho)``."""
    t = np.zeros(d * d, dtype=complex)
    t[:: d + 1] = 1.0
    return t


def _norm(x: np.ndarray) -> float:
    """2-norm that rescales first, so tiny or huge entries do not under/overflow when squared."""
    m = float(np.abs(x).max()) if x.size else 0.0
    if m == 0.0 or not np.isfinite(m):
        return m
    return m * float(np.linalg.norm(x / m))


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Unitarily similar upper Hessenberg form via Householder reflections."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = _norm(x)
        if alpha < _TINY:
            continue
        v = x.copy()
        phase = np.exp(1j * np.angle(x[0])) if x[0] != 0 else 1.0
        v[0] += phase * alpha
        v /= _norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _wilkinson_shift(b: np.ndarray) -> complex:
    a, bb, c, d = b[-2, -2], b[-2, -1], b[-1, -2], b[-1, -1]
    half = (a - d) / 2.0
    disc = np.sqrt(half * half + bb * c)
    mu1 = (a + d) / 2.0 + disc
    mu2 = (a + d) / 2.0 - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_sweep(b: np.ndarray, mu: complex) -> None:
    """One explicitly shifted QR step ``B <- R Q + mu`` on a Hessenberg block, in place."""
    n = b.shape[0]
    idx = np.arange(n)
    b[idx, idx] -= mu
    rotations = []
    for k in range(n - 1):
        x, y = b[k, k], b[k + 1, k]
        r = np.hypot(abs(x), abs(y))
        if r < _TINY:
            c, s = 1.0, 0.0
        else:
            c, s = x / r, y / r
        rk = b[k, k:].copy()
        rk1 = b[k + 1, k:].copy()
        b[k, k:] = np.conj(c) * rk + np.conj(s) * rk1
        b[k + 1, k:] = -s * rk + c * rk1
        rotations.append((c, s))
    for k, (c, s) in enumerate(rotations):
        top = min(k + 2, n - 1) + 1
        ck = b[:top, k].copy()
        ck1 = b[:top, k + 1].copy()
        b[:top, k] = c * ck + s * ck1
        b[:top, k + 1] = -np.conj(s) * ck + np.conj(c) * ck1
    b[idx, idx] += mu


def eigenvalues(a: np.ndarray, max_iter: int = DEFAULT_NUMERICS.max_qr_iter) -> np.ndarray:
    """All eigenvalues of a small dense (possibly non-Hermitian) matrix.

    Hessenberg reduction followed by Wilkinson-shifted QR sweeps with
    deflation. ``max_iter`` bounds the sweeps spent on any single
    eigenvalue.

    Raises
    ------
    ConvergenceError
        If an eigenvalue fails to deflate within ``max_iter`` sweeps.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    n = a.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    # power-of-two scaling to O(1) keeps Householder and Givens norms clear of
    # under/overflow and is exact
    peak = float(max(np.abs(a.real).max(), np.abs(np.imag(a)).max()))
    if peak == 0.0:
        return np.zeros(n, dtype=complex)
    shift = int(np.frexp(peak)[1])
    scaled = np.ldexp(a.real, -shift) + 1j * np.ldexp(np.imag(a), -shift)
    # entries this far below eps * |A| cannot change the spectrum at working precision
    scaled[np.abs(scaled) < _TINY] = 0.0
    h = hessenberg(scaled)
    eps = np.finfo(float).eps
    scale = 1.0
    found = []
    hi = n - 1
    iters = 0
    while hi >= 0:
        if hi == 0:
            found.append(h[0, 0])
            break
        lo = hi
        while lo > 0:
            local = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if local == 0.0:
                local = scale
            # the absolute floor eps^2 * |H| also catches blocks whose products underflow
            if abs(h[lo, lo - 1]) <= max(eps * local, eps * eps * scale):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            found.append(h[hi, hi])
            hi -= 1
            iters = 0
            continue
        iters += 1
        if iters > max_iter:
            raise ConvergenceError(f"QR iteration did not converge after {max_iter} sweeps")
        block = h[lo:hi + 1, lo:hi + 1]
        if iters % 10 == 0:
            # exceptional shift to break cycles
            mu = block[-1, -1] + 1.5 * abs(block[-1, -2]) * np.exp(1j * iters)
        else:
            mu = _wilkinson_shift(block)
        _qr_sweep(block, mu)
    out = np.array(found[::-1], dtype=complex)
    return np.ldexp(out.real, shift) + 1j * np.ldexp(out.imag, shift)


def rightmost_eigenvalue(w, max_iter: int = DEFAULT_NUMERICS.max_qr_iter) -> complex:
    """Eigenvalue with the largest real part."""
    m = w.matrix if isinstance(w, Superoperator) else np.asarray(w)
    ev = eigenvalues(m, max_iter=max_iter)
    return complex(ev[np.argmax(ev.real)])


def rightmost_real_eigenvalue(w, config: NumericsConfig = DEFAULT_NUMERICS) -> float:
    """Rightmost eigenvalue, asserted real to ``config.imag_tol``."""
    lam = rightmost_eigenvalue(w, max_iter=config.max_qr_iter)
    if abs(lam.imag) > config.imag_tol:
        raise NumericalError(f"rightmost eigenvalue {lam} is not real")
    return lam.real


def steady_null_vector(w, config: NumericsConfig = DEFAULT_NUMERICS) -> np.ndarray:
    """Trace-one null vector of an untilted generator, returned as a density matrix.

    One diagonal row of the generator is replaced by the trace constraint
    and the resulting square system is solved directly.

    Raises
    ------
    NonUniqueSteadyStateError
        If the generator has more than one (numerical) zero singular value.
    NumericalError
        If the solution violates the residual, Hermiticity or positivity
        tolerances.
    """
    m = w.matrix if isinstance(w, Superoperator) else np.asarray(w, dtype=complex)
    if isinstance(w, Superoperator) and w.tilt_s != 0.0:
        raise ValueError("steady state requires an untilted generator (s = 0)")
    n = m.shape[0]
    d = int(round(np.sqrt(n)))
    sv = np.linalg.svd(m, compute_uv=False)
    if n > 1 and sv[-2] <= config.null_tol * max(sv[0], 1.0):
        raise NonUniqueSteadyStateError()
    a = np.array(m, dtype=complex)
    a[0, :] = trace_functional(d)
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise NonUniqueSteadyStateError() from exc
    resid = np.abs(m @ x).max()
    if resid > config.residual:
        raise NumericalError(f"steady-state residual {resid:.3e} exceeds {config.residual:.1e}")
    rho = unvec(x, d)
    if np.abs(rho - rho.conj().T).max() > config.hermiticity:
        raise NumericalError("steady state is not Hermitian")
    rho = 0.5 * (rho + rho.conj().T)
    if np.linalg.eigvalsh(rho).min() < -config.positivity:
        raise NumericalError("steady state is not positive semidefinite")
    return rho
