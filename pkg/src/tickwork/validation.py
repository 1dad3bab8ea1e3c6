"""Self-check suites run by ``tickwork validate``.

Each suite returns a :class:`SuiteResult`; a suite that raises is reported
as failed with the exception text.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .ldt import (
    analytic_theta_two_level,
    closed_form_populations,
    closed_form_ratio_hybrid_pi,
    steady_state,
    theta,
)
from .models import (
    GaussianMeasurement,
    ThreeLevelAthermal,
    ThreeLevelHybrid,
    TwoLevelAthermal,
    clockwork_kraus_pair,
    gaussian_kraus,
    hamiltonian,
    jump_kraus_pair,
    lindblad_terms,
    measured_observable,
    spin_observable,
)
from .numkernel import trace_functional, unvec, vec, vec_superop_term
from .trajectory import _unread_channel

__all__ = [
    "SuiteResult",
    "gaussian_quadrature_identity",
    "gaussian_average",
    "exact_kraus_step",
    "lindblad_euler_step",
    "kraus_lindblad_gap",
    "convergence_ratio",
    "reference_models",
    "run_suites",
    "SUITES",
]

GH_NODES = 64
DISCRETE_EPSILONS = (0.003, 0.03, 0.3)
GAUSSIAN_EPSILONS = (1e-4, 1e-3, 1e-2, 0.1, 0.3)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst: float = 0.0
    tolerance: float = 0.0
    failures: list = field(default_factory=list)

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "worst": self.worst,
                "tolerance": self.tolerance, "failures": list(self.failures)}


def reference_models():
    """One model per clock family at the reference figure parameters."""
    return [
        TwoLevelAthermal(omega=1.0, gamma_m=1.5, gamma_w=6.0),
        ThreeLevelAthermal(omega_m=1.0, omega_c=0.1, theta=math.pi / 2, phi=0.0,
                           gamma_m=3.0, gamma_c=4.0, gamma_w=3.0),
        ThreeLevelHybrid(omega_m=1.0, omega_c=0.1, theta=math.pi / 2, phi=0.0, gamma_m=3.0,
                         gamma_c=4.0, gamma_w=3.0, gamma_h=4.0, beta_h_omega_m=3.0,
                         beta_c_omega_c=100.0),
    ]


def _gh_rule(epsilon_m, n=GH_NODES):
    """Nodes and weights for integrals over the readout r with Gaussian width ~ 1/sqrt(4 eps)."""
    u, w = np.polynomial.hermite.hermgauss(n)
    scale = math.sqrt(4.0 * epsilon_m)
    return u / scale, w * np.exp(u**2) / scale


def gaussian_quadrature_identity(observable, epsilon_m, n=GH_NODES):
    """Quadrature estimate of the integral of M(r)^+ M(r) over r."""
    gm = GaussianMeasurement(np.asarray(observable, dtype=complex), epsilon_m)
    r, w = _gh_rule(epsilon_m, n)
    total = np.zeros_like(gm.observable)
    for ri, wi in zip(r, w):
        k = gaussian_kraus(gm, ri)
        total += wi * (k.conj().T @ k)
    return total


def gaussian_average(rho, observable, epsilon_m, n=GH_NODES):
    """Quadrature estimate of the integral of M(r) rho M(r)^+ over r."""
    gm = GaussianMeasurement(np.asarray(observable, dtype=complex), epsilon_m)
    r, w = _gh_rule(epsilon_m, n)
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for ri, wi in zip(r, w):
        k = gaussian_kraus(gm, ri)
        out += wi * (k @ rho @ k.conj().T)
    return out


def exact_kraus_step(model, rho, dt):
    """Unread measurement, clockwork and loss channels composed over one step."""
    u = expm(-1j * hamiltonian(model) * dt)
    rho = u @ rho @ u.conj().T
    if model.gamma_m > 0:
        rho = gaussian_average(rho, measured_observable(model), model.gamma_m * dt)
    rho = clockwork_kraus_pair(model, dt).channel(rho)
    channel = _unread_channel(model, dt)
    if channel is not None:
        rho = unvec(channel @ vec(rho))
    return rho


def lindblad_euler_step(model, rho, dt):
    return rho + dt * lindblad_terms(model, 0.0).apply(rho)


def kraus_lindblad_gap(model, rho, dt):
    return float(np.abs(exact_kraus_step(model, rho, dt) - lindblad_euler_step(model, rho, dt)).max())


def _probe_state(d, seed=11):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def convergence_ratio(model, dt=1e-2, rho=None):
    """Gap at ``dt`` divided by the gap at ``dt / 2``; 4 for a first-order-consistent step."""
    rho = _probe_state(model.dim) if rho is None else rho
    return kraus_lindblad_gap(model, rho, dt) / kraus_lindblad_gap(model, rho, dt / 2)


# --- suites ----------------------------------------------------------------------------

def suite_kronecker(tol=1e-12, trials=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(trials):
        d = 2 + t % 2
        a, b, rho = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(3))
        got = unvec(vec_superop_term(a, b) @ vec(rho))
        worst = max(worst, float(np.abs(got - a @ rho @ b).max()))
    return SuiteResult("kronecker_identity", worst <= tol, worst, tol)


def suite_discrete_kraus(tol=1e-15, extra_epsilons=()):
    res = SuiteResult("discrete_kraus_completeness", True, 0.0, tol)
    for eps in tuple(DISCRETE_EPSILONS) + tuple(extra_epsilons):
        for channel, dim in (("clockwork", 2), ("clockwork", 3), ("loss", 3)):
            try:
                defect = jump_kraus_pair(channel, eps, dim).completeness_defect()
            except Exception as exc:  # noqa: BLE001 - reported, not raised
                res.passed = False
                res.failures.append(f"{channel}/d={dim}/eps={eps}: {exc}")
                continue
            res.worst = max(res.worst, defect)
            if defect > tol:
                res.passed = False
                res.failures.append(f"{channel}/d={dim}/eps={eps}: defect {defect:.3e}")
    return res


def suite_gaussian(tol=1e-8):
    res = SuiteResult("gaussian_completeness", True, 0.0, tol)
    observables = [np.array([[0, 1], [1, 0]], dtype=complex), spin_observable(math.pi / 2, 0.0),
                   spin_observable(0.7, 1.3)]
    for x in observables:
        for eps in GAUSSIAN_EPSILONS:
            dev = float(np.abs(gaussian_quadrature_identity(x, eps) - np.eye(x.shape[0])).max())
            res.worst = max(res.worst, dev)
            if dev > tol:
                res.passed = False
                res.failures.append(f"dim={x.shape[0]}/eps={eps}: deviation {dev:.3e}")
    return res


def suite_observable(tol=1e-12):
    res = SuiteResult("observable_algebra", True, 0.0, tol)
    dark = np.array([0, 1, 0], dtype=complex)
    for th in np.linspace(0, math.pi, 13):
        for ph in np.linspace(0, 2 * math.pi, 8, endpoint=False):
            x = spin_observable(th, ph)
            dev = max(np.abs(x - x.conj().T).max(), np.abs(x @ x @ x - x).max(),
                      np.abs(x @ dark).max())
            res.worst = max(res.worst, float(dev))
    res.passed = res.worst <= tol
    return res


def suite_zero_mode(tol=1e-10, trace_tol=1e-12):
    res = SuiteResult("generator_zero_mode", True, 0.0, tol)
    for model in reference_models():
        w = lindblad_terms(model, 0.0).matrix
        tr = float(np.abs(trace_functional(model.dim) @ w).max())
        th0 = abs(theta(model, 0.0))
        res.worst = max(res.worst, th0)
        if tr > trace_tol or th0 > tol:
            res.passed = False
            res.failures.append(f"{model.kind}: trace defect {tr:.2e}, theta(0) {th0:.2e}")
    return res


def suite_two_level_theta(tol=1e-9):
    res = SuiteResult("two_level_theta", True, 0.0, tol)
    for gm in (0.5, 1.0, 1.5, 2.0):
        model = TwoLevelAthermal(1.0, gm, 6.0)
        for s in np.linspace(-2, 2, 81):
            dev = abs(theta(model, s) - analytic_theta_two_level(gm, 6.0, s))
            res.worst = max(res.worst, dev)
    res.passed = res.worst <= tol
    return res


def suite_closed_forms(tol=1e-9):
    res = SuiteResult("closed_forms", True, 0.0, tol)
    for th in np.linspace(0, math.pi, 13):
        model = ThreeLevelAthermal(1.0, 0.1, th, 0.0, 3.0, 4.0, 3.0)
        rho = steady_state(model)
        pm, pc, coh = closed_form_populations(model)
        dev = max(abs(rho[0, 0].real - pm), abs(rho[1, 1].real - pc), abs(abs(rho[0, 2]) ** 2 - coh))
        res.worst = max(res.worst, dev)
    for th in (math.pi / 2, math.pi):
        model = ThreeLevelHybrid(1.0, 0.1, th, 0.0, 3.0, 4.0, 3.0, 4.0, 3.0, 100.0)
        rho = steady_state(model)
        pm, _, _ = closed_form_populations(model)
        res.worst = max(res.worst, abs(rho[0, 0].real - pm))
        if th == math.pi:
            ratio = rho[0, 0].real / rho[1, 1].real
            res.worst = max(res.worst, abs(ratio - closed_form_ratio_hybrid_pi(model)))
    res.passed = res.worst <= tol
    return res


def suite_convergence(target=4.0, band=0.5):
    res = SuiteResult("kraus_lindblad_convergence", True, 0.0, band)
    for model in reference_models():
        ratio = convergence_ratio(model)
        res.worst = max(res.worst, abs(ratio - target))
        if abs(ratio - target) > band:
            res.passed = False
            res.failures.append(f"{model.kind}: ratio {ratio:.3f}")
    return res


SUITES = {
    "kronecker_identity": suite_kronecker,
    "discrete_kraus_completeness": suite_discrete_kraus,
    "gaussian_completeness": suite_gaussian,
    "observable_algebra": suite_observable,
    "generator_zero_mode": suite_zero_mode,
    "two_level_theta": suite_two_level_theta,
    "closed_forms": suite_closed_forms,
    "kraus_lindblad_convergence": suite_convergence,
}


def run_suites(gaussian_tol=None, inject_epsilons=()):
    """Run every suite. ``gaussian_tol`` overrides the quadrature tolerance."""
    results = []
    for name, fn in SUITES.items():
        kwargs = {}
        if name == "gaussian_completeness" and gaussian_tol is not None:
            kwargs["tol"] = gaussian_tol
        if name == "discrete_kraus_completeness" and inject_epsilons:
            kwargs["extra_epsilons"] = inject_epsilons
        try:
            results.append(fn(**kwargs))
        except Exception as exc:  # noqa: BLE001 - a crashing suite is a failing suite
            results.append(SuiteResult(name, False, float("nan"), 0.0, [repr(exc)]))
    return results
