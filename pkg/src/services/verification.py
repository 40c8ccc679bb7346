"""Self-check suites behind the verify command.

Each suite runs a fixed set of oracle checks and returns one CheckResult
per check; numeric failures inside a check are reported as failed checks.
"""

import logging
import math
from collections.abc import Callable
from functools import lru_cache

import numpy as np

from src.errors import WhithamError
from src.models.field import GridFunction
from src.models.manifest import CheckResult, SuiteReport
from src.models.solution import SolverConfig, SolverState, Trajectory
from src.operators.singular_integral import (
    calibrated_kernel,
    calibration_constant,
    closed_form_calibration,
    k1_bound_holder,
    kn_bound,
)
from src.operators.spectral import (
    dispersion_apply,
    interpolate,
    sobolev_norm,
    spectral_derivative,
    sup_norm,
)
from src.services.characteristics import (
    advect,
    q_integral_bounds,
    ratio_bracket_diagnostic,
    sigma_set_diagnostic,
    slope_monotone,
    slope_series,
)
from src.services.hypothesis import alpha_range, sigma_value, stirling_lemma_check
from src.services.solver import (
    WhithamSolver,
    conserved_diagnostics,
    energy_identity_check,
    integrate_fixed,
    local_order,
    uxx_bound_check,
)

logger = logging.getLogger(__name__)

SUITES = ("operators", "lemmas", "energy", "scaling")
RECONCILIATION_ALPHAS = (0.2, 0.5, 0.7)
TWO_PI = 2.0 * math.pi


def random_field(
    rng: np.random.Generator, domain_length: float = TWO_PI, n_points: int = 64, modes: int = 8
) -> GridFunction:
    """Band-limited zero-mean field with coefficients decaying like k^-2."""
    coeffs = np.zeros(n_points // 2 + 1, dtype=complex)
    k = np.arange(1, modes + 1)
    coeffs[1 : modes + 1] = (rng.standard_normal(modes) + 1j * rng.standard_normal(modes)) / k**2
    return GridFunction.from_coeffs(coeffs, domain_length, n_points)


@lru_cache(maxsize=4)
def burgers_trajectory(t_end: float = 0.8, n_points: int = 256) -> Trajectory:
    """Dispersionless run from -sin x; breaks at t = 1."""
    config = SolverConfig(
        alpha=1.0,
        dispersion=False,
        n_points=n_points,
        max_points=8 * n_points,
        dt_initial=1e-3,
        t_end=t_end,
    )
    u0 = GridFunction.from_function(lambda x: -np.sin(x), TWO_PI, n_points)
    return WhithamSolver(config).run(u0)


def _check(suite: str, name: str, body: Callable[[], CheckResult]) -> CheckResult:
    try:
        return body()
    except WhithamError as e:
        logger.warning("Check %s/%s raised %s", suite, name, e)
        detail = f"{type(e).__name__}: {e}"
        return CheckResult(suite=suite, name=name, passed=False, detail=detail)


def _result(
    suite: str, name: str, value: float, threshold: float, detail: str = ""
) -> CheckResult:
    return CheckResult(
        suite=suite, name=name, passed=value <= threshold, value=value, threshold=threshold,
        detail=detail,
    )


# operators


def dispersion_error(alphas=(0.2, 0.5, 1.0, 2.0, 3.0), modes: int = 8) -> float:
    """max rel. error of HΛ^α cos(kx) = k^α sin(kx)."""
    worst = 0.0
    for a in alphas:
        for k in range(1, modes + 1):
            u = GridFunction.from_function(lambda x, k=k: np.cos(k * x), TWO_PI, 64)
            got = dispersion_apply(u, a).values
            expected = k**a * np.sin(k * u.grid)
            worst = max(worst, float(np.max(np.abs(got - expected))) / k**a)
    return worst


def kdv_limit_error(seed: int = 0) -> float:
    u = random_field(np.random.default_rng(seed))
    return float(
        np.max(np.abs(dispersion_apply(u, 3.0).coeffs - spectral_derivative(u, 3).coeffs))
    )


def reconciliation_error(
    alpha: float = 0.3, fields: int = 20, seed: int = 0, delta: float = 0.5, points: int = 2
) -> float:
    """Kernel path against the spectral path on random fields, max rel. error."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(fields):
        u = random_field(rng)
        spectral = dispersion_apply(u, alpha)
        scale = sup_norm(spectral)
        for x in rng.uniform(0.0, TWO_PI, points):
            kernel = calibrated_kernel(u, alpha, 0, float(x), delta)
            worst = max(worst, abs(kernel - interpolate(spectral, float(x))) / scale)
    return worst


def delta_independence(alpha: float = 0.3, seed: int = 1, deltas=(0.01, 0.1, 0.5, 1.0)) -> float:
    rng = np.random.default_rng(seed)
    u = random_field(rng)
    x = float(rng.uniform(0.0, TWO_PI))
    values = [calibrated_kernel(u, alpha, 0, x, d) for d in deltas]
    scale = max(abs(v) for v in values)
    return (max(values) - min(values)) / scale


def bound_violations(
    alpha: float = 0.3, fields: int = 50, seed: int = 2, deltas=(0.1, 1.0)
) -> int:
    """Grid points where measured |K_n| exceeds its bound, n = 0, 1, 2."""
    rng = np.random.default_rng(seed)
    constant = calibration_constant(alpha)
    violations = 0
    for _ in range(fields):
        u = random_field(rng)
        for n in range(3):
            measured = np.abs(dispersion_apply(spectral_derivative(u, n), alpha).values) / constant
            vn = sup_norm(spectral_derivative(u, n))
            vn1 = sup_norm(spectral_derivative(u, n + 1))
            for delta in deltas:
                violations += int(np.sum(measured > kn_bound(alpha, delta, vn, vn1)))
                if n == 1 and alpha < 0.5:
                    v2 = sobolev_norm(spectral_derivative(u, 2), 0.0)
                    holder = k1_bound_holder(alpha, delta, vn, v2)
                    violations += int(np.sum(measured > holder))
    return violations


def operators_suite(seed: int = 0) -> SuiteReport:
    suite = "operators"
    checks = {
        "dispersion-cosines": lambda: _result(
            suite, "dispersion-cosines", dispersion_error(), 1e-10
        ),
        "kdv-limit": lambda: _result(suite, "kdv-limit", kdv_limit_error(seed), 1e-12),
        "calibration-closed-form": lambda: _result(
            suite,
            "calibration-closed-form",
            abs(calibration_constant(0.3) / closed_form_calibration(0.3) - 1.0),
            1e-6,
        ),
        **{
            f"kernel-reconciliation-alpha={a}": (
                lambda a=a: _result(
                    suite,
                    f"kernel-reconciliation-alpha={a}",
                    reconciliation_error(a, seed=seed),
                    1e-6,
                )
            )
            for a in RECONCILIATION_ALPHAS
        },
        "split-radius-independence": lambda: _result(
            suite, "split-radius-independence", delta_independence(seed=seed + 1), 1e-8
        ),
        "bound-domination": lambda: _result(
            suite, "bound-domination", float(bound_violations(seed=seed + 2)), 0.0
        ),
    }
    return SuiteReport(suite=suite, results=[_check(suite, n, c) for n, c in checks.items()])


# lemmas


def stirling_failures(alphas=(0.1, 0.2, 0.3, 0.45), n_max: int = 40) -> int:
    return sum(
        not stirling_lemma_check(n, a).holds for a in alphas for n in range(3, n_max + 1)
    )


def alpha_limit_error() -> float:
    tiny = 1e-14
    return max(abs(alpha_range(tiny, "1.1") - 0.5), abs(alpha_range(tiny, "1.2") - 1.0 / 3.0))


def sigma_flag_mismatches(samples: int = 100, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for eps, alpha in zip(rng.uniform(0.01, 0.99, samples), rng.uniform(0.01, 0.99, samples)):
        for theorem in ("1.1", "1.2"):
            flag = sigma_value(eps, alpha, theorem).sigma_alpha_lt_1
            mismatches += flag != (alpha < alpha_range(eps, theorem))
    return mismatches


def lemmas_suite(seed: int = 0, eps: float = 0.1) -> SuiteReport:
    suite = "lemmas"
    trajectory = burgers_trajectory()
    paths = advect(trajectory, np.arange(64) * (TWO_PI / 64), max_order=1)
    slope = slope_series(trajectory, paths)

    def q_integral(s: float) -> CheckResult:
        bound = q_integral_bounds(slope, eps, s)
        return CheckResult(
            suite=suite, name=f"q-integral-s={s:g}", passed=bound.holds,
            value=bound.worst_ratio, threshold=1.0,
        )

    def sigma_nesting() -> CheckResult:
        diagnostic = sigma_set_diagnostic(trajectory, eps, 0.2, trajectory.final.t, paths, slope)
        return CheckResult(
            suite=suite, name="sigma-nesting", passed=diagnostic.nested,
            value=diagnostic.violation_measure, threshold=0.0,
        )

    def ratio_bracket() -> CheckResult:
        diagnostic = ratio_bracket_diagnostic(paths, slope, eps)
        return CheckResult(
            suite=suite, name="ratio-bracket",
            passed=diagnostic.sandwich_holds and diagnostic.derivative_holds,
            value=max(diagnostic.worst_sandwich, diagnostic.worst_derivative), threshold=1.0,
            detail=f"{diagnostic.paths} paths in the steep set",
        )

    def burgers_slope() -> CheckResult:
        times = np.asarray(slope.times)
        exact = -1.0 / (1.0 - times)
        error = float(np.max(np.abs(np.asarray(slope.m) - exact) / np.abs(exact)))
        return _result(suite, "burgers-slope", error, 1e-4)

    checks = {
        "stirling": lambda: _result(suite, "stirling", float(stirling_failures()), 0.0),
        "alpha-range-limits": lambda: _result(
            suite, "alpha-range-limits", alpha_limit_error(), 1e-12
        ),
        "sigma-flag": lambda: _result(
            suite, "sigma-flag", float(sigma_flag_mismatches(seed=seed)), 0.0
        ),
        "q-monotone": lambda: CheckResult(
            suite=suite, name="q-monotone", passed=slope_monotone(slope)
        ),
        "q-integral-s=2": lambda: q_integral(2.0),
        "q-integral-s=1": lambda: q_integral(1.0),
        "sigma-nesting": sigma_nesting,
        "ratio-bracket": ratio_bracket,
        "burgers-slope": burgers_slope,
    }
    return SuiteReport(suite=suite, results=[_check(suite, n, c) for n, c in checks.items()])


# energy


def kdv_drift(t_end: float = 5.0) -> float:
    config = SolverConfig(alpha=3.0, n_points=64, dt_initial=1e-3, t_end=t_end)
    u0 = GridFunction.from_function(lambda x: -0.1 * np.sin(x), TWO_PI, 64)
    trajectory = WhithamSolver(config).run(u0)
    return conserved_diagnostics(trajectory.final).l2_drift


def energy_suite(eps: float = 0.1) -> SuiteReport:
    suite = "energy"

    def identity() -> CheckResult:
        u = GridFunction.from_function(
            lambda x: -np.sin(x) + 0.3 * np.sin(2.0 * x), TWO_PI, 64
        )
        check = energy_identity_check(SolverState.initial(u), 0.5)
        return _result(suite, "energy-identity", check.residual, 1e-4)

    def uxx_bound() -> CheckResult:
        trajectory = burgers_trajectory()
        check = uxx_bound_check(trajectory, slope_series(trajectory), eps)
        return CheckResult(
            suite=suite, name="uxx-bound", passed=check.holds, value=check.max_ratio,
            threshold=1.0,
        )

    checks = {
        "energy-identity": identity,
        "kdv-l2-drift": lambda: _result(suite, "kdv-l2-drift", kdv_drift(), 1e-8),
        "uxx-bound": uxx_bound,
    }
    return SuiteReport(suite=suite, results=[_check(suite, n, c) for n, c in checks.items()])


# scaling


def scaling_error(alpha: float, lam: float = 2.0, t_end: float = 0.5, dt: float = 1e-2) -> float:
    """u_λ(t, x) = λ^{α-1} u(λ^α t, λx) against a direct run on the shrunken period."""
    u0 = GridFunction.from_function(lambda x: 0.5 * np.sin(x) + 0.2 * np.cos(3.0 * x), TWO_PI, 64)
    v0 = GridFunction.from_values(lam ** (alpha - 1.0) * u0.values, TWO_PI / lam)
    u = integrate_fixed(u0, alpha, lam**alpha * dt, lam**alpha * t_end)
    v = integrate_fixed(v0, alpha, dt, t_end)
    expected = lam ** (alpha - 1.0) * u.u.values
    return float(np.max(np.abs(v.u.values - expected)) / np.max(np.abs(expected)))


def scaling_suite() -> SuiteReport:
    suite = "scaling"

    def order() -> CheckResult:
        u = GridFunction.from_function(lambda x: 0.5 * np.sin(x), TWO_PI, 64)
        estimate = local_order(SolverState.initial(u), 0.1, 0.5)
        return CheckResult(
            suite=suite, name="etdrk4-order", passed=3.5 <= estimate <= 4.5, value=estimate,
            detail="expected 4",
        )

    checks = {
        f"symmetry-alpha={a}": (
            lambda a=a: _result(suite, f"symmetry-alpha={a}", scaling_error(a), 1e-6)
        )
        for a in (0.3, 0.5)
    }
    checks["etdrk4-order"] = order
    return SuiteReport(suite=suite, results=[_check(suite, n, c) for n, c in checks.items()])


def run_suite(name: str, seed: int = 0) -> SuiteReport:
    if name == "operators":
        return operators_suite(seed)
    if name == "lemmas":
        return lemmas_suite(seed)
    if name == "energy":
        return energy_suite()
    if name == "scaling":
        return scaling_suite()
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
