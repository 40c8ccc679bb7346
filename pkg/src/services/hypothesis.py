"""Checking the hypotheses of both breaking theorems for a concrete datum.

Infeasible or violated hypotheses are reported, never raised: every
inequality is evaluated as written and its margin recorded.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from scipy.special import gammaln, logsumexp

from src.config import HypothesisSettings, settings
from src.errors import DomainError, ResolutionError
from src.models.field import Alpha, GridFunction, as_alpha
from src.models.hypothesis import (
    AmplitudeThreshold,
    ConstantWindow,
    DatumProfile,
    FeasibleWindows,
    GevreyReport,
    HypothesisReport,
    InequalityRecord,
    K1InitialCheck,
    ProfileKind,
    SigmaValue,
    StirlingCheck,
    Theorem,
)
from src.operators.spectral import (
    dispersion_apply,
    high_band_fraction,
    refined_minimum,
    sobolev_norm,
    spectral_derivative,
    sup_norm,
)

logger = logging.getLogger(__name__)

MAX_GEVREY_ORDER = 12
SIGMA_INFLATION = 1.0 + 1e-9
BUMP_SHAPE = 4.0 * math.exp(-1.5)
TAIL_LIMIT = 1e-12


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def _record(
    name: str, lhs: float, rhs: float, noise: float = 0.0, note: str = ""
) -> InequalityRecord:
    """Strict inequality lhs < rhs; inconclusive when the gap is below the noise floor."""
    margin = rhs - lhs
    if noise > 0.0 and abs(margin) <= noise:
        status = "inconclusive"
    else:
        status = "satisfied" if lhs < rhs else "violated"
    return InequalityRecord(name=name, lhs=lhs, rhs=rhs, status=status, margin=margin, note=note)


def alpha_range(eps: float, theorem: Theorem) -> float:
    """Open upper bound on α for the given theorem."""
    _check_eps(eps)
    lo = (1.0 - eps) ** 2
    if theorem == "1.1":
        return lo / (3.0 * (1.0 + eps) ** 3 - lo)
    if theorem == "1.2":
        return lo / (5.0 - 2.0 * lo)
    raise DomainError(f"unknown theorem {theorem!r}")


def sigma_value(eps: float, alpha: Alpha | float, theorem: Theorem = "1.1") -> SigmaValue:
    """Exponent σ of the bootstrap and the flag σα < 1.

    For the first theorem σ sits just above 3(1+ε)³/(1-ε)² - 1; for the
    second it is 5/(1-ε)² - 2 exactly.
    """
    _check_eps(eps)
    a = as_alpha(alpha).value
    if theorem == "1.1":
        bound = 3.0 * (1.0 + eps) ** 3 / (1.0 - eps) ** 2 - 1.0
        sigma = bound * SIGMA_INFLATION
    else:
        bound = 5.0 / (1.0 - eps) ** 2 - 2.0
        sigma = bound
    return SigmaValue(sigma=sigma, bound=bound, sigma_alpha_lt_1=bound * a < 1.0)


class _Norms:
    """Norm inputs of the hypotheses, computed once per datum."""

    def __init__(self, phi: DatumProfile):
        u = phi.grid
        self.sup = sup_norm(u)
        self.sup_d1 = sup_norm(spectral_derivative(u, 1))
        self.inf_d1 = phi.inf_slope
        self.l2_d2 = sobolev_norm(spectral_derivative(u, 2), 0.0)
        self.h2 = sobolev_norm(u, 2.0)
        self.h3 = sobolev_norm(u, 3.0)


def _gevrey_factor(n: int, alpha: float) -> float:
    """(n-1)^{(n-1)/α}, saturating to inf."""
    log_value = (n - 1) / alpha * math.log(n - 1) if n > 2 else 0.0
    return math.exp(log_value) if log_value < 700.0 else math.inf


def _gevrey_lower(phi: DatumProfile, alpha: float, n_max: int) -> float:
    return max(
        sup_norm(spectral_derivative(phi.grid, n)) / _gevrey_factor(n, alpha)
        for n in range(2, n_max + 1)
    )


def constants_feasible(
    phi: DatumProfile,
    eps: float,
    alpha: Alpha | float | None = None,
    theorem: Theorem = "1.1",
    n_max: int | None = None,
) -> FeasibleWindows:
    """Admissible open windows for C0, C1 and C2.

    Without alpha the C2 window of the first theorem is left unbounded above.
    """
    _check_eps(eps)
    norms = _Norms(phi)
    n_max = n_max or settings().hypothesis.n_max

    if theorem == "1.2":
        if alpha is None:
            raise DomainError("the second theorem's C2 window needs alpha")
        a = as_alpha(alpha).value
        if a >= 0.5:
            raise DomainError(f"second theorem needs alpha < 1/2, got {a}")
        return FeasibleWindows(
            C0=ConstantWindow(name="C0", lower=2.0 * (norms.sup + norms.sup_d1)),
            C1=ConstantWindow(name="C1", lower=2.0 * norms.sup_d1),
            C2=ConstantWindow(name="C2", lower=norms.l2_d2 / math.sqrt((1.0 - 2.0 * a) / 2.0)),
        )

    c0 = ConstantWindow(name="C0", lower=(norms.sup + norms.sup_d1) / (1.0 - eps))
    c1 = ConstantWindow(
        name="C1",
        lower=norms.sup_d1 / (1.0 - eps),
        upper=-(1.0 + eps) * norms.inf_d1 / (1.0 - eps),
    )
    if alpha is None:
        return FeasibleWindows(C0=c0, C1=c1, C2=ConstantWindow(name="C2", lower=0.0))

    a = as_alpha(alpha).value
    if a >= 1.0:
        raise DomainError(f"first theorem needs alpha < 1, got {a}")
    exponent = 1.0 / a - 1.0
    upper = (
        (1.0 + eps) / (1.0 - eps) * exponent / math.e * (2.0 / 3.0) ** exponent * -norms.inf_d1
    )
    c2 = ConstantWindow(name="C2", lower=_gevrey_lower(phi, a, n_max), upper=upper)
    return FeasibleWindows(C0=c0, C1=c1, C2=c2)


def choose_constants(
    phi: DatumProfile,
    eps: float,
    alpha: Alpha | float,
    theorem: Theorem = "1.1",
    config: HypothesisSettings | None = None,
) -> dict[str, float]:
    """A choice of (C0, C1, C2) placed inside the feasibility windows."""
    config = config or settings().hypothesis
    windows = constants_feasible(phi, eps, alpha, theorem, config.n_max)
    slack = config.constant_slack
    chosen = {}
    for window in (windows.C0, windows.C1, windows.C2):
        if window.upper is not None and window.feasible:
            chosen[window.name] = window.lower + slack * (window.upper - window.lower)
        else:
            chosen[window.name] = window.lower * (1.0 + slack) if window.lower > 0.0 else slack
    return chosen


def _check_constants(C0: float, C1: float, C2: float) -> None:
    for name, value in (("C0", C0), ("C1", C1), ("C2", C2)):
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value}")


def initial_k1_check(
    phi: DatumProfile, alpha: Alpha | float, eps: float, margin: float | None = None
) -> K1InitialCheck:
    """Measured sup|HΛ^α φ'| and its Sobolev majorant against ε² (inf φ')²."""
    a = as_alpha(alpha).value
    margin = settings().hypothesis.sobolev_margin if margin is None else margin
    k1 = sup_norm(dispersion_apply(spectral_derivative(phi.grid, 1), a))
    exponent = a + 1.5 + margin
    sobolev = sobolev_norm(phi.grid, exponent)
    target = eps**2 * phi.inf_slope**2
    return K1InitialCheck(
        k1_sup=k1,
        sobolev_norm=sobolev,
        sobolev_exponent=exponent,
        target=target,
        holds=k1 < target,
        sobolev_holds=sobolev < target,
    )


def check_theorem_11(
    phi: DatumProfile,
    alpha: Alpha | float,
    eps: float,
    C0: float,
    C1: float,
    C2: float,
    n_max: int | None = None,
) -> HypothesisReport:
    """Evaluate every hypothesis of the first breaking theorem.

    Args:
        phi: Initial datum with its grid and steepness data.
        alpha: Dispersion exponent, below 1.
        eps: The ε of the theorem, in (0, 1).
        C0: Positive bound on ∥φ∥∞ + ∥φ′∥∞.
        C1: Positive constant compared with -inf φ′.
        C2: Positive constant of the Gevrey growth bound. Constants outside
            their feasible windows are logged and still evaluated.
        n_max: Highest Gevrey order checked; defaults to hypothesis.n_max.

    Returns:
        HypothesisReport with one record per inequality, the feasible windows,
        the Gevrey records and σ. overall is the conjunction of the conclusive
        records.

    Raises:
        DomainError: alpha >= 1, eps or a constant out of range, or n_max
            above the tracked Gevrey order.
    """
    _check_eps(eps)
    _check_constants(C0, C1, C2)
    a = as_alpha(alpha).value
    if a >= 1.0:
        raise DomainError(f"first theorem needs alpha < 1, got {a}")
    n_max = n_max or settings().hypothesis.n_max
    if n_max > MAX_GEVREY_ORDER:
        raise DomainError(f"Gevrey order capped at {MAX_GEVREY_ORDER}, got {n_max}")

    norms = _Norms(phi)
    windows = constants_feasible(phi, eps, a, "1.1", n_max)
    for name, value in (("C0", C0), ("C1", C1), ("C2", C2)):
        if not getattr(windows, name).contains(value):
            logger.warning("%s=%.6g outside its feasible window", name, value)

    inf_d1 = norms.inf_d1
    exponent = 1.0 / a - 1.0
    # Each record stores the small side first.
    records = [
        _record(
            "A2:m1",
            norms.h3 + 2.0 / a * (3.0 * C1 + C2 / (1.0 - a)),
            eps**2 * inf_d1**2,
        ),
        _record(
            "A2:m2",
            2.0 / (a * (1.0 - a)) * (3.0 + (C1 / C0 + C2 / C1) / (1.0 - a)),
            -eps * (1.0 - eps) ** 3 * inf_d1,
        ),
        _record(
            "A2:m3",
            6.0 / a * (1.0 + eps ** (1.0 / a)),
            -eps * (1.0 + eps) / (1.0 - eps) * inf_d1,
        ),
        _record("I:C0", norms.sup + norms.sup_d1, (1.0 - eps) * C0),
        _record("I:C1", norms.sup_d1, (1.0 - eps) * C1),
        _record("I:C1:upper", (1.0 - eps) * C1, -(1.0 + eps) * inf_d1),
        _record(
            "I:C2",
            (1.0 - eps) / (1.0 + eps) * C2,
            -exponent / math.e * (2.0 / 3.0) ** exponent * inf_d1,
        ),
    ]

    gevrey = GevreyReport(n_max=n_max)
    machine = np.finfo(float).eps
    xi_max = float(phi.grid.wavenumbers[-1])
    for n in range(2, n_max + 1):
        noise = machine * math.sqrt(phi.grid.n_points) * xi_max**n * norms.sup
        rec = _record(
            f"Gevrey:n={n}",
            sup_norm(spectral_derivative(phi.grid, n)),
            C2 * _gevrey_factor(n, a),
            noise=noise,
            note=f"noise floor {noise:.2e}",
        )
        records.append(rec)
        if rec.status == "violated" and gevrey.first_violation is None:
            gevrey.first_violation = n
        elif rec.status == "inconclusive":
            gevrey.inconclusive.append(n)

    k1 = initial_k1_check(phi, a, eps)
    records.append(_record("K1:t0", k1.k1_sup, k1.target))

    sigma = sigma_value(eps, a, "1.1")
    records.append(_record("sigma", sigma.bound * a, 1.0))

    bound = alpha_range(eps, "1.1")
    return HypothesisReport(
        theorem="1.1",
        alpha=a,
        eps=eps,
        alpha_bound=bound,
        alpha_ok=a < bound,
        alpha_margin=bound - a,
        records=records,
        constants={"C0": C0, "C1": C1, "C2": C2},
        windows=windows,
        gevrey=gevrey,
        sigma=sigma,
    )


def check_theorem_12(
    phi: DatumProfile,
    alpha: Alpha | float,
    eps: float,
    C0: float,
    C1: float,
    C2: float,
) -> HypothesisReport:
    """Evaluate every hypothesis of the second breaking theorem.

    Args:
        phi: Initial datum with its grid and steepness data.
        alpha: Dispersion exponent, below 1/2.
        eps: The ε of the theorem, in (0, 1).
        C0: Positive bound on ∥φ∥∞ + ∥φ′∥∞.
        C1: Positive constant compared with -inf φ′.
        C2: Positive constant bounding ∥φ″∥_{L²}.

    Returns:
        HypothesisReport with one record per inequality and σ = 5/(1-ε)² - 2.

    Raises:
        DomainError: alpha >= 1/2, or eps or a constant out of range.
    """
    _check_eps(eps)
    _check_constants(C0, C1, C2)
    a = as_alpha(alpha).value
    if a >= 0.5:
        raise DomainError(f"second theorem needs alpha < 1/2, got {a}")

    norms = _Norms(phi)
    inf_d1 = norms.inf_d1
    records = [
        _record("A3:m1", norms.h2 + (6.0 * C1 + C2) / a, eps**2 * inf_d1**2),
        _record(
            "A3:m2",
            4.0 / (a * (1.0 - a)) * (3.0 + C1 / C0 / (1.0 - a)) + 2.0 / a * (6.0 + C2 / C1),
            -inf_d1,
        ),
        _record("I:C012:C0", norms.sup + norms.sup_d1, 0.5 * C0),
        _record("I:C012:C1", norms.sup_d1, 0.5 * C1),
        _record("I:C012:C2", norms.l2_d2, math.sqrt((1.0 - 2.0 * a) / 2.0) * C2),
    ]
    sigma = sigma_value(eps, a, "1.2")
    records.append(_record("sigma", sigma.sigma * a, 1.0))

    bound = alpha_range(eps, "1.2")
    return HypothesisReport(
        theorem="1.2",
        alpha=a,
        eps=eps,
        alpha_bound=bound,
        alpha_ok=a < bound,
        alpha_margin=bound - a,
        records=records,
        constants={"C0": C0, "C1": C1, "C2": C2},
        windows=constants_feasible(phi, eps, a, "1.2"),
        sigma=sigma,
    )


def check_theorem(
    phi: DatumProfile,
    alpha: Alpha | float,
    eps: float,
    theorem: Theorem,
    constants: dict[str, float] | None = None,
) -> HypothesisReport:
    """Check one theorem, choosing constants inside the windows when none are given."""
    constants = constants or choose_constants(phi, eps, alpha, theorem)
    if theorem == "1.1":
        return check_theorem_11(phi, alpha, eps, **constants)
    return check_theorem_12(phi, alpha, eps, **constants)


def stirling_lemma_check(n: int, alpha: Alpha | float) -> StirlingCheck:
    """Σ_{j=2}^{n-1} C(n,j)(j-1)^{(j-1)/α}(n-j)^{(n-j)/α} against
    (e/(1/α-1)) (3/2)^{1/α-1} n (n-1)^{(n-1)/α}, in log space."""
    a = as_alpha(alpha).value
    if not 3 <= n <= 40:
        raise DomainError(f"n must lie in [3, 40], got {n}")
    if a >= 1.0:
        raise DomainError(f"combinatorial bound needs alpha < 1, got {a}")

    j = np.arange(2, n)
    log_binomial = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
    left = j - 1
    right = n - j
    terms = (
        log_binomial
        + np.where(left > 0, left / a * np.log(np.maximum(left, 1)), 0.0)
        + np.where(right > 0, right / a * np.log(np.maximum(right, 1)), 0.0)
    )
    log_lhs = float(logsumexp(terms))
    exponent = 1.0 / a - 1.0
    log_rhs = (
        1.0
        - math.log(exponent)
        + exponent * math.log(1.5)
        + math.log(n)
        + (n - 1) / a * math.log(n - 1)
    )
    return StirlingCheck(n=n, alpha=a, log_lhs=log_lhs, log_rhs=log_rhs, holds=log_lhs <= log_rhs)


def _spectral_tail(u: GridFunction) -> float:
    """Relative amplitude in the top third of the full band."""
    return math.sqrt(high_band_fraction(u, dealias=False))


def datum_factory(
    kind: ProfileKind,
    amplitude: float,
    width: float,
    domain_length: float,
    n_points: int,
    values: np.ndarray | None = None,
) -> DatumProfile:
    """Build a steep initial datum on the grid.

    scaled-sine:      φ = -A sin(2πx/L), inf φ' = -2πA/L at x = 0.
    bump-derivative:  φ = -A b'(x) with b = exp(-(x-L/2)²/λ²),
                      inf φ' = -4 e^{-3/2} A / λ².
    custom:           φ given by values; amplitude and width are taken from it.
    """
    if kind == "scaled-sine":
        wavenumber = 2.0 * math.pi / domain_length
        grid = GridFunction.from_function(
            lambda x: -amplitude * np.sin(wavenumber * x), domain_length, n_points
        )
        shape = wavenumber
        width = domain_length
    elif kind == "bump-derivative":
        half = 0.5 * domain_length
        edge = 2.0 * half / width**2 * math.exp(-((half / width) ** 2))
        if edge > TAIL_LIMIT:
            raise ResolutionError(
                f"bump of width {width} is not periodic on L={domain_length} (edge {edge:.2e})"
            )

        def bump_derivative(x: np.ndarray) -> np.ndarray:
            s = (x - half) / width
            return 2.0 * amplitude / width * s * np.exp(-(s**2))

        grid = GridFunction.from_function(bump_derivative, domain_length, n_points)
        shape = BUMP_SHAPE / width**2
    elif kind == "custom":
        if values is None:
            raise DomainError("custom profile needs values")
        grid = GridFunction.from_values(values, domain_length)
        amplitude = grid.max_abs()
        width = domain_length
        shape = 0.0
    else:
        raise DomainError(f"unknown profile kind {kind!r}")

    tail = _spectral_tail(grid)
    if tail > TAIL_LIMIT:
        raise ResolutionError(f"{kind} profile under-resolved: spectral tail {tail:.2e}")

    _, inf_slope = refined_minimum(spectral_derivative(grid, 1))
    if not inf_slope < 0.0 or amplitude <= 0.0:
        raise DomainError(f"{kind} profile has no negative slope")
    if kind == "custom":
        shape = -inf_slope / amplitude
    return DatumProfile(
        kind=kind,
        amplitude=amplitude,
        width=width,
        grid=grid,
        inf_slope=inf_slope,
        shape_constant=shape,
    )


def amplitude_threshold(
    kind: ProfileKind,
    width: float,
    domain_length: float,
    n_points: int,
    alpha: Alpha | float,
    eps: float,
    theorem: Theorem = "1.1",
    targets: list[str] | None = None,
    bounds: tuple[float, float] = (1e-3, 1e12),
    config: HypothesisSettings | None = None,
) -> AmplitudeThreshold:
    """Bisection on log A for the smallest amplitude satisfying the target inequalities.

    Constants are re-chosen inside their windows at every amplitude. Returns
    threshold None when even the upper amplitude fails.
    """
    config = config or settings().hypothesis
    if targets is None:
        targets = ["A2:m1", "A2:m2", "A2:m3"] if theorem == "1.1" else ["A3:m1", "A3:m2"]

    def holds(amplitude: float) -> bool:
        phi = datum_factory(kind, amplitude, width, domain_length, n_points)
        report = check_theorem(phi, alpha, eps, theorem)
        return all(report.record(name).satisfied for name in targets)

    return _bisect_log(holds, bounds, config.bisection_iterations, theorem, targets)


def _bisect_log(
    predicate: Callable[[float], bool],
    bounds: tuple[float, float],
    iterations: int,
    theorem: Theorem,
    targets: list[str],
) -> AmplitudeThreshold:
    lo, hi = bounds
    if not predicate(hi):
        return AmplitudeThreshold(
            theorem=theorem, targets=targets, lower=lo, upper=hi, iterations=0
        )
    if predicate(lo):
        return AmplitudeThreshold(
            theorem=theorem, targets=targets, threshold=lo, lower=lo, upper=lo, iterations=0
        )
    log_lo, log_hi = math.log(lo), math.log(hi)
    count = 0
    for count in range(1, iterations + 1):
        mid = 0.5 * (log_lo + log_hi)
        if predicate(math.exp(mid)):
            log_hi = mid
        else:
            log_lo = mid
        if log_hi - log_lo < 1e-12:
            break
    logger.debug("Amplitude threshold bracket [%.6g, %.6g]", math.exp(log_lo), math.exp(log_hi))
    return AmplitudeThreshold(
        theorem=theorem,
        targets=targets,
        threshold=math.exp(log_hi),
        lower=math.exp(log_lo),
        upper=math.exp(log_hi),
        iterations=count,
    )
