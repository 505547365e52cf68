"""The nine supported families: exact log-densities and single-parameter
exponential-family decompositions.

Each family is a frozen dataclass validated at construction.  Five of them
(Bernoulli, NegBinomial, Poisson, Normal, Gamma) decompose as
``h(x) exp(eta(theta) T(x) - A(theta))`` with a strictly increasing natural
map ``eta`` and the mean identity ``A'(theta) = theta * eta'(theta)``; the
other four (Hypergeometric, WaitingTime, StudentT, FDist) are bounded by
direct likelihood-ratio arguments instead.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError, UnsupportedFamilyError

__all__ = [
    "Bernoulli",
    "NegBinomial",
    "Poisson",
    "Hypergeometric",
    "WaitingTime",
    "Normal",
    "Gamma",
    "StudentT",
    "FDist",
    "DistributionSpec",
    "ExpFamilyModel",
    "log_density",
    "exp_family_of",
    "exp_family_theta",
    "statistic_mean",
    "is_discrete",
    "discrete_support",
]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or float(value) != int(value):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class Bernoulli:
    """Coin with success probability ``p`` in (0, 1)."""

    p: float

    def __post_init__(self):
        _require(0.0 < self.p < 1.0, f"Bernoulli p must be in (0,1), got {self.p}")


@dataclass(frozen=True)
class NegBinomial:
    """Failure count before the r-th success; ``r`` may be any positive real."""

    r: float
    p: float

    def __post_init__(self):
        _require(self.r > 0.0, f"NegBinomial r must be positive, got {self.r}")
        _require(0.0 < self.p < 1.0, f"NegBinomial p must be in (0,1), got {self.p}")


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        _require(self.lam > 0.0, f"Poisson rate must be positive, got {self.lam}")


@dataclass(frozen=True)
class Hypergeometric:
    """Marked-unit count among ``n`` draws without replacement from a
    population of ``N`` units of which ``M`` are marked."""

    N: int
    M: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "N", _as_int(self.N, "N"))
        object.__setattr__(self, "M", _as_int(self.M, "M"))
        object.__setattr__(self, "n", _as_int(self.n, "n"))
        _require(self.N >= 1, f"population size must be >= 1, got {self.N}")
        _require(0 <= self.M <= self.N, f"need 0 <= M <= N, got M={self.M}, N={self.N}")
        _require(1 <= self.n <= self.N, f"need 1 <= n <= N, got n={self.n}, N={self.N}")


@dataclass(frozen=True)
class WaitingTime:
    """Number of draws without replacement until ``r`` marked units appear."""

    N: int
    M: int
    r: int

    def __post_init__(self):
        object.__setattr__(self, "N", _as_int(self.N, "N"))
        object.__setattr__(self, "M", _as_int(self.M, "M"))
        object.__setattr__(self, "r", _as_int(self.r, "r"))
        _require(self.N >= 1, f"population size must be >= 1, got {self.N}")
        _require(0 <= self.M <= self.N, f"need 0 <= M <= N, got M={self.M}, N={self.N}")
        _require(1 <= self.r <= self.M, f"need 1 <= r <= M, got r={self.r}, M={self.M}")


@dataclass(frozen=True)
class Normal:
    """Gaussian with known standard deviation; the unknown parameter is the mean."""

    mu: float
    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0.0, f"sigma must be positive, got {self.sigma}")
        _require(math.isfinite(self.mu), f"mu must be finite, got {self.mu}")


@dataclass(frozen=True)
class Gamma:
    """Gamma with known shape ``k``; the unknown parameter is the scale ``theta``."""

    k: float
    theta: float

    def __post_init__(self):
        _require(self.k > 0.0, f"shape must be positive, got {self.k}")
        _require(self.theta > 0.0, f"scale must be positive, got {self.theta}")


@dataclass(frozen=True)
class StudentT:
    n: int

    def __post_init__(self):
        object.__setattr__(self, "n", _as_int(self.n, "degrees of freedom"))
        _require(self.n >= 1, f"degrees of freedom must be >= 1, got {self.n}")


@dataclass(frozen=True)
class FDist:
    m: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "m", _as_int(self.m, "m"))
        object.__setattr__(self, "n", _as_int(self.n, "n"))
        _require(self.m >= 1 and self.n >= 1, f"degrees of freedom must be >= 1")


DistributionSpec = Union[
    Bernoulli,
    NegBinomial,
    Poisson,
    Hypergeometric,
    WaitingTime,
    Normal,
    Gamma,
    StudentT,
    FDist,
]


def _log_choose(n: float, k: float) -> float:
    """log C(n, k); -inf when k is outside 0..n."""
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


def _check_integer_point(x, lo: int, hi: int | None, what: str) -> int:
    xi = round(x)
    if abs(x - xi) > 1e-9:
        raise DomainError(f"{what} must be an integer point, got {x}")
    if xi < lo or (hi is not None and xi > hi):
        raise DomainError(f"{what}={xi} outside support")
    return int(xi)


def log_density(spec: DistributionSpec, x) -> float:
    """Natural-log mass or density of ``spec`` at the support point ``x``."""
    if isinstance(spec, Bernoulli):
        xi = _check_integer_point(x, 0, 1, "Bernoulli outcome")
        return xi * math.log(spec.p) + (1 - xi) * math.log1p(-spec.p)
    if isinstance(spec, NegBinomial):
        xi = _check_integer_point(x, 0, None, "failure count")
        return (
            math.lgamma(xi + spec.r)
            - math.lgamma(xi + 1.0)
            - math.lgamma(spec.r)
            + xi * math.log1p(-spec.p)
            + spec.r * math.log(spec.p)
        )
    if isinstance(spec, Poisson):
        xi = _check_integer_point(x, 0, None, "count")
        return -spec.lam + xi * math.log(spec.lam) - math.lgamma(xi + 1.0)
    if isinstance(spec, Hypergeometric):
        k_lo = max(0, spec.n - (spec.N - spec.M))
        k_hi = min(spec.n, spec.M)
        xi = _check_integer_point(x, k_lo, k_hi, "marked-draw count")
        return (
            _log_choose(spec.M, xi)
            + _log_choose(spec.N - spec.M, spec.n - xi)
            - _log_choose(spec.N, spec.n)
        )
    if isinstance(spec, WaitingTime):
        xi = _check_integer_point(x, spec.r, spec.N, "stopping count")
        return (
            _log_choose(xi - 1, spec.r - 1)
            + _log_choose(spec.N - xi, spec.M - spec.r)
            - _log_choose(spec.N, spec.M)
        )
    if isinstance(spec, Normal):
        u = (x - spec.mu) / spec.sigma
        return -0.5 * math.log(2.0 * math.pi) - math.log(spec.sigma) - 0.5 * u * u
    if isinstance(spec, Gamma):
        if x <= 0:
            raise DomainError(f"gamma support is (0, inf), got {x}")
        return (
            (spec.k - 1.0) * math.log(x)
            - math.lgamma(spec.k)
            - spec.k * math.log(spec.theta)
            - x / spec.theta
        )
    if isinstance(spec, StudentT):
        n = spec.n
        return (
            math.lgamma((n + 1) / 2.0)
            - math.lgamma(n / 2.0)
            - 0.5 * math.log(n * math.pi)
            - ((n + 1) / 2.0) * math.log1p(x * x / n)
        )
    if isinstance(spec, FDist):
        if x <= 0:
            raise DomainError(f"F support is (0, inf), got {x}")
        m, n = spec.m, spec.n
        return (
            math.lgamma((m + n) / 2.0)
            - math.lgamma(m / 2.0)
            - math.lgamma(n / 2.0)
            + (m / 2.0) * (math.log(m) - math.log(n))
            + (m / 2.0 - 1.0) * math.log(x)
            - ((m + n) / 2.0) * math.log1p(m * x / n)
        )
    raise UnsupportedFamilyError(f"unknown spec {spec!r}")


def is_discrete(spec: DistributionSpec) -> bool:
    return isinstance(
        spec, (Bernoulli, NegBinomial, Poisson, Hypergeometric, WaitingTime)
    )


def discrete_support(spec: DistributionSpec) -> tuple[int, int | None]:
    """(lo, hi) of the integer support; hi is None when unbounded above."""
    if isinstance(spec, Bernoulli):
        return 0, 1
    if isinstance(spec, (NegBinomial, Poisson)):
        return 0, None
    if isinstance(spec, Hypergeometric):
        return max(0, spec.n - (spec.N - spec.M)), min(spec.n, spec.M)
    if isinstance(spec, WaitingTime):
        return spec.r, spec.N
    raise UnsupportedFamilyError(f"{type(spec).__name__} is not discrete")


# ---------------------------------------------------------------------------
# exponential-family decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpFamilyModel:
    """Evaluable pieces of a single-parameter exponential family.

    ``eta`` must be strictly increasing on the open ``theta_domain``; when
    ``mean_identity`` is claimed, ``A'(theta) = theta * eta'(theta)`` holds,
    which makes the scaled statistic mean an unbiased MLE of ``theta``.
    ``t_moments(theta, order)`` returns the central absolute moment
    ``E|T(X) - theta|^order`` at that parameter for order in {2, 3, 4},
    or None when no closed form is shipped.  ``cumulant(theta, t)`` is
    ``log E[exp(t T(X))]`` (+inf where the transform diverges).
    """

    family: str
    eta: Callable[[float], float]
    big_a: Callable[[float], float]
    t_of: Callable[[float], float]
    theta_domain: tuple[float, float]
    cumulant: Callable[[float, float], float]
    t_moments: Callable[[float, int], float | None] | None = None
    mean_identity: bool = True
    params: dict = field(default_factory=dict)
    validated: bool = field(default=False, compare=False)

    def contains(self, theta: float) -> bool:
        lo, hi = self.theta_domain
        return lo < theta < hi


def _validation_grid(domain: tuple[float, float], points: int = 50) -> np.ndarray:
    lo, hi = domain
    if math.isinf(lo) and math.isinf(hi):
        return np.linspace(-5.0, 5.0, points)
    if math.isinf(hi):
        return lo + np.logspace(-2, 2, points)
    return np.linspace(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo), points)


def _central_diff(f, x: float, h: float) -> float:
    # five-point stencil: fourth-order truncation keeps the 1e-8 identity
    # tolerance honest even near domain edges
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h)


def validate_exp_family(model: ExpFamilyModel, rel_tol: float = 1e-8) -> ExpFamilyModel:
    """Grid-check the increasing-eta requirement and the mean identity."""
    for theta in _validation_grid(model.theta_domain):
        h = 1e-5 * max(1.0, abs(theta))
        d_eta = _central_diff(model.eta, theta, h)
        if not d_eta > 0.0:
            raise DomainError(
                f"{model.family}: eta is not increasing at theta={theta:g}"
            )
        if model.mean_identity:
            d_a = _central_diff(model.big_a, theta, h)
            gap = abs(d_a - theta * d_eta)
            scale = max(1.0, abs(d_a), abs(theta * d_eta))
            if gap > rel_tol * scale:
                raise DomainError(
                    f"{model.family}: mean identity fails at theta={theta:g} "
                    f"(gap {gap:.3e})"
                )
    object.__setattr__(model, "validated", True)
    return model


def _bernoulli_moments(theta: float, order: int) -> float | None:
    v = theta * (1.0 - theta)
    if order == 2:
        return v
    if order == 3:
        return v * (theta**2 + (1.0 - theta) ** 2)
    if order == 4:
        return v * (theta**3 + (1.0 - theta) ** 3)
    return None


def _poisson_moments(theta: float, order: int) -> float | None:
    if order == 2:
        return theta
    if order == 4:
        return theta * (3.0 * theta**3 + 8.0 * theta**2 + 3.0 * theta + 1.0)
    return None


def _normal_moments(_theta: float, order: int) -> float | None:
    if order == 2:
        return 1.0
    if order == 3:
        return 2.0 * math.sqrt(2.0 / math.pi)
    if order == 4:
        return 3.0
    return None


def exp_family_of(spec: DistributionSpec) -> ExpFamilyModel:
    """Decompose one of the five exponential families; the statistic is the
    per-sample mean of T(X) and its threshold lives on the theta scale."""
    if isinstance(spec, Bernoulli):
        model = ExpFamilyModel(
            family="bernoulli",
            eta=lambda th: math.log(th) - math.log1p(-th),
            big_a=lambda th: -math.log1p(-th),
            t_of=lambda x: float(x),
            theta_domain=(0.0, 1.0),
            cumulant=lambda th, t: float(np.logaddexp(math.log1p(-th), math.log(th) + t)),
            t_moments=_bernoulli_moments,
        )
    elif isinstance(spec, NegBinomial):
        r = spec.r

        def _nb_cumulant(th: float, t: float) -> float:
            # defined for t < -eta(theta); the transform diverges beyond
            q = 1.0 - 1.0 / th
            arg = 1.0 - q * math.exp(t / r)
            if arg <= 0.0:
                return math.inf
            return t + r * (-math.log(th) - math.log(arg))

        model = ExpFamilyModel(
            family="negbinomial",
            eta=lambda th: r * (math.log(th - 1.0) - math.log(th)),
            big_a=lambda th: r * math.log(th - 1.0),
            t_of=lambda x: (r + x) / r,
            theta_domain=(1.0, math.inf),
            cumulant=_nb_cumulant,
            t_moments=None,
            params={"r": r},
        )
    elif isinstance(spec, Poisson):
        model = ExpFamilyModel(
            family="poisson",
            eta=math.log,
            big_a=lambda th: th,
            t_of=lambda x: float(x),
            theta_domain=(0.0, math.inf),
            cumulant=lambda th, t: th * math.expm1(t),
            t_moments=_poisson_moments,
        )
    elif isinstance(spec, Normal):
        sigma = spec.sigma
        model = ExpFamilyModel(
            family="normal",
            eta=lambda th: th,
            big_a=lambda th: 0.5 * th * th,
            t_of=lambda x: x / sigma,
            theta_domain=(-math.inf, math.inf),
            cumulant=lambda th, t: th * t + 0.5 * t * t,
            t_moments=_normal_moments,
            params={"sigma": sigma},
        )
    elif isinstance(spec, Gamma):
        k = spec.k

        def _gamma_cumulant(th: float, t: float) -> float:
            arg = 1.0 - t * th / k
            if arg <= 0.0:
                return math.inf
            return -k * math.log(arg)

        def _gamma_moments(th: float, order: int) -> float | None:
            if order == 2:
                return th * th / k
            if order == 4:
                return 3.0 * (k + 2.0) * th**4 / k**3
            return None

        model = ExpFamilyModel(
            family="gamma",
            eta=lambda th: -k / th,
            big_a=lambda th: k * math.log(th),
            t_of=lambda x: x / k,
            theta_domain=(0.0, math.inf),
            cumulant=_gamma_cumulant,
            t_moments=_gamma_moments,
            params={"k": k},
        )
    else:
        raise UnsupportedFamilyError(
            f"{type(spec).__name__} has no exponential-family decomposition; "
            "its tails are bounded by direct likelihood ratios"
        )
    return validate_exp_family(model)


def exp_family_theta(spec: DistributionSpec) -> float:
    """The model-scale parameter value of a concrete spec."""
    if isinstance(spec, Bernoulli):
        return spec.p
    if isinstance(spec, NegBinomial):
        return 1.0 / spec.p
    if isinstance(spec, Poisson):
        return spec.lam
    if isinstance(spec, Normal):
        return spec.mu / spec.sigma
    if isinstance(spec, Gamma):
        return spec.theta
    raise UnsupportedFamilyError(f"{type(spec).__name__} has no theta-scale parameter")


def statistic_mean(spec: DistributionSpec) -> float:
    """Expected value of the statistic a TailQuery thresholds.

    This anchors the side/threshold precondition: upper-tail thresholds must
    sit at or above it, lower-tail ones at or below.  StudentT and FDist use
    the pivot value 1.
    """
    if isinstance(spec, Bernoulli):
        return spec.p
    if isinstance(spec, NegBinomial):
        return 1.0 / spec.p
    if isinstance(spec, Poisson):
        return spec.lam
    if isinstance(spec, Normal):
        return spec.mu
    if isinstance(spec, Gamma):
        return spec.theta
    if isinstance(spec, Hypergeometric):
        return spec.n * spec.M / spec.N
    if isinstance(spec, WaitingTime):
        return spec.r * (spec.N + 1) / (spec.M + 1)
    if isinstance(spec, (StudentT, FDist)):
        return 1.0
    raise UnsupportedFamilyError(f"unknown spec {spec!r}")
