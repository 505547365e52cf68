"""Ground-truth tail probabilities and coverage numbers.

Discrete statistics reduce to named sums (binomial, Poisson, negative
binomial, hypergeometric) evaluated by the log-space kernels; continuous
ones are integrated by adaptive quadrature of the exact density; the
distribution of the likelihood-ratio statistic is estimated by seeded,
counter-based Monte Carlo (Philox).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels
from .distributions import (
    Bernoulli,
    DistributionSpec,
    FDist,
    Gamma,
    Hypergeometric,
    NegBinomial,
    Normal,
    Poisson,
    StudentT,
    WaitingTime,
    exp_family_of,
    exp_family_theta,
    log_density,
)
from .errors import (
    CapacityError,
    DomainError,
    PreconditionError,
    UnsupportedFamilyError,
)
from .lr_bounds import Side, TailQuery, log_m_limit

__all__ = [
    "OracleResult",
    "LrTailEstimates",
    "exact_tail",
    "mc_lr_tail",
    "coverage_exact",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 42

_MAX_EXACT_TERMS = 10_000_000


@dataclass(frozen=True)
class OracleResult:
    """A probability with an absolute numerical error estimate.

    method is one of "exact-sum", "quadrature", "monte-carlo"; seed is set
    only for Monte Carlo results.
    """

    value: float
    error_bound: float
    method: str
    seed: int | None = None


def _exact(value: float, residual: float, n_terms: int) -> OracleResult:
    return OracleResult(
        value=float(value),
        error_bound=float(residual) + 5e-16 * max(1, n_terms),
        method="exact-sum",
    )


def _ceil_snap(x: float) -> int:
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def _floor_snap(x: float) -> int:
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.floor(x))


def _quad_tail(pdf, lo: float, hi: float) -> OracleResult:
    value, err = quad(pdf, lo, hi, epsabs=1e-10, epsrel=1e-10, limit=200)
    return OracleResult(value=float(value), error_bound=float(err), method="quadrature")


def _guard_terms(estimate: float) -> None:
    if estimate > _MAX_EXACT_TERMS:
        raise CapacityError(
            f"exact summation would need ~{estimate:.3g} terms; use Monte Carlo"
        )


def exact_tail(query: TailQuery) -> OracleResult:
    """Pr{statistic >=/<= z | spec} for the query, by exact summation where
    the summed statistic has a named distribution, else by quadrature."""
    spec, n, z, upper = query.spec, query.n, query.z, query.side is Side.UPPER

    if isinstance(spec, Bernoulli) and query.inverse:
        # trials T until the n-th success: {n/T >= z} = {T <= n/z}, and the
        # failure count T - n is negative binomial
        target = n
        if upper:
            m = _floor_snap(target / z) - target
            if m < 0:
                return _exact(0.0, 0.0, 1)
            value, residual = kernels.negbinom_tail(float(target), spec.p, m, False)
            return _exact(value, residual, m + 1)
        m = _ceil_snap(target / z) - target
        if m <= 0:
            return _exact(1.0, 0.0, 1)
        _guard_terms(target * (1 - spec.p) / spec.p + 60 * math.sqrt(target) / spec.p + m)
        value, residual = kernels.negbinom_tail(float(target), spec.p, m, True)
        return _exact(value, residual, m + 1)

    if isinstance(spec, Bernoulli):
        _guard_terms(n + 1)
        _, cdf, sf = kernels.binom_tables(n, spec.p)
        if upper:
            k0 = _ceil_snap(n * z)
            if k0 <= 0:
                return _exact(1.0, 0.0, 1)
            if k0 > n:
                return _exact(0.0, 0.0, 1)
            return _exact(sf[k0], 0.0, n + 1)
        k0 = _floor_snap(n * z)
        if k0 < 0:
            return _exact(0.0, 0.0, 1)
        if k0 >= n:
            return _exact(1.0, 0.0, 1)
        return _exact(cdf[k0], 0.0, n + 1)

    if isinstance(spec, NegBinomial):
        # sum of n failure counts is negative binomial with n*r successes;
        # the scaled-count threshold z maps to s total failures
        nr = n * spec.r
        s = nr * (z - 1.0)
        mean_failures = nr * (1 - spec.p) / spec.p
        if upper:
            m = _ceil_snap(s)
            if m <= 0:
                return _exact(1.0, 0.0, 1)
            _guard_terms(mean_failures + 60 * math.sqrt(max(1.0, mean_failures)) + m)
            value, residual = kernels.negbinom_tail(nr, spec.p, m, True)
            return _exact(value, residual, m + 1)
        m = _floor_snap(s)
        if m < 0:
            return _exact(0.0, 0.0, 1)
        _guard_terms(m + 1)
        value, residual = kernels.negbinom_tail(nr, spec.p, m, False)
        return _exact(value, residual, m + 1)

    if isinstance(spec, Poisson):
        mu = n * spec.lam
        if upper:
            k0 = _ceil_snap(n * z)
            if k0 <= 0:
                return _exact(1.0, 0.0, 1)
            _guard_terms(mu + 60 * math.sqrt(max(1.0, mu)) + k0)
            value, residual = kernels.poisson_tail(mu, k0, True)
            return _exact(value, residual, k0 + 1)
        k0 = _floor_snap(n * z)
        if k0 < 0:
            return _exact(0.0, 0.0, 1)
        _guard_terms(k0 + 1)
        value, residual = kernels.poisson_tail(mu, k0, False)
        return _exact(value, residual, k0 + 1)

    if isinstance(spec, Hypergeometric):
        k = _ceil_snap(z) if upper else _floor_snap(z)
        _, cdf, sf = kernels.hypergeom_tables(spec.N, spec.M, spec.n)
        if upper:
            if k <= 0:
                return _exact(1.0, 0.0, 1)
            if k > spec.n:
                return _exact(0.0, 0.0, 1)
            return _exact(sf[k], 0.0, spec.n + 1)
        if k < 0:
            return _exact(0.0, 0.0, 1)
        if k >= spec.n:
            return _exact(1.0, 0.0, 1)
        return _exact(cdf[k], 0.0, spec.n + 1)

    if isinstance(spec, WaitingTime):
        # duality with the fixed-draws count: stopping by draw t means at
        # least r marked units appear among t draws
        t = _ceil_snap(z) if upper else _floor_snap(z)
        if upper:
            if t <= spec.r:
                return _exact(1.0, 0.0, 1)
            _, cdf, _ = kernels.hypergeom_tables(spec.N, spec.M, t - 1)
            j = min(spec.r - 1, t - 1)
            return _exact(cdf[j], 0.0, t)
        if t >= spec.N:
            return _exact(1.0, 0.0, 1)
        if t < spec.r:
            return _exact(0.0, 0.0, 1)
        _, _, sf = kernels.hypergeom_tables(spec.N, spec.M, t)
        return _exact(sf[spec.r], 0.0, t + 1)

    if isinstance(spec, Normal):
        scale = spec.sigma / math.sqrt(n)
        mean_spec = Normal(mu=spec.mu, sigma=scale)

        def pdf(x: float) -> float:
            return math.exp(log_density(mean_spec, x))

        if upper:
            return _quad_tail(pdf, z, math.inf)
        return _quad_tail(pdf, -math.inf, z)

    if isinstance(spec, Gamma):
        # the scaled mean is gamma with shape n*k and scale theta/(n*k)
        shape = n * spec.k
        eff = Gamma(k=shape, theta=spec.theta / shape)

        def pdf(x: float) -> float:
            return math.exp(log_density(eff, x))

        if upper:
            return _quad_tail(pdf, z, math.inf)
        if z <= 0.0:
            return OracleResult(0.0, 0.0, "quadrature")
        return _quad_tail(pdf, 0.0, z)

    if isinstance(spec, StudentT):

        def pdf2(x: float) -> float:
            return 2.0 * math.exp(log_density(spec, x))

        if upper:
            return _quad_tail(pdf2, z, math.inf)
        return _quad_tail(pdf2, 0.0, z)

    if isinstance(spec, FDist):

        def pdf(x: float) -> float:
            return math.exp(log_density(spec, x))

        if upper:
            return _quad_tail(pdf, z, math.inf)
        return _quad_tail(pdf, 0.0, z)

    raise UnsupportedFamilyError(f"no oracle for {spec!r}")


# ---------------------------------------------------------------------------
# Monte Carlo for the likelihood-ratio statistic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LrTailEstimates:
    """Seeded estimates of the three ratio-statistic events at level alpha:
    the two one-sided events gate on the estimator landing at or beyond the
    smallest / largest reference parameter."""

    two_sided: OracleResult
    lower_gated: OracleResult
    upper_gated: OracleResult
    replicates: int
    seed: int


def _sample_estimators(
    spec: DistributionSpec, n: int, replicates: int, rng: np.random.Generator
) -> np.ndarray:
    if isinstance(spec, Bernoulli):
        return rng.binomial(n, spec.p, replicates) / n
    if isinstance(spec, Poisson):
        return rng.poisson(n * spec.lam, replicates) / n
    if isinstance(spec, Gamma):
        shape = n * spec.k
        return rng.gamma(shape, spec.theta, replicates) / shape
    if isinstance(spec, Normal):
        theta = spec.mu / spec.sigma
        return rng.normal(theta, 1.0 / math.sqrt(n), replicates)
    if isinstance(spec, NegBinomial):
        nr = n * spec.r
        return 1.0 + rng.negative_binomial(nr, spec.p, replicates) / nr
    raise UnsupportedFamilyError(
        f"{type(spec).__name__} is outside the exponential-family Monte Carlo"
    )


def mc_lr_tail(
    spec: DistributionSpec,
    n: int,
    alpha: float,
    replicates: int = 100_000,
    seed: int = DEFAULT_SEED,
    theta_set: tuple[float, ...] | None = None,
) -> LrTailEstimates:
    """Estimate Pr{density ratio <= alpha/2} and its estimator-gated halves.

    The ratio compares the sampling parameter (or the best of ``theta_set``)
    against the maximum-likelihood fit; ``theta_set`` must contain the
    spec's own parameter value.  Error bounds are 3 binomial standard errors.
    """
    if replicates < 10_000:
        raise DomainError(f"need at least 1e4 replicates, got {replicates}")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must be in (0,1), got {alpha}")
    theta = exp_family_theta(spec)
    if theta_set is None:
        theta_set = (theta,)
    elif theta not in theta_set:
        raise PreconditionError(
            f"the sampling parameter {theta} must belong to theta_set {theta_set}"
        )
    model = exp_family_of(spec)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    est = _sample_estimators(spec, n, replicates, rng)

    log_ratio = None
    for candidate in theta_set:
        lr = log_m_limit(model, est, candidate, n)
        log_ratio = lr if log_ratio is None else np.maximum(log_ratio, lr)

    threshold = math.log(alpha / 2.0)
    hit = log_ratio <= threshold
    lo_gate = hit & (est <= min(theta_set))
    hi_gate = hit & (est >= max(theta_set))

    def _mc(mask: np.ndarray) -> OracleResult:
        p_hat = float(np.count_nonzero(mask)) / replicates
        se = math.sqrt(p_hat * (1.0 - p_hat) / replicates)
        return OracleResult(
            value=p_hat, error_bound=3.0 * se, method="monte-carlo", seed=int(seed)
        )

    return LrTailEstimates(
        two_sided=_mc(hit),
        lower_gated=_mc(lo_gate),
        upper_gated=_mc(hi_gate),
        replicates=replicates,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# exact coverage sweeps
# ---------------------------------------------------------------------------


def coverage_exact(
    spec,
    n: int,
    eps: float | None = None,
    *,
    intervals: tuple[np.ndarray, np.ndarray] | None = None,
    p_grid: np.ndarray | None = None,
) -> float:
    """Minimum exact coverage over a parameter grid.

    Two event shapes: ``eps`` checks |estimate - p| < eps; ``intervals``
    checks capture by per-observation confidence limits (arrays indexed by
    the observed count).  ``spec`` is the Bernoulli type (or any instance)
    for proportion sweeps, or a Hypergeometric instance whose marked count
    is swept over 0..N (``p_grid`` then holds integer counts).
    """
    if (eps is None) == (intervals is None):
        raise DomainError("pass exactly one of eps / intervals")
    if spec is Bernoulli or isinstance(spec, Bernoulli):
        if p_grid is None:
            raise DomainError("a proportion grid is required")
        grid = np.asarray(p_grid, dtype=float)
        if grid.size == 0 or np.any((grid <= 0) | (grid >= 1)):
            raise DomainError("proportion grid must be non-empty within (0,1)")
        if eps is not None:
            cov = kernels.binom_coverage(n, float(eps), grid)
        else:
            lo, hi = intervals
            cov = kernels.binom_ci_coverage(
                n, np.asarray(lo, float), np.asarray(hi, float), grid
            )
        return float(np.min(cov))
    if isinstance(spec, Hypergeometric):
        if intervals is None:
            raise DomainError("hypergeometric sweeps are interval-capture only")
        lo, hi = intervals
        cov = kernels.hypergeom_ci_coverage(
            spec.N, spec.n, np.asarray(lo, float), np.asarray(hi, float)
        )
        if p_grid is not None:
            idx = np.asarray(p_grid, dtype=int)
            cov = cov[idx]
        return float(np.min(cov))
    raise UnsupportedFamilyError(
        f"coverage sweeps support Bernoulli and Hypergeometric, not {spec!r}"
    )
