"""Likelihood-ratio tail bounds.

The central object is the factor

    M(z, theta) = [exp(eta(theta) z - A(theta)) / exp(eta(z) z - A(z))]^n,

which upper-bounds the probability that the scaled statistic mean lands at
or beyond a threshold ``z`` on the far side of ``theta``.  For the five
exponential families the factor coincides with the numerically minimized
moment-transform bound (``chernoff_numeric``), and for Bernoulli, Poisson
and Gamma it sharpens to ``(1/2 + delta) * M`` with a Berry-Esseen
``delta``.  The remaining four families use direct density-ratio factors.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln, xlogy

from .constants import C_BE_DEFAULT
from .distributions import (
    Bernoulli,
    DistributionSpec,
    ExpFamilyModel,
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
    statistic_mean,
)
from .errors import (
    BracketError,
    DomainError,
    PreconditionError,
    SingularityError,
)

__all__ = [
    "Side",
    "TailQuery",
    "BoundReport",
    "m_factor_expfam",
    "m_factor_generic",
    "log_m_limit",
    "be_delta",
    "tail_bound",
    "chernoff_numeric",
    "mle_marked_units",
]


class Side(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class TailQuery:
    """One tail probability Pr{statistic >=/<= z | spec} for n iid samples.

    ``n`` must be 1 for StudentT, FDist, Hypergeometric and WaitingTime
    (their statistics are single-draw).  ``inverse`` switches a Bernoulli
    query to sampling-until-``n``-successes mode, where the statistic is
    successes over trials and ``n`` plays the role of the success target.
    """

    spec: DistributionSpec
    n: int
    z: float
    side: Side
    inverse: bool = False

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise DomainError(f"sample count must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if isinstance(self.side, str):
            object.__setattr__(self, "side", Side(self.side))
        if self.inverse and not isinstance(self.spec, Bernoulli):
            raise DomainError("inverse sampling mode applies to Bernoulli only")
        if isinstance(self.spec, (StudentT, FDist, Hypergeometric, WaitingTime)):
            if self.n != 1:
                raise DomainError(
                    f"{type(self.spec).__name__} queries are single-statistic; n must be 1"
                )
        self._check_range()
        anchor = statistic_mean(self.spec)
        if self.side is Side.UPPER and self.z < anchor:
            raise PreconditionError(
                f"upper-tail threshold z={self.z} is below the statistic mean {anchor:g}"
            )
        if self.side is Side.LOWER and self.z > anchor:
            raise PreconditionError(
                f"lower-tail threshold z={self.z} is above the statistic mean {anchor:g}"
            )

    def _check_range(self):
        z, spec = self.z, self.spec
        if isinstance(spec, Bernoulli):
            if self.inverse:
                if not (0.0 < z <= 1.0):
                    raise DomainError(f"success-ratio threshold must be in (0,1], got {z}")
            elif not (0.0 <= z <= 1.0):
                raise DomainError(f"proportion threshold must be in [0,1], got {z}")
        elif isinstance(spec, NegBinomial):
            if z < 1.0:
                raise DomainError(f"scaled-count threshold must be >= 1, got {z}")
        elif isinstance(spec, (Poisson, Gamma)):
            if z < 0.0:
                raise DomainError(f"threshold must be >= 0, got {z}")
        elif isinstance(spec, Hypergeometric):
            if not (0 <= z <= spec.n):
                raise DomainError(f"count threshold must be in 0..{spec.n}, got {z}")
        elif isinstance(spec, WaitingTime):
            if not (spec.r <= z <= spec.N):
                raise DomainError(
                    f"stopping threshold must be in {spec.r}..{spec.N}, got {z}"
                )
        elif isinstance(spec, StudentT):
            if z < 0.0:
                raise DomainError(f"|X| threshold must be >= 0, got {z}")
        elif isinstance(spec, FDist):
            if z <= 0.0:
                raise DomainError(f"threshold must be positive, got {z}")


@dataclass(frozen=True)
class BoundReport:
    """A tail bound with its factor decomposition.

    When ``refined`` the bound equals ``(1/2 + delta) * m_factor`` exactly;
    otherwise it is ``min(1, m_factor)`` with any clamping noted.
    """

    bound: float
    m_factor: float
    delta: float | None
    c_be: float | None
    refined: bool
    notes: tuple[str, ...] = ()


def m_factor_expfam(model: ExpFamilyModel, z: float, theta: float, n: int) -> float:
    """exp(n [eta(theta) z - A(theta) - eta(z) z + A(z)]) for z, theta in the
    open parameter domain."""
    if not model.contains(z):
        raise DomainError(f"threshold {z} outside parameter domain {model.theta_domain}")
    if not model.contains(theta):
        raise DomainError(f"theta {theta} outside parameter domain {model.theta_domain}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    exponent = n * (
        model.eta(theta) * z - model.big_a(theta) - model.eta(z) * z + model.big_a(z)
    )
    return math.exp(exponent)


def m_factor_generic(log_g, z: float, theta: float) -> float:
    """g(z, theta) / g(z, z) for a statistic-parameter density kernel given in
    log form; the anchored version of the likelihood-ratio factor."""
    return math.exp(log_g(z, theta) - log_g(z, z))


def log_m_limit(model: ExpFamilyModel, z, theta: float, n: int):
    """Vectorized log M(z, theta) with the statistic-range boundary limits.

    Accepts ``z`` at the closure of the parameter domain where the statistic
    can actually land (Bernoulli 0 and 1, Poisson and Gamma 0, NegBinomial 1),
    using the exact limits of the exponent there.
    """
    z_arr = np.asarray(z, dtype=float)
    fam = model.family
    if fam == "bernoulli":
        out = n * (
            xlogy(z_arr, theta)
            - xlogy(z_arr, z_arr)
            + xlogy(1.0 - z_arr, 1.0 - theta)
            - xlogy(1.0 - z_arr, 1.0 - z_arr)
        )
    elif fam == "poisson":
        out = n * (xlogy(z_arr, theta) - xlogy(z_arr, z_arr) - theta + z_arr)
    elif fam == "normal":
        out = -0.5 * n * (z_arr - theta) ** 2
    elif fam == "gamma":
        k = model.params["k"]
        with np.errstate(divide="ignore"):
            out = n * k * (1.0 - z_arr / theta + np.log(z_arr / theta))
    elif fam == "negbinomial":
        r = model.params["r"]
        at_one = z_arr == 1.0
        zs = np.where(at_one, 2.0, z_arr)
        base = (
            z_arr * (math.log(theta - 1.0) - math.log(theta))
            - math.log(theta - 1.0)
            - (zs * (np.log(zs - 1.0) - np.log(zs)) - np.log(zs - 1.0))
        )
        out = n * r * np.where(at_one, -math.log(theta), base)
    else:
        raise DomainError(f"no vectorized factor for family {fam!r}")
    if np.isscalar(z) or z_arr.ndim == 0:
        return float(out)
    return out


def be_delta(
    spec: DistributionSpec,
    z: float,
    n_or_gamma: int,
    *,
    inverse: bool = False,
    c_be: float | None = None,
) -> float | None:
    """Berry-Esseen correction delta in [0, 1/2], or None when the family has
    no shipped refinement (the bound then stays at the plain factor)."""
    c = C_BE_DEFAULT if c_be is None else c_be
    n = n_or_gamma
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    if isinstance(spec, Bernoulli):
        if inverse:
            if not (0.0 < z <= 1.0):
                raise DomainError(f"need z in (0,1], got {z}")
            denom = math.sqrt(n * (1.0 - z))
        else:
            if not (0.0 <= z <= 1.0):
                raise DomainError(f"need z in [0,1], got {z}")
            denom = math.sqrt(n * z * (1.0 - z))
        if denom == 0.0:
            return 0.5
        return min(0.5, c * (z * z + (1.0 - z) ** 2) / denom)
    if isinstance(spec, Poisson):
        if z < 0.0:
            raise DomainError(f"need z >= 0, got {z}")
        if z == 0.0:
            return 0.5
        ratio = (3.0 * z * z + 8.0 * z + 3.0 + 1.0 / z) ** 0.75
        return min(0.5, c * ratio / math.sqrt(n))
    if isinstance(spec, Gamma):
        ratio = (3.0 + 6.0 / spec.k) ** 0.75
        return min(0.5, c * ratio / math.sqrt(n))
    return None


def mle_marked_units(N: int, draws: int, k: int) -> int:
    """Marked-unit count maximizing C(m, k) C(N - m, draws - k), ties broken
    toward the smaller count; clamped to k..N."""
    c = k * (N + 1) / draws
    m = int(c) - 1 if float(c).is_integer() else math.floor(c)
    return min(N, max(k, m))


def _log_ratio_lik(N: int, draws: int, k: int, m) -> float:
    """log [C(m, k) C(N - m, draws - k)] via log-gamma; -inf off support."""
    m = np.asarray(m, dtype=float)
    with np.errstate(invalid="ignore"):
        val = (
            gammaln(m + 1.0)
            - gammaln(k + 1.0)
            - gammaln(m - k + 1.0)
            + gammaln(N - m + 1.0)
            - gammaln(draws - k + 1.0)
            - gammaln(N - m - draws + k + 1.0)
        )
    ok = (m >= k) & (N - m >= draws - k)
    return np.where(ok, val, -np.inf)


def _snap_integer(z: float, what: str) -> int:
    zi = round(z)
    if abs(z - zi) > 1e-9:
        raise DomainError(f"{what} must be an integer threshold, got {z}")
    return int(zi)


def _plain_report(m_factor: float, notes: tuple[str, ...]) -> BoundReport:
    bound = min(1.0, m_factor)
    if m_factor > 1.0:
        notes = notes + ("bound clamped at 1 (vacuous)",)
    return BoundReport(
        bound=bound, m_factor=m_factor, delta=None, c_be=None, refined=False, notes=notes
    )


def _refined_report(
    m_factor: float, delta: float, c_be: float, notes: tuple[str, ...]
) -> BoundReport:
    return BoundReport(
        bound=(0.5 + delta) * m_factor,
        m_factor=m_factor,
        delta=delta,
        c_be=c_be,
        refined=True,
        notes=notes,
    )


def tail_bound(
    query: TailQuery, *, m_hat: int | None = None, c_be: float | None = None
) -> BoundReport:
    """Dispatch the per-family tail bound for a validated query.

    ``m_hat`` overrides the reference marked-unit count for Hypergeometric
    and WaitingTime queries (default: the clamped maximum-likelihood count,
    which gives the tightest ratio).
    """
    spec, n, z, side = query.spec, query.n, query.z, query.side
    c = C_BE_DEFAULT if c_be is None else c_be

    if isinstance(spec, Bernoulli):
        model = exp_family_of(spec)
        if query.inverse:
            # success target n, statistic n/trials; the factor exponent scales
            # by target/z instead of a fixed sample count
            exponent = (n / z) * log_m_limit(model, z, spec.p, 1)
            notes = ("inverse sampling mode: statistic is successes/trials",)
            if abs((n / z) - round(n / z)) > 1e-9:
                notes = notes + (
                    "target/z is not an integer; stated guarantee assumes it is",
                )
            delta = be_delta(spec, z, n, inverse=True, c_be=c)
            return _refined_report(math.exp(exponent), delta, c, notes)
        m = math.exp(log_m_limit(model, z, spec.p, n))
        delta = be_delta(spec, z, n, c_be=c)
        return _refined_report(m, delta, c, ())

    if isinstance(spec, NegBinomial):
        if z == 1.0:
            raise SingularityError(
                "the negative-binomial factor is singular at z=1; use a "
                "threshold strictly above 1 (the statistic exceeds 1 whenever "
                "any failure occurs)"
            )
        model = exp_family_of(spec)
        theta = exp_family_theta(spec)
        m = math.exp(log_m_limit(model, z, theta, n))
        notes = ("sides follow z >= theta (upper) and 1 < z <= theta (lower)",)
        return _plain_report(m, notes)

    if isinstance(spec, Poisson):
        model = exp_family_of(spec)
        m = math.exp(log_m_limit(model, z, spec.lam, n))
        delta = be_delta(spec, z, n, c_be=c)
        return _refined_report(m, delta, c, ())

    if isinstance(spec, Normal):
        u = (z - spec.mu) / spec.sigma
        m = math.exp(-0.5 * n * u * u)
        # the half factor is exact for the symmetric continuous statistic;
        # no Berry-Esseen term enters
        return _refined_report(m, 0.0, c, ("exact 1/2 factor; no BE term",))

    if isinstance(spec, Gamma):
        model = exp_family_of(spec)
        m = math.exp(log_m_limit(model, z, spec.theta, n))
        delta = be_delta(spec, z, n, c_be=c)
        return _refined_report(m, delta, c, ())

    if isinstance(spec, Hypergeometric):
        k = _snap_integer(z, "marked-draw count")
        return _finite_ratio_report(
            N=spec.N,
            draws=spec.n,
            stat=k,
            true_m=spec.M,
            m_hat=m_hat,
            big_mhat_side=(side is Side.UPPER),
        )

    if isinstance(spec, WaitingTime):
        t = _snap_integer(z, "stopping count")
        # stopping early (lower tail) is evidence of MANY marked units, so the
        # reference count sits above the truth there, and below it for the
        # upper tail
        return _finite_ratio_report(
            N=spec.N,
            draws=t,
            stat=spec.r,
            true_m=spec.M,
            m_hat=m_hat,
            big_mhat_side=(side is Side.LOWER),
        )

    if isinstance(spec, StudentT):
        df = spec.n
        log_m = math.log(z) + ((df + 1) / 2.0) * (
            math.log(df + 1.0) - math.log(df + z * z)
        ) if z > 0.0 else -math.inf
        return _plain_report(math.exp(log_m), ())

    if isinstance(spec, FDist):
        dm, dn = spec.m, spec.n
        log_m = (dm / 2.0) * math.log(z) + ((dm + dn) / 2.0) * (
            math.log(dn + dm) - math.log(dn + dm * z)
        )
        return _plain_report(math.exp(log_m), ())

    raise DomainError(f"unknown spec {spec!r}")


def _finite_ratio_report(
    N: int, draws: int, stat: int, true_m: int, m_hat: int | None, big_mhat_side: bool
) -> BoundReport:
    """Ratio bound C(M,s)C(N-M,d-s) / (C(Mh,s)C(N-Mh,d-s)) for the two
    finite-population families; Mh must sit at or beyond the true count on
    the side the tail direction requires."""
    if m_hat is not None:
        m_hat = int(m_hat)
        if not (stat <= m_hat <= N):
            raise PreconditionError(
                f"reference count must be in {stat}..{N}, got {m_hat}"
            )
        if big_mhat_side and m_hat < true_m:
            raise PreconditionError(
                f"this tail direction needs a reference count >= {true_m}, got {m_hat}"
            )
        if not big_mhat_side and m_hat > true_m:
            raise PreconditionError(
                f"this tail direction needs a reference count <= {true_m}, got {m_hat}"
            )
        chosen = m_hat
        notes = (f"caller-supplied reference count {m_hat}",)
    else:
        mle = mle_marked_units(N, draws, stat)
        chosen = max(mle, true_m) if big_mhat_side else min(mle, true_m)
        if chosen < stat:
            # no admissible reference count; the ratio gives nothing
            return _plain_report(math.inf, ("no admissible reference count",))
        notes = (f"reference count {chosen} (max-likelihood, side-clamped)",)
    log_num = float(_log_ratio_lik(N, draws, stat, true_m))
    log_den = float(_log_ratio_lik(N, draws, stat, chosen))
    if log_num == -math.inf:
        return BoundReport(
            bound=0.0,
            m_factor=0.0,
            delta=None,
            c_be=None,
            refined=False,
            notes=notes + ("threshold outside the true-count support; tail is empty",),
        )
    if log_den == -math.inf:
        return _plain_report(math.inf, notes + ("reference likelihood vanishes",))
    return _plain_report(math.exp(log_num - log_den), notes)


# ---------------------------------------------------------------------------
# numeric moment-transform minimization
# ---------------------------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(g, lo: float, hi: float, iters: int = 400):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(iters):
        if (b - a) <= 1e-13 * max(1.0, abs(a), abs(b)):
            break
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - _INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INVPHI * (b - a)
            gd = g(d)
    t = 0.5 * (a + b)
    return t, g(t)


def _finite_toward_zero(g, t: float) -> float:
    for _ in range(300):
        if math.isfinite(g(t)):
            return t
        t *= 0.5
    raise BracketError("objective is not finite anywhere on the search ray")


def _expand_side(g, inner: float, outer: float) -> float:
    """Push ``outer`` away from ``inner`` while the objective still decreases
    there, creeping up to any divergence point of the transform."""
    for _ in range(200):
        probe = outer - 1e-6 * (outer - inner)
        if not g(outer) < g(probe):
            return outer
        candidate = outer + (outer - inner)
        for _ in range(80):
            if math.isfinite(g(candidate)):
                break
            candidate = outer + 0.5 * (candidate - outer)
        else:
            raise BracketError("bracket expansion ran into a divergent transform")
        if abs(candidate - outer) <= 1e-12 * max(1.0, abs(outer)):
            raise BracketError(
                "minimum sits at the divergence edge of the moment transform"
            )
        outer = candidate
    raise BracketError("bracket expansion did not settle")


def _log_chernoff(model: ExpFamilyModel, z: float, theta: float, n: int) -> float:
    def g(t: float) -> float:
        return model.cumulant(theta, t) - t * z

    hi = _finite_toward_zero(g, 1.0)
    lo = _finite_toward_zero(g, -1.0)
    hi = _expand_side(g, lo, hi)
    lo = _expand_side(g, hi, lo)
    _, gmin = _golden_min(g, lo, hi)
    # t = 0 is always admissible, so the infimum never exceeds 0
    return n * min(gmin, 0.0)


def chernoff_numeric(model: ExpFamilyModel, z: float, theta: float, n: int) -> float:
    """Numerically minimized E[exp(n t (statistic - z))] over real t.

    Golden-section search on the closed-form per-sample cumulant; agrees with
    ``m_factor_expfam`` to high relative accuracy and serves as its
    independent check.
    """
    if not model.contains(z):
        raise DomainError(f"threshold {z} outside parameter domain {model.theta_domain}")
    if not model.contains(theta):
        raise DomainError(f"theta {theta} outside parameter domain {model.theta_domain}")
    return math.exp(_log_chernoff(model, z, theta, n))
