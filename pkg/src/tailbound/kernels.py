"""Hot log-space kernels for exact discrete tails and coverage sweeps.

Every kernel exists in two interchangeable implementations: a numba
``@njit`` loop and a pure-numpy vectorized fallback.  The active path is
chosen at import time by the ``TAILBOUND_NUMBA`` environment variable
("0"/"false"/"off"/"no" disables numba); the fallback is also used when
numba is not importable.  ``benchmarks/kernel_bench.py`` times both.

All mass evaluation goes through log-gamma; binomial coefficients are
never formed directly, so population sizes up to 1e6 stay finite.
"""

import math
import os

import numpy as np
from scipy.special import gammaln as _gammaln

__all__ = [
    "USE_NUMBA",
    "binom_tables",
    "binom_coverage",
    "binom_ci_coverage",
    "hypergeom_tables",
    "hypergeom_ci_coverage",
    "poisson_tail",
    "negbinom_tail",
    "implementations",
]

_ENV_FLAG = "TAILBOUND_NUMBA"


def _numba_requested() -> bool:
    flag = os.environ.get(_ENV_FLAG, "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _np_binom_logpmf(n: int, p: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.float64)
    return (
        _gammaln(n + 1.0)
        - _gammaln(k + 1.0)
        - _gammaln(n - k + 1.0)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )


def _np_binom_tables(n: int, p: float):
    """(pmf, cdf, sf) for Binomial(n, p) over k = 0..n.

    sf[k] = Pr{K >= k} is accumulated from the far end so that small tail
    terms are added first.
    """
    pmf = np.exp(_np_binom_logpmf(n, p))
    cdf = np.cumsum(pmf)
    sf = np.cumsum(pmf[::-1])[::-1]
    return pmf, cdf, sf


def _np_binom_coverage(n: int, eps: float, p_grid: np.ndarray) -> np.ndarray:
    """Pr{|K/n - p| < eps} for each p, by strict-window mass summation."""
    out = np.empty(len(p_grid))
    lg_n = _gammaln(n + 1.0)
    for i, p in enumerate(p_grid):
        k_lo = max(0, int(math.floor(n * (p - eps))) + 1)
        k_hi = min(n, int(math.ceil(n * (p + eps))) - 1)
        if k_lo > k_hi:
            out[i] = 0.0
            continue
        k = np.arange(k_lo, k_hi + 1, dtype=np.float64)
        logpmf = (
            lg_n
            - _gammaln(k + 1.0)
            - _gammaln(n - k + 1.0)
            + k * math.log(p)
            + (n - k) * math.log1p(-p)
        )
        out[i] = float(np.sum(np.exp(logpmf)))
    return out


def _np_binom_ci_coverage(
    n: int, lo: np.ndarray, hi: np.ndarray, p_grid: np.ndarray
) -> np.ndarray:
    """Pr{lo[K] <= p <= hi[K]} for each p, K ~ Binomial(n, p)."""
    out = np.empty(len(p_grid))
    for i, p in enumerate(p_grid):
        pmf, _, _ = _np_binom_tables(n, p)
        capture = (lo <= p) & (p <= hi)
        out[i] = float(np.sum(pmf[capture]))
    return out


def _np_hypergeom_logpmf(N: int, M: int, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        logpmf = (
            _gammaln(M + 1.0)
            - _gammaln(k + 1.0)
            - _gammaln(M - k + 1.0)
            + _gammaln(N - M + 1.0)
            - _gammaln(n - k + 1.0)
            - _gammaln(N - M - n + k + 1.0)
            - (_gammaln(N + 1.0) - _gammaln(n + 1.0) - _gammaln(N - n + 1.0))
        )
    k_lo = max(0, n - (N - M))
    k_hi = min(n, M)
    support = (k >= k_lo) & (k <= k_hi)
    return np.where(support, logpmf, -np.inf)


def _np_hypergeom_tables(N: int, M: int, n: int):
    """(pmf, cdf, sf) for the draws-without-replacement count over k = 0..n."""
    pmf = np.exp(_np_hypergeom_logpmf(N, M, n))
    cdf = np.cumsum(pmf)
    sf = np.cumsum(pmf[::-1])[::-1]
    return pmf, cdf, sf


def _np_hypergeom_ci_coverage(
    N: int, n: int, lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Pr{lo[K] <= M <= hi[K]} for each M = 0..N."""
    out = np.empty(N + 1)
    for M in range(N + 1):
        pmf, _, _ = _np_hypergeom_tables(N, M, n)
        capture = (lo <= M) & (M <= hi)
        out[M] = float(np.sum(pmf[capture]))
    return out


def _np_poisson_tail(mu: float, k: int, upper: bool):
    """(tail, truncation residual bound) for a Poisson(mu) count at k."""
    if upper:
        # sum from k outward until the geometric remainder bound is negligible
        j = k
        term = math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1.0)) if k > 0 else math.exp(-mu)
        total = 0.0
        while True:
            total += term
            j += 1
            term *= mu / j
            ratio = mu / (j + 1.0)
            if ratio < 1.0:
                residual = term / (1.0 - ratio)
                if residual <= 1e-18 or residual <= 1e-16 * total:
                    return total, residual
    j_arr = np.arange(k + 1, dtype=np.float64)
    logpmf = -mu + j_arr * math.log(mu) - _gammaln(j_arr + 1.0)
    return float(np.sum(np.exp(logpmf))), 0.0


def _np_negbinom_tail(r: float, p: float, m: int, upper: bool):
    """(tail, residual) for the failure count of a NegBinomial(r, p), r real."""
    log1mp = math.log1p(-p)
    if not upper:
        x = np.arange(m + 1, dtype=np.float64)
        logpmf = (
            _gammaln(x + r) - _gammaln(x + 1.0) - _gammaln(r)
            + r * math.log(p)
            + x * log1mp
        )
        return float(np.sum(np.exp(logpmf))), 0.0
    x = m
    term = math.exp(
        math.lgamma(x + r) - math.lgamma(x + 1.0) - math.lgamma(r)
        + r * math.log(p)
        + x * log1mp
    )
    total = 0.0
    q = 1.0 - p
    while True:
        total += term
        x += 1
        term *= q * (x - 1.0 + r) / x
        ratio = q * max(1.0, (x + r) / (x + 1.0))
        if ratio < 1.0:
            residual = term / (1.0 - ratio)
            if residual <= 1e-18 or residual <= 1e-16 * max(total, 1e-300):
                return total, residual


_NUMPY_IMPLS = {
    "binom_tables": _np_binom_tables,
    "binom_coverage": _np_binom_coverage,
    "binom_ci_coverage": _np_binom_ci_coverage,
    "hypergeom_tables": _np_hypergeom_tables,
    "hypergeom_ci_coverage": _np_hypergeom_ci_coverage,
    "poisson_tail": _np_poisson_tail,
    "negbinom_tail": _np_negbinom_tail,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

_NUMBA_IMPLS = None
USE_NUMBA = False

if _numba_requested():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:

        @njit(cache=True)
        def _nb_binom_tables(n, p):
            logp = math.log(p)
            log1mp = math.log1p(-p)
            lg_n = math.lgamma(n + 1.0)
            pmf = np.empty(n + 1)
            for k in range(n + 1):
                pmf[k] = math.exp(
                    lg_n
                    - math.lgamma(k + 1.0)
                    - math.lgamma(n - k + 1.0)
                    + k * logp
                    + (n - k) * log1mp
                )
            cdf = np.empty(n + 1)
            sf = np.empty(n + 1)
            acc = 0.0
            for k in range(n + 1):
                acc += pmf[k]
                cdf[k] = acc
            acc = 0.0
            for k in range(n, -1, -1):
                acc += pmf[k]
                sf[k] = acc
            return pmf, cdf, sf

        @njit(cache=True)
        def _nb_binom_coverage(n, eps, p_grid):
            out = np.empty(len(p_grid))
            lg_n = math.lgamma(n + 1.0)
            for i in range(len(p_grid)):
                p = p_grid[i]
                logp = math.log(p)
                log1mp = math.log1p(-p)
                k_lo = int(math.floor(n * (p - eps))) + 1
                if k_lo < 0:
                    k_lo = 0
                k_hi = int(math.ceil(n * (p + eps))) - 1
                if k_hi > n:
                    k_hi = n
                total = 0.0
                for k in range(k_lo, k_hi + 1):
                    total += math.exp(
                        lg_n
                        - math.lgamma(k + 1.0)
                        - math.lgamma(n - k + 1.0)
                        + k * logp
                        + (n - k) * log1mp
                    )
                out[i] = total
            return out

        @njit(cache=True)
        def _nb_binom_ci_coverage(n, lo, hi, p_grid):
            out = np.empty(len(p_grid))
            lg_n = math.lgamma(n + 1.0)
            for i in range(len(p_grid)):
                p = p_grid[i]
                logp = math.log(p)
                log1mp = math.log1p(-p)
                total = 0.0
                for k in range(n + 1):
                    if lo[k] <= p <= hi[k]:
                        total += math.exp(
                            lg_n
                            - math.lgamma(k + 1.0)
                            - math.lgamma(n - k + 1.0)
                            + k * logp
                            + (n - k) * log1mp
                        )
                out[i] = total
            return out

        @njit(cache=True)
        def _nb_hypergeom_tables(N, M, n):
            pmf = np.zeros(n + 1)
            lg_choose_Nn = (
                math.lgamma(N + 1.0) - math.lgamma(n + 1.0) - math.lgamma(N - n + 1.0)
            )
            k_lo = n - (N - M)
            if k_lo < 0:
                k_lo = 0
            k_hi = M if M < n else n
            for k in range(k_lo, k_hi + 1):
                pmf[k] = math.exp(
                    math.lgamma(M + 1.0)
                    - math.lgamma(k + 1.0)
                    - math.lgamma(M - k + 1.0)
                    + math.lgamma(N - M + 1.0)
                    - math.lgamma(n - k + 1.0)
                    - math.lgamma(N - M - n + k + 1.0)
                    - lg_choose_Nn
                )
            cdf = np.empty(n + 1)
            sf = np.empty(n + 1)
            acc = 0.0
            for k in range(n + 1):
                acc += pmf[k]
                cdf[k] = acc
            acc = 0.0
            for k in range(n, -1, -1):
                acc += pmf[k]
                sf[k] = acc
            return pmf, cdf, sf

        @njit(cache=True)
        def _nb_hypergeom_ci_coverage(N, n, lo, hi):
            out = np.empty(N + 1)
            for M in range(N + 1):
                pmf, _, _ = _nb_hypergeom_tables(N, M, n)
                total = 0.0
                for k in range(n + 1):
                    if lo[k] <= M <= hi[k]:
                        total += pmf[k]
                out[M] = total
            return out

        @njit(cache=True)
        def _nb_poisson_tail(mu, k, upper):
            if upper:
                term = math.exp(-mu + k * math.log(mu) - math.lgamma(k + 1.0))
                total = 0.0
                j = k
                while True:
                    total += term
                    j += 1
                    term *= mu / j
                    ratio = mu / (j + 1.0)
                    if ratio < 1.0:
                        residual = term / (1.0 - ratio)
                        if residual <= 1e-18 or residual <= 1e-16 * total:
                            return total, residual
            total = 0.0
            term = math.exp(-mu)
            for j in range(k + 1):
                if j > 0:
                    term *= mu / j
                total += term
            return total, 0.0

        @njit(cache=True)
        def _nb_negbinom_tail(r, p, m, upper):
            log1mp = math.log1p(-p)
            lg_r = math.lgamma(r)
            rlogp = r * math.log(p)
            if not upper:
                total = 0.0
                for x in range(m + 1):
                    total += math.exp(
                        math.lgamma(x + r) - math.lgamma(x + 1.0) - lg_r
                        + rlogp
                        + x * log1mp
                    )
                return total, 0.0
            x = m
            term = math.exp(
                math.lgamma(x + r) - math.lgamma(x + 1.0) - lg_r + rlogp + x * log1mp
            )
            total = 0.0
            q = 1.0 - p
            while True:
                total += term
                x += 1
                term *= q * (x - 1.0 + r) / x
                grow = (x + r) / (x + 1.0)
                if grow < 1.0:
                    grow = 1.0
                ratio = q * grow
                if ratio < 1.0:
                    residual = term / (1.0 - ratio)
                    floor = total if total > 1e-300 else 1e-300
                    if residual <= 1e-18 or residual <= 1e-16 * floor:
                        return total, residual

        _NUMBA_IMPLS = {
            "binom_tables": _nb_binom_tables,
            "binom_coverage": _nb_binom_coverage,
            "binom_ci_coverage": _nb_binom_ci_coverage,
            "hypergeom_tables": _nb_hypergeom_tables,
            "hypergeom_ci_coverage": _nb_hypergeom_ci_coverage,
            "poisson_tail": _nb_poisson_tail,
            "negbinom_tail": _nb_negbinom_tail,
        }
        USE_NUMBA = True


_ACTIVE = _NUMBA_IMPLS if USE_NUMBA else _NUMPY_IMPLS

binom_tables = _ACTIVE["binom_tables"]
binom_coverage = _ACTIVE["binom_coverage"]
binom_ci_coverage = _ACTIVE["binom_ci_coverage"]
hypergeom_tables = _ACTIVE["hypergeom_tables"]
hypergeom_ci_coverage = _ACTIVE["hypergeom_ci_coverage"]
poisson_tail = _ACTIVE["poisson_tail"]
negbinom_tail = _ACTIVE["negbinom_tail"]


def implementations() -> dict[str, dict]:
    """Both kernel families, for cross-checking and benchmarking.

    Returns {"numpy": {...}} always, plus {"numba": {...}} when compiled.
    """
    out = {"numpy": dict(_NUMPY_IMPLS)}
    if _NUMBA_IMPLS is not None:
        out["numba"] = dict(_NUMBA_IMPLS)
    return out
