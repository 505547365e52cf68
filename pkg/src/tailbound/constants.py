"""Numeric constants and their override hooks."""

import os
import warnings

# Berry-Esseen absolute constant: Tyurin's 0.4785 by default; Shevtsova's
# earlier 0.7056 is accepted for reproducing older figures.
C_BE_TYURIN = 0.4785
C_BE_SHEVTSOVA = 0.7056
C_BE_DEFAULT = C_BE_TYURIN

_KNOWN_C_BE = (C_BE_TYURIN, C_BE_SHEVTSOVA)

ENV_C_BE = "TAILBOUND_CBE"


def resolve_c_be(explicit: float | None = None) -> float:
    """Pick the Berry-Esseen constant: explicit arg, else env override, else default.

    Values other than the two published constants are accepted with a warning;
    non-positive values are rejected.
    """
    if explicit is not None:
        value = float(explicit)
    else:
        raw = os.environ.get(ENV_C_BE)
        if raw is None:
            return C_BE_DEFAULT
        value = float(raw)
    if value <= 0.0:
        raise ValueError(f"Berry-Esseen constant must be positive, got {value}")
    if not any(abs(value - known) < 1e-12 for known in _KNOWN_C_BE):
        warnings.warn(
            f"non-standard Berry-Esseen constant {value}; published values are "
            f"{C_BE_TYURIN} and {C_BE_SHEVTSOVA}",
            UserWarning,
            stacklevel=2,
        )
    return value
