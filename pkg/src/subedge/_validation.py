"""Input validation helpers shared by the estimators and the CLI."""
import math
import numbers


def check_eps(eps, name="eps"):
    if not isinstance(eps, numbers.Real) or not (0.0 < float(eps) < 0.5):
        raise ValueError(f"{name} must lie in (0, 1/2), got {eps!r}")
    return float(eps)


def check_delta(delta, name="delta"):
    if not isinstance(delta, numbers.Real) or not (0.0 < float(delta) < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {delta!r}")
    return float(delta)


def check_tradeoff(x, name="x"):
    if not isinstance(x, numbers.Real) or not math.isfinite(x) or float(x) < 1.0:
        raise ValueError(f"{name} must be a finite real >= 1, got {x!r}")
    return float(x)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_estimator_mode(mode):
    if callable(mode):
        return mode
    if mode not in ("exact", "sublinear"):
        raise ValueError(f"estimator must be 'exact', 'sublinear' or a callable, got {mode!r}")
    return mode
