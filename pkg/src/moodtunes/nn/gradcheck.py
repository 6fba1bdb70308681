"""Finite-difference verification of analytic gradients.

Central differences with a fixed step, compared elementwise against the
analytic gradient under a scale-aware relative error.  All checking runs
in float64; callers hand in float64 parameter arrays and an objective
closure that reads them in place.
"""

import numpy as np

STEP = 1e-5
TOLERANCE = 1e-4
ERROR_FLOOR = 1e-8


class NumericalInstabilityError(ValueError):
    """Objective or gradient produced a non-finite value."""


def numerical_gradient(objective, param, h=STEP):
    """Central-difference gradient of a scalar objective w.r.t. `param`.

    `param` is mutated element by element and restored; `objective()`
    must re-read it on every call.
    """
    grad = np.zeros_like(param, dtype=np.float64)
    # nditer mutates the caller's array even when it is a non-contiguous view
    it = np.nditer(param, flags=["multi_index"], op_flags=["readwrite"])
    while not it.finished:
        idx = it.multi_index
        orig = param[idx]
        param[idx] = orig + h
        f_plus = float(objective())
        param[idx] = orig - h
        f_minus = float(objective())
        param[idx] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalInstabilityError(
                f"objective returned a non-finite value near element {idx}"
            )
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
        it.iternext()
    return grad


def relative_error(analytic, numerical):
    """Elementwise |a - n| / max(|a|, |n|, floor)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numerical, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), ERROR_FLOOR)
    return np.abs(a - n) / denom


def check_gradients(objective, params, analytic, h=STEP, tolerance=TOLERANCE):
    """Compare analytic gradients against central differences.

    params:   name -> float64 array, mutated in place during probing
    analytic: name -> gradient array of matching shape

    Returns {"max_rel_error": float, "pass": bool, "worst_param": str}.
    """
    max_err = 0.0
    worst = None
    for name, param in params.items():
        grad = np.asarray(analytic[name], dtype=np.float64)
        if not np.all(np.isfinite(grad)):
            raise NumericalInstabilityError(f"analytic gradient for {name!r} is non-finite")
        if grad.shape != param.shape:
            raise ValueError(
                f"gradient shape {grad.shape} does not match parameter {name!r} shape {param.shape}"
            )
        num = numerical_gradient(objective, param, h)
        err = relative_error(grad, num)
        local = float(err.max()) if err.size else 0.0
        if local > max_err:
            max_err = local
            worst = name
    return {"max_rel_error": max_err, "pass": max_err < tolerance, "worst_param": worst}
