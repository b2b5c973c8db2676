"""Gradient estimators built from oracle values only.

Two families:

* Smoothing: ``gsg`` (forward differences against a shared center value) and
  ``cgsg`` (symmetric differences), usable with any number of directions.
* Linear interpolation: ``interpolation_gradient`` solves sigma * Q g = F with
  exactly N = n directions.  Coordinate rows give the textbook
  forward-difference gradient (FD), orthonormal rows give LIOD, and raw
  Gaussian rows give LIGD via a general solve.

The relative-error metric theta = ||g - grad phi|| / ||grad phi|| lives here
too, since every accuracy experiment reports it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DFOError, Oracle, as_point
from .directions import DirectionSet, gaussian_directions

# LIGD draws can be numerically poor even though a Gaussian matrix is almost
# surely invertible; past this condition number we redraw once, then fail.
_COND_LIMIT = 1.0e8


class ConditioningError(DFOError):
    """Interpolation directions too ill-conditioned to solve against."""


class UndefinedMetricError(DFOError):
    """Relative error is undefined because the true gradient is zero."""


@dataclass(frozen=True)
class GradientEstimate:
    """A gradient approximation plus the bookkeeping needed to audit it.

    ``evals_used`` is N+1 for the forward-difference family (N offset points
    plus one shared center evaluation) and 2N for the symmetric estimator,
    which never queries the center.  ``f_center`` carries the shared f(x)
    measurement when one was made, else None.
    """

    g: np.ndarray
    sigma: float
    directions: DirectionSet
    evals_used: int
    estimator_kind: str
    f_center: float | None = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient estimate contains non-finite entries")
        object.__setattr__(self, "g", g)


def _check_geometry(oracle: Oracle, x, sigma: float, dirs: DirectionSet) -> np.ndarray:
    if sigma <= 0 or not np.isfinite(sigma):
        raise ValueError(f"sampling radius must be positive and finite, got {sigma}")
    x = as_point(x, oracle.dimension)
    if dirs.dimension != oracle.dimension:
        raise ValueError(
            f"direction dimension {dirs.dimension} != oracle dimension {oracle.dimension}"
        )
    return x


def gsg(oracle: Oracle, x, sigma: float, dirs: DirectionSet) -> GradientEstimate:
    """Smoothed-gradient estimate from N forward differences.

        g = (1/N) sum_i [(f(x + sigma u_i) - f(x)) / sigma] u_i

    f(x) is evaluated exactly once and shared across all N differences, so the
    call costs N+1 evaluations.  Note the 1/N: with orthonormal rows this is a
    scaled-down version of the interpolation estimate, not the same object.
    """
    x = _check_geometry(oracle, x, sigma, dirs)
    N = dirs.count
    f0 = oracle.evaluate(x)
    fvals = oracle.evaluate_batch(x[None, :] + sigma * dirs.Q)
    g = ((fvals - f0) / sigma) @ dirs.Q / N
    return GradientEstimate(g, float(sigma), dirs, N + 1, "GSG", f_center=f0)


def cgsg(oracle: Oracle, x, sigma: float, dirs: DirectionSet) -> GradientEstimate:
    """Symmetric (central) variant of :func:`gsg`.

        g = (1/(2N)) sum_i [(f(x + sigma u_i) - f(x - sigma u_i)) / sigma] u_i

    Costs 2N evaluations and never queries the center point, so ``f_center``
    is None.  Implemented for empirical comparison; the accuracy and
    complexity bounds in :mod:`dfoline.bounds` cover the one-sided family.
    """
    x = _check_geometry(oracle, x, sigma, dirs)
    N = dirs.count
    offsets = sigma * dirs.Q
    fvals = oracle.evaluate_batch(np.vstack([x + offsets, x - offsets]))
    g = ((fvals[:N] - fvals[N:]) / sigma) @ dirs.Q / (2.0 * N)
    return GradientEstimate(g, float(sigma), dirs, 2 * N, "cGSG", f_center=None)


_INTERP_KIND = {"coordinate": "FD", "orthonormal": "LIOD", "gaussian": "LIGD"}


def interpolation_gradient(oracle: Oracle, x, sigma: float, dirs: DirectionSet) -> GradientEstimate:
    """Gradient of the linear model interpolating f at x and the N = n offsets.

    Solves sigma * Q g = F where F_i = f(x + sigma u_i) - f(x).  For
    orthonormal or coordinate rows the inverse is the transpose, so
    g = sum_i (F_i / sigma) u_i; Gaussian rows go through a general solve.
    Reproduces linear functions exactly at zero noise.

    Gaussian direction matrices are condition-checked before any oracle
    evaluation; one automatic redraw is attempted (when the set carries seed
    provenance), after which a :class:`ConditioningError` is raised.
    """
    x = _check_geometry(oracle, x, sigma, dirs)
    n = oracle.dimension
    if dirs.count != n:
        raise ValueError(
            f"interpolation needs exactly N = n = {n} directions, got {dirs.count}"
        )
    if dirs.kind == "gaussian":
        cond = np.linalg.cond(dirs.Q)
        if not cond < _COND_LIMIT:
            if dirs.stream is not None:
                dirs = gaussian_directions(n, n, dirs.stream.child(1))
                cond = np.linalg.cond(dirs.Q)
            if not cond < _COND_LIMIT:
                raise ConditioningError(
                    f"direction matrix condition number {cond:.3e} exceeds "
                    f"{_COND_LIMIT:.0e}; redraw the direction set"
                )
    f0 = oracle.evaluate(x)
    F = oracle.evaluate_batch(x[None, :] + sigma * dirs.Q) - f0
    if dirs.kind == "gaussian":
        g = np.linalg.solve(dirs.Q, F / sigma)
    else:
        g = (F / sigma) @ dirs.Q
    return GradientEstimate(
        g, float(sigma), dirs, n + 1, _INTERP_KIND[dirs.kind], f_center=f0
    )


def relative_error(g, grad_true) -> float:
    """theta = ||g - grad phi(x)|| / ||grad phi(x)||.

    Raises :class:`UndefinedMetricError` at stationary points of phi; callers
    must record those as skips rather than coercing to 0 or inf.
    """
    g = np.asarray(g, dtype=float)
    grad_true = np.asarray(grad_true, dtype=float)
    if not np.all(np.isfinite(grad_true)):
        raise ValueError("true gradient contains non-finite entries")
    denom = np.linalg.norm(grad_true)
    if denom == 0.0:
        raise UndefinedMetricError("relative error undefined where the true gradient is zero")
    return float(np.linalg.norm(g - grad_true) / denom)
