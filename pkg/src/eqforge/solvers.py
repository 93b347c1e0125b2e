"""Dense solvers shared by the estimation and filter-design normal equations."""

from __future__ import annotations

import numpy as np
import scipy.linalg

CONDITION_LIMIT = 1e12


class SingularSystemError(RuntimeError):
    """A least-squares system is too ill-conditioned to solve as requested."""


def solve_normal_equations(
    gram: np.ndarray,
    rhs: np.ndarray,
    *,
    min_norm_fallback: tuple[np.ndarray, np.ndarray] | None = None,
    context: str = "normal equations",
) -> np.ndarray:
    """Solve ``gram @ x = rhs`` for a symmetric PSD Gram matrix.

    Well-conditioned systems go through a Cholesky factorization. When the
    condition number exceeds CONDITION_LIMIT, the minimum-norm least-squares
    solution of `min_norm_fallback` (a stacked (matrix, target) system) is
    returned instead; with no fallback the system is reported as singular.
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.any(gram):
        raise SingularSystemError(
            f"{context}: normal matrix is identically zero (condition estimate inf)"
        )

    cond = float(np.linalg.cond(gram))
    if np.isfinite(cond) and cond <= CONDITION_LIMIT:
        try:
            factor = scipy.linalg.cho_factor(gram, check_finite=False)
            return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            pass  # fall through to the rank-deficient handling below

    if min_norm_fallback is None:
        raise SingularSystemError(
            f"{context}: condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    matrix, target = min_norm_fallback
    solution, *_ = np.linalg.lstsq(matrix, target, rcond=None)
    return solution
