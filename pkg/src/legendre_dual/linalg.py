"""Small dense linear algebra with explicit failure modes.

The engine works with tiny dense matrices (fiber Hessians, Jacobians —
dimensions rarely above 6).  What matters here is not speed but *honest
failure*: an ill-conditioned inverse must raise instead of quietly feeding
garbage into residuals, and the Newton solver must report how it converged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "SingularMatrixError",
    "NewtonResult",
    "NewtonFailure",
    "invert",
    "newton_solve",
    "newton_solve_multistart",
]

#: conditioning gate for inversion; beyond this the inverse is untrustworthy
COND_LIMIT = 1e12
#: acceptance bound for ``‖M·inv(M) − I‖_max`` relative to cond(M)
INVERSE_RESIDUAL_FACTOR = 1e-10


class SingularMatrixError(ArithmeticError):
    """Matrix is singular or too ill-conditioned to invert reliably."""


class NewtonFailure(RuntimeError):
    """Newton iteration failed to reach the requested tolerance."""

    def __init__(self, message: str, best: np.ndarray, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


def invert(m: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix, gated on conditioning.

    Raises :class:`SingularMatrixError` when the condition number exceeds
    ``COND_LIMIT`` or the verification residual ``‖M·inv − I‖_max`` exceeds
    ``INVERSE_RESIDUAL_FACTOR * cond(M)``.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("invert expects a square matrix")
    try:
        cond = np.linalg.cond(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularMatrixError(str(exc)) from exc
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError(
            f"condition number {cond:.3e} exceeds limit {COND_LIMIT:.1e}"
        )
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    residual = float(np.max(np.abs(a @ inv - np.eye(a.shape[0]))))
    if residual > INVERSE_RESIDUAL_FACTOR * max(cond, 1.0):
        raise SingularMatrixError(
            f"inverse residual {residual:.3e} too large for cond {cond:.3e}"
        )
    return inv


@dataclass(frozen=True)
class NewtonResult:
    """Converged Newton solve with diagnostics."""

    solution: np.ndarray
    iterations: int
    residual: float
    seed_used: np.ndarray


def newton_solve(
    fun: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    seed: Sequence[float],
    tol: float = 1e-11,
    max_iter: int = 50,
) -> NewtonResult:
    """Damped Newton iteration for ``fun(y) = 0``.

    ``fun`` returns ``(residual_vector, jacobian)``.  Each step solves the
    linear system and halves the step (up to 20 times) until the residual
    norm decreases; the Jacobian is conditioning-gated like :func:`invert`.
    Raises :class:`NewtonFailure` if ``max_iter`` steps do not reach
    ``‖f(y)‖_max ≤ tol``.
    """
    y = np.array(seed, dtype=float)
    f, jac = fun(y)
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    best_y, best_norm = y.copy(), norm
    for iteration in range(1, max_iter + 1):
        if norm <= tol:
            return NewtonResult(y, iteration - 1, norm, np.array(seed, float))
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise NewtonFailure(
                f"Jacobian condition number {cond:.3e} exceeds limit",
                best_y,
                best_norm,
            )
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise NewtonFailure(f"singular Jacobian: {exc}", best_y, best_norm)
        scale = 1.0
        for _ in range(20):
            candidate = y + scale * step
            try:
                fc, jc = fun(candidate)
            except ArithmeticError:
                scale *= 0.5
                continue
            cnorm = float(np.max(np.abs(fc))) if fc.size else 0.0
            if np.isfinite(cnorm) and cnorm < norm:
                y, f, jac, norm = candidate, fc, jc, cnorm
                break
            scale *= 0.5
        else:
            raise NewtonFailure(
                f"line search stalled at residual {norm:.3e}", best_y, best_norm
            )
        if norm < best_norm:
            best_y, best_norm = y.copy(), norm
    if norm <= tol:
        return NewtonResult(y, max_iter, norm, np.array(seed, float))
    raise NewtonFailure(
        f"no convergence in {max_iter} iterations (residual {norm:.3e})",
        best_y,
        best_norm,
    )


def _ladder_seeds(dim: int, primary: Sequence[float]) -> Iterable[np.ndarray]:
    """Deterministic fallback seeds: caller's seed, origin, scaled corners."""
    yield np.array(primary, dtype=float)
    yield np.zeros(dim)
    corners = []
    for mask in range(1 << dim):
        corners.append(
            np.array(
                [1.0 if mask & (1 << k) else -1.0 for k in range(dim)]
            )
        )
    for scale in (1.0, 2.0, 4.0):
        for corner in corners:
            yield scale * corner


def newton_solve_multistart(
    fun: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    seed: Sequence[float],
    tol: float = 1e-11,
    max_iter: int = 50,
) -> NewtonResult:
    """Newton solve that walks a deterministic seed ladder on failure.

    Tries the caller's seed first, then the origin, then the corners of
    ``[-1, 1]^dim`` scaled by 1, 2, 4.  The first convergent run wins, so the
    result is independent of how earlier attempts failed.
    """
    last: NewtonFailure | None = None
    for candidate in _ladder_seeds(len(seed), seed):
        try:
            return newton_solve(fun, candidate, tol=tol, max_iter=max_iter)
        except NewtonFailure as exc:
            last = exc
        except ArithmeticError:
            continue
    assert last is not None
    raise NewtonFailure(
        f"all Newton starts failed (best residual {last.residual:.3e})",
        last.best,
        last.residual,
    )
