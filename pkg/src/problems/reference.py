"""Centralized reference solver – (x*, f*) for the sum of all local terms.

Quadratic loss runs projected gradient with halving backtracking; absolute
loss runs projected subgradient with steps c / sqrt(k+1).  Both keep the best
iterate seen and stop once it has not improved by ``tol`` for ``window``
consecutive iterations.

Both are warm-started from an exact solve: bounded least squares for the
quadratic loss, and for the absolute loss the epigraph form of least
absolute deviations (a linear program when reg = 0, a QP solved with SLSQP
otherwise).  The iterative run then only has to confirm that nothing better
is nearby.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog, lsq_linear, minimize

from src.errors import NoProgress
from src.problems.objectives import Box, Objective, ObjectiveSet, project_box

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 10_000_000
STALL_WINDOW = 1000


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    x_star: np.ndarray
    f_star: float
    tol: float
    iterations: int = 0
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "x_star": [float(v) for v in self.x_star],
            "f_star": self.f_star,
            "tol": self.tol,
            "iterations": self.iterations,
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceSolution":
        return cls(
            x_star=np.asarray(data["x_star"], dtype=float),
            f_star=float(data["f_star"]),
            tol=float(data["tol"]),
            iterations=int(data.get("iterations", 0)),
            method=str(data.get("method", "")),
        )


class _BestTracker:
    """Best-so-far iterate plus the stall rule."""

    def __init__(self, x: np.ndarray, value: float, tol: float, window: int):
        self.x = x.copy()
        self.value = value
        self._anchor = value
        self._anchor_iter = 0
        self._tol = tol
        self._window = window

    def update(self, k: int, x: np.ndarray, value: float) -> bool:
        """Record iterate k; True once the stall rule fires."""
        if value < self.value:
            self.value = value
            self.x = x.copy()
        if self.value < self._anchor - self._tol:
            self._anchor = self.value
            self._anchor_iter = k
        return k - self._anchor_iter >= self._window


# ── Warm starts ──────────────────────────────────────────────────────────────


def _least_squares_start(objs: ObjectiveSet) -> Optional[np.ndarray]:
    A, b = objs.features, objs.labels
    if objs.reg > 0:
        A = np.vstack([A, np.sqrt(objs.n * objs.reg) * np.eye(objs.d)])
        b = np.concatenate([b, np.zeros(objs.d)])
    result = lsq_linear(A, b, bounds=(objs.box.lower, objs.box.upper), method="bvls")
    if not result.success:
        logger.warning("Bounded least squares did not converge: %s", result.message)
        return None
    return project_box(result.x, objs.box)


def _least_absolute_start(objs: ObjectiveSet) -> Optional[np.ndarray]:
    """min sum t  s.t.  -t <= A x - b <= t,  x in box  (variables [x, t])."""
    n, d = objs.n, objs.d
    A, b = objs.features, objs.labels
    cost = np.concatenate([np.zeros(d), np.ones(n)])
    eye = np.eye(n)
    a_ub = np.block([[A, -eye], [-A, -eye]])
    b_ub = np.concatenate([b, -b])
    bounds = [(lo, hi) for lo, hi in zip(objs.box.lower, objs.box.upper)] + [(0, None)] * n
    result = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not result.success:
        logger.warning("LP for least absolute deviations failed: %s", result.message)
        return None
    return project_box(result.x[:d], objs.box)


def _regularized_absolute_start(objs: ObjectiveSet) -> Optional[np.ndarray]:
    """min sum t + n reg ||x||^2  s.t.  -t <= A x - b <= t,  x in box  (variables [x, t])."""
    n, d = objs.n, objs.d
    A, b = objs.features, objs.labels
    weight = n * objs.reg
    eye = np.eye(n)
    a_ub = np.block([[A, -eye], [-A, -eye]])
    b_ub = np.concatenate([b, -b])

    def cost(z: np.ndarray) -> float:
        return float(np.sum(z[d:]) + weight * z[:d] @ z[:d])

    def cost_jac(z: np.ndarray) -> np.ndarray:
        return np.concatenate([2.0 * weight * z[:d], np.ones(n)])

    constraints = [{"type": "ineq", "fun": lambda z: b_ub - a_ub @ z, "jac": lambda z: -a_ub}]
    x0 = objs.box.center
    z0 = np.concatenate([x0, np.abs(A @ x0 - b)])
    bounds = [(lo, hi) for lo, hi in zip(objs.box.lower, objs.box.upper)] + [(0, None)] * n
    result = minimize(
        cost, z0, jac=cost_jac, bounds=bounds, constraints=constraints, method="SLSQP",
        options={"ftol": 1e-12, "maxiter": 1000},
    )
    if not result.success:
        logger.warning("SLSQP for regularized least absolute deviations failed: %s", result.message)
        return None
    return project_box(result.x[:d], objs.box)


# ── Iterative certification ──────────────────────────────────────────────────


def _projected_gradient(
    objs: ObjectiveSet, x0: np.ndarray, tol: float, window: int, max_iter: int
) -> tuple[_BestTracker, int]:
    x = x0.copy()
    fx = objs.total(x)
    best = _BestTracker(x, fx, tol, window)
    t = 1.0
    for k in range(1, max_iter + 1):
        g = objs.total_gradient(x)
        while True:
            x_new = project_box(x - t * g, objs.box)
            step = x_new - x
            f_new = objs.total(x_new)
            if f_new <= fx + float(g @ step) + float(step @ step) / (2.0 * t) or t < 1e-300:
                break
            t *= 0.5
        x, fx = x_new, f_new
        if best.update(k, x, fx):
            return best, k
    raise NoProgress(f"projected gradient did not settle within {max_iter} iterations")


def _projected_subgradient(
    objs: ObjectiveSet, x0: np.ndarray, tol: float, window: int, max_iter: int
) -> tuple[_BestTracker, int]:
    x = x0.copy()
    best = _BestTracker(x, objs.total(x), tol, window)
    c = objs.box.diameter / max(objs.L_total, 1e-12)
    for k in range(1, max_iter + 1):
        g = objs.total_gradient(x)
        x = project_box(x - (c / np.sqrt(k)) * g, objs.box)
        if best.update(k, x, objs.total(x)):
            return best, k
    raise NoProgress(f"projected subgradient did not settle within {max_iter} iterations")


def solve_reference(
    objs: Union[ObjectiveSet, Sequence[Objective]],
    box: Optional[Box] = None,
    tol: float = 1e-9,
    window: int = STALL_WINDOW,
    max_iter: int = MAX_ITERATIONS,
) -> ReferenceSolution:
    """High-accuracy minimizer of sum_i f_i over the box."""
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if not isinstance(objs, ObjectiveSet):
        if box is None:
            raise ValueError("box is required when passing individual objectives")
        objs = ObjectiveSet.from_objectives(list(objs), box)

    if objs.kind == "quadratic":
        start = _least_squares_start(objs)
        method = "projected-gradient"
        runner = _projected_gradient
    else:
        start = _least_absolute_start(objs) if objs.reg == 0 else _regularized_absolute_start(objs)
        method = "projected-subgradient"
        runner = _projected_subgradient

    if start is None:
        start = objs.box.center
    else:
        method += "+warm-start"

    best, iterations = runner(objs, start, tol, window, max_iter)
    x_star = project_box(best.x, objs.box)
    f_star = objs.total(x_star)
    logger.info("Reference (%s, %s): f*=%.12g after %d iterations", objs.kind, method, f_star, iterations)
    return ReferenceSolution(x_star=x_star, f_star=f_star, tol=tol, iterations=iterations, method=method)
