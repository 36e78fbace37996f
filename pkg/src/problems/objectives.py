"""Local regression objectives, subgradient oracles and the constraint box.

Node i holds one sample (a_i, b_i) and the term

    quadratic:  f_i(x) = (a_i^T x - b_i)^2 + reg * ||x||^2
    absolute:   f_i(x) = |a_i^T x - b_i|   + reg * ||x||^2

``Objective`` is the single-term view used by tests and hand checks;
``ObjectiveSet`` evaluates all n terms at once for the engine.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LossKind = Literal["quadratic", "absolute"]
LOSS_KINDS: tuple[str, ...] = ("quadratic", "absolute")


# ── Box ──────────────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Box:
    """Constraint set X = [lower, upper] (also the initial quantization range)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError(f"box bounds differ in shape: {lower.shape} vs {upper.shape}")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, lower: float, upper: float, d: int) -> "Box":
        return cls(np.full(d, float(lower)), np.full(d, float(upper)))

    @property
    def dimension(self) -> int:
        return int(self.lower.size)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def max_norm(self) -> float:
        """sup ||x|| over the box (attained at a corner)."""
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dimension))


def project_box(x: np.ndarray, box: Box) -> np.ndarray:
    """Euclidean projection onto the box (componentwise clamp)."""
    return np.clip(np.asarray(x, dtype=float), box.lower, box.upper)


def residual_range(a: np.ndarray, b: float, box: Box) -> float:
    """sup over the box of |a^T x - b|, evaluated at the two extreme corners."""
    a = np.asarray(a, dtype=float)
    high = float(np.sum(np.where(a >= 0, a * box.upper, a * box.lower)))
    low = float(np.sum(np.where(a >= 0, a * box.lower, a * box.upper)))
    return max(abs(high - b), abs(low - b))


# ── Single term ──────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Objective:
    """One node's term f_i with its subgradient bound L_i and modulus mu_i."""

    kind: LossKind
    a: np.ndarray
    b: float
    reg: float
    L: float
    mu: float


def lipschitz_bound(obj: Objective, box: Box) -> float:
    """Upper bound on ||g_i(x)|| over the box."""
    a_norm = float(np.linalg.norm(obj.a))
    reg_part = 2.0 * obj.reg * box.max_norm
    if obj.kind == "quadratic":
        return 2.0 * residual_range(obj.a, obj.b, box) * a_norm + reg_part
    return a_norm + reg_part


def make_objective(kind: LossKind, a: np.ndarray, b: float, reg: float, box: Box) -> Objective:
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")
    if reg < 0:
        raise ValueError(f"reg must be >= 0, got {reg}")
    obj = Objective(kind=kind, a=np.asarray(a, dtype=float), b=float(b), reg=float(reg), L=0.0, mu=2.0 * reg)
    return replace(obj, L=lipschitz_bound(obj, box))


def eval_objective(obj: Objective, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    r = float(obj.a @ x) - obj.b
    loss = r * r if obj.kind == "quadratic" else abs(r)
    return loss + obj.reg * float(x @ x)


def subgrad(obj: Objective, x: np.ndarray) -> np.ndarray:
    """Gradient (quadratic) or subgradient with sign(0) = 0 (absolute)."""
    x = np.asarray(x, dtype=float)
    r = float(obj.a @ x) - obj.b
    scale = 2.0 * r if obj.kind == "quadratic" else float(np.sign(r))
    return scale * obj.a + 2.0 * obj.reg * x


# ── All terms ────────────────────────────────────────────────────────────────


class ObjectiveSet:
    """The n local terms stacked row-wise; node i owns row i."""

    def __init__(self, kind: LossKind, features: np.ndarray, labels: np.ndarray, reg: float, box: Box):
        if kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {kind!r}")
        if reg < 0:
            raise ValueError(f"reg must be >= 0, got {reg}")
        features = np.atleast_2d(np.asarray(features, dtype=float))
        labels = np.asarray(labels, dtype=float).reshape(-1)
        if features.shape[0] != labels.shape[0]:
            raise ValueError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if features.shape[1] != box.dimension:
            raise ValueError(f"features have d={features.shape[1]} but box has d={box.dimension}")

        self.kind: LossKind = kind
        self.features = features
        self.labels = labels
        self.reg = float(reg)
        self.box = box
        self._terms = [make_objective(kind, a, b, reg, box) for a, b in zip(features, labels)]
        self.lipschitz = np.array([t.L for t in self._terms])

    @classmethod
    def from_objectives(cls, objs: Sequence[Objective], box: Box) -> "ObjectiveSet":
        if not objs:
            raise ValueError("need at least one objective")
        kinds = {o.kind for o in objs}
        regs = {o.reg for o in objs}
        if len(kinds) != 1 or len(regs) != 1:
            raise ValueError("objectives must share kind and reg")
        return cls(objs[0].kind, np.stack([o.a for o in objs]), np.array([o.b for o in objs]), objs[0].reg, box)

    # ── Shape / constants ────────────────────────────────────────────────

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def L_total(self) -> float:
        return float(self.lipschitz.sum())

    @property
    def mu(self) -> float:
        """min_i mu_i; every term shares reg so this is 2 * reg."""
        return 2.0 * self.reg

    def objectives(self) -> list[Objective]:
        return list(self._terms)

    # ── Oracles ──────────────────────────────────────────────────────────

    def _loss(self, r: np.ndarray) -> np.ndarray:
        return r * r if self.kind == "quadratic" else np.abs(r)

    def local_values(self, X: np.ndarray) -> np.ndarray:
        """f_i(x_i) for every node, X shaped (n, d)."""
        r = np.einsum("ij,ij->i", X, self.features) - self.labels
        return self._loss(r) + self.reg * np.einsum("ij,ij->i", X, X)

    def subgrads(self, X: np.ndarray) -> np.ndarray:
        """g_i(x_i) for every node, shaped (n, d)."""
        r = np.einsum("ij,ij->i", X, self.features) - self.labels
        scale = 2.0 * r if self.kind == "quadratic" else np.sign(r)
        return scale[:, None] * self.features + 2.0 * self.reg * X

    def totals(self, Z: np.ndarray) -> np.ndarray:
        """f(z) = sum_i f_i(z) for each row z of Z, shaped (m, d)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        r = Z @ self.features.T - self.labels
        return self._loss(r).sum(axis=1) + self.n * self.reg * np.einsum("ij,ij->i", Z, Z)

    def total(self, x: np.ndarray) -> float:
        return float(self.totals(np.asarray(x, dtype=float)[None, :])[0])

    def total_gradient(self, x: np.ndarray) -> np.ndarray:
        """Sum of the node (sub)gradients evaluated at a common point x."""
        X = np.broadcast_to(np.asarray(x, dtype=float), (self.n, self.d))
        return self.subgrads(np.array(X)).sum(axis=0)
