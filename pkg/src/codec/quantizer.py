"""Adaptive uniform quantizer – grids, codewords and the bandwidth check.

A grid over [lower, upper] has B = 2^b points per coordinate, spaced
(upper - lower) / (B - 1) apart, so the first point is ``lower`` and the last
is ``upper``.  Inputs are clamped into the interval and mapped to the nearest
point; exact midpoints go to the lower index.

The array helpers (``quantize_indices``, ``grid_values``, ``pack_indices``,
``unpack_bits``) work on any leading shape so the engine can encode a whole
round (n x d) at once.  The single-vector API on top mirrors how a node
sees one message.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.errors import DegenerateSpectrum, IndexOutOfRange, LengthMismatch

logger = logging.getLogger(__name__)

MAX_BITS = 52
GAMMA_FACTOR = 48.0


# ── Data classes ─────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class QuantGrid:
    """Uniform per-coordinate grid over the box [lower, upper]."""

    lower: np.ndarray
    upper: np.ndarray
    bits_per_coord: int

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError(f"lower/upper shapes differ: {lower.shape} vs {upper.shape}")
        if not 1 <= self.bits_per_coord <= MAX_BITS:
            raise ValueError(f"bits_per_coord must be in [1, {MAX_BITS}], got {self.bits_per_coord}")
        if np.any(upper < lower):
            raise ValueError("grid upper bound below lower bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[-1])

    @property
    def points_per_coord(self) -> int:
        return 1 << self.bits_per_coord

    @property
    def resolution(self) -> np.ndarray:
        return (self.upper - self.lower) / float(self.points_per_coord - 1)

    def points(self, coord: int) -> np.ndarray:
        """All grid points of one coordinate (small b only)."""
        idx = np.arange(self.points_per_coord, dtype=np.uint64)
        return grid_values(idx, self.lower[coord], self.upper[coord], self.bits_per_coord)

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


@dataclass(frozen=True, eq=False)
class CodeWord:
    """One node's message: d indices plus their fixed-width bit string."""

    indices: np.ndarray
    packed: np.ndarray
    bits_per_coord: int

    @classmethod
    def from_indices(cls, indices: np.ndarray, bits_per_coord: int) -> "CodeWord":
        idx = np.asarray(indices, dtype=np.uint64)
        return cls(indices=idx, packed=pack(idx, bits_per_coord), bits_per_coord=bits_per_coord)

    @property
    def bit_length(self) -> int:
        return int(self.packed.size)

    def bit_string(self) -> str:
        return "".join("1" if bit else "0" for bit in self.packed)


@dataclass(frozen=True)
class QuantParams:
    """Interval constant gamma, bits b and whether the bandwidth condition holds."""

    gamma: float
    bits: int
    assumption2_satisfied: bool

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


# ── Constants ────────────────────────────────────────────────────────────────


def compute_gamma(L: float, sigma2: float) -> float:
    """gamma = 48 (2 + L) / (1 - sigma2)."""
    if sigma2 >= 1.0:
        raise DegenerateSpectrum(f"sigma2={sigma2} leaves no spectral gap")
    if sigma2 < 0 or L < 0:
        raise ValueError(f"need sigma2 >= 0 and L >= 0, got sigma2={sigma2}, L={L}")
    return GAMMA_FACTOR * (2.0 + L) / (1.0 - sigma2)


def check_bandwidth(n: int, d: int, gamma: float, b: int) -> bool:
    """True iff sqrt(n d) * gamma <= 2^b - 1."""
    return math.sqrt(n * d) * gamma <= float((1 << b) - 1)


def minimum_bits(n: int, d: int, gamma: float) -> int:
    """Smallest b with sqrt(n d) * gamma <= 2^b - 1."""
    b = max(1, math.ceil(math.log2(math.sqrt(n * d) * gamma + 1.0)))
    while not check_bandwidth(n, d, gamma, b):
        b += 1
    return b


def adaptive_interval(
    q_prev: np.ndarray, gamma: float, alpha_prev: float
) -> tuple[np.ndarray, np.ndarray]:
    """Bounds q_prev -/+ (gamma / 2) * alpha_prev, width gamma * alpha_prev."""
    half = 0.5 * gamma * alpha_prev
    q_prev = np.asarray(q_prev, dtype=float)
    return q_prev - half, q_prev + half


# ── Array helpers ────────────────────────────────────────────────────────────


def _steps(lower: np.ndarray, upper: np.ndarray, bits: int) -> np.ndarray:
    return (upper - lower) / float((1 << bits) - 1)


def grid_values(idx: np.ndarray, lower: np.ndarray, upper: np.ndarray, bits: int) -> np.ndarray:
    """Grid point for each index; the top index maps to ``upper`` exactly."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    idx = np.asarray(idx)
    top = (1 << bits) - 1
    values = lower + idx.astype(float) * _steps(lower, upper, bits)
    return np.where(idx == top, np.broadcast_to(upper, values.shape), values)


def quantize_indices(
    x: np.ndarray, lower: np.ndarray, upper: np.ndarray, bits: int
) -> np.ndarray:
    """Nearest-grid-point indices after clamping x into [lower, upper].

    Works on any broadcastable shape.  The floor of the scaled coordinate
    can be one off under rounding, so the nearest point is picked among the
    four indices around it; strict comparison keeps ties at the lower index.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    xc = np.clip(np.asarray(x, dtype=float), lower, upper)
    top = (1 << bits) - 1
    step = np.broadcast_to(_steps(lower, upper, bits), xc.shape)

    scaled = np.zeros_like(xc)
    np.divide(xc - lower, step, out=scaled, where=step > 0)
    base = np.clip(np.floor(scaled), 0, top).astype(np.int64)

    best = np.clip(base - 1, 0, top)
    best_dist = np.abs(xc - grid_values(best, lower, upper, bits))
    for offset in (0, 1, 2):
        cand = np.clip(base + offset, 0, top)
        dist = np.abs(xc - grid_values(cand, lower, upper, bits))
        closer = dist < best_dist
        best = np.where(closer, cand, best)
        best_dist = np.where(closer, dist, best_dist)

    best = np.where(step > 0, best, 0)
    return best.astype(np.uint64)


def pack_indices(idx: np.ndarray, bits: int) -> np.ndarray:
    """Fixed-width MSB-first bits, coordinate-major, over the last axis."""
    idx = np.asarray(idx, dtype=np.uint64)
    if idx.size and int(idx.max()) > (1 << bits) - 1:
        raise IndexOutOfRange(f"index {int(idx.max())} does not fit in {bits} bits")
    shifts = np.arange(bits - 1, -1, -1, dtype=np.uint64)
    out = (idx[..., None] >> shifts) & np.uint64(1)
    return out.astype(np.uint8).reshape(*idx.shape[:-1], idx.shape[-1] * bits)


def unpack_bits(packed: np.ndarray, bits: int, d: int) -> np.ndarray:
    """Inverse of :func:`pack_indices` over the last axis."""
    packed = np.asarray(packed)
    if packed.shape[-1] != bits * d:
        raise LengthMismatch(f"expected {bits * d} bits, got {packed.shape[-1]}")
    if packed.size and (packed.max() > 1 or packed.min() < 0):
        raise ValueError("bit array may only contain 0 and 1")
    weights = np.uint64(1) << np.arange(bits - 1, -1, -1, dtype=np.uint64)
    grouped = packed.reshape(*packed.shape[:-1], d, bits).astype(np.uint64)
    return (grouped * weights).sum(axis=-1, dtype=np.uint64)


# ── Single-message API ───────────────────────────────────────────────────────


def quantize(x: np.ndarray, grid: QuantGrid) -> CodeWord:
    idx = quantize_indices(np.atleast_1d(x), grid.lower, grid.upper, grid.bits_per_coord)
    return CodeWord.from_indices(idx, grid.bits_per_coord)


def dequantize(cw: CodeWord, grid: QuantGrid) -> np.ndarray:
    idx = np.asarray(cw.indices, dtype=np.uint64)
    if idx.size and int(idx.max()) > grid.points_per_coord - 1:
        raise IndexOutOfRange(
            f"index {int(idx.max())} outside [0, {grid.points_per_coord - 1}]"
        )
    return grid_values(idx, grid.lower, grid.upper, grid.bits_per_coord)


def pack(indices: np.ndarray, b: int) -> np.ndarray:
    return pack_indices(np.atleast_1d(np.asarray(indices, dtype=np.uint64)), b)


def unpack(bits: np.ndarray, b: int, d: int) -> np.ndarray:
    return unpack_bits(np.asarray(bits, dtype=np.uint8), b, d)
