"""Closed-form guarantees for the adaptive-quantized method.

All three share the constant C_b = 6 sqrt(n d) gamma + c L 2^b, with c = 5
in the rate envelopes and c = 3 in the weighted consensus sum.  They only
apply when the bandwidth condition holds; callers report them either way.
"""

from __future__ import annotations

import math


def _quant_constant(n: int, d: int, gamma: float, L: float, bits: int, lipschitz_factor: float) -> float:
    return 6.0 * math.sqrt(n * d) * gamma + lipschitz_factor * L * 2.0**bits


def convex_rate_bound(
    n: int, d: int, gamma: float, L: float, sigma2: float, bits: int, r0_sq: float, k: int
) -> float:
    """Upper bound on f(z_i(k)) - f* under alpha(k) = 1/sqrt(k+1) with weighted averaging."""
    c = _quant_constant(n, d, gamma, L, bits, 5.0)
    root = math.sqrt(k + 1.0)
    spread = math.sqrt(n) * c * c / ((1.0 - sigma2) * (2.0**bits - 1.0) ** 2)
    return n * r0_sq / (2.0 * root) + spread * (math.log(k + 1.0) + 1.0) / root


def strongly_convex_rate_bound(
    n: int, d: int, gamma: float, L: float, sigma2: float, bits: int, alpha0: float, k: int
) -> float:
    """Upper bound on ||z_i(k) - x*||^2 under alpha(k) = a/(k+1) with plain averaging."""
    c = _quant_constant(n, d, gamma, L, bits, 5.0)
    spread = 4.0 * math.sqrt(n) * alpha0 * c * c / ((1.0 - sigma2) * (2.0**bits - 1.0) ** 2)
    return spread * (1.0 + math.log(k + 1.0)) / (k + 1.0)


def consensus_sum_constant(n: int, d: int, gamma: float, L: float, sigma2: float, bits: int) -> float:
    """Constant bounding sum_t alpha(t) ||X(t) - 1 xbar(t)^T|| by (ln(k+1) + 1) times it."""
    c = _quant_constant(n, d, gamma, L, bits, 3.0)
    return c / ((1.0 - sigma2) * (2.0**bits - 1.0))
