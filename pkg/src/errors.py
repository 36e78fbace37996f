"""Error types – every failure the simulator can raise.

Value problems (bad input, malformed data) subclass ValueError; failures
that happen while running a computation subclass RuntimeError.  Callers
that only care about "something in qdsg broke" can catch QdsgError.
"""

from __future__ import annotations


class QdsgError(Exception):
    """Base class for all simulator errors."""


# ── Topology ─────────────────────────────────────────────────────────────────


class RetryExhausted(QdsgError, RuntimeError):
    """No connected graph after the retry cap (radius too small for n)."""

    def __init__(self, n: int, radius: float, attempts: int):
        self.n = n
        self.radius = radius
        self.attempts = attempts
        super().__init__(
            f"no connected geometric graph with n={n}, radius={radius} after {attempts} attempts"
        )


class NumericalFailure(QdsgError, RuntimeError):
    """A dense decomposition did not converge."""


class DegenerateSpectrum(QdsgError, ValueError):
    """sigma2 too close to 1 for gamma to be finite."""


# ── Codec ────────────────────────────────────────────────────────────────────


class IndexOutOfRange(QdsgError, ValueError):
    """A codeword index lies outside [0, 2^b - 1]."""


class LengthMismatch(QdsgError, ValueError):
    """A bit string does not have exactly b*d bits."""


class DecodeMismatch(QdsgError, RuntimeError):
    """Receiver-side reconstruction differs from the sender's value."""


# ── Problems / engine ────────────────────────────────────────────────────────


class NoProgress(QdsgError, RuntimeError):
    """Reference solver hit its iteration cap before the tolerance rule fired."""


class ConfigMismatch(QdsgError, ValueError):
    """Graph, mixing matrix, objectives and box disagree on n or d."""


# ── Configuration ────────────────────────────────────────────────────────────


class ConfigParseError(QdsgError, ValueError):
    """A config file could not be read or parsed."""


class ConfigValidationError(QdsgError, ValueError):
    """A config value is out of range; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
