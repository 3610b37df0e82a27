from __future__ import annotations


class GenerativeMpcError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(GenerativeMpcError, ValueError):
    """Invalid problem, gains, preset, scenario or settings value."""


class DomainError(GenerativeMpcError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. non-finite angle)."""


class SimilarityError(GenerativeMpcError, ValueError):
    """Cosine similarity is undefined for the given vectors."""


class RetrievalError(GenerativeMpcError, LookupError):
    """No retrievable episode in the store."""


class SingularityError(GenerativeMpcError, ArithmeticError):
    """Undamped inverse kinematics on a rank-deficient Jacobian."""
