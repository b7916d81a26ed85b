"""Structured errors with stable machine-readable codes.

Every failure mode raised by the package carries a ``code`` string so callers
(and the CLI) can branch on failures without parsing messages.
"""

from __future__ import annotations


class BlowprofError(Exception):
    """Base class: an error with a stable ``code`` identifier."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ParameterError(BlowprofError):
    """Invalid model parameters.

    Codes: ``M_OUT_OF_RANGE``, ``N_OUT_OF_RANGE``, ``SIGMA_NEGATIVE``.
    """


class ManifoldError(BlowprofError):
    """Manifold approximation unavailable. Codes: ``ORDER_UNAVAILABLE``."""


class ChartError(BlowprofError):
    """Bad chart/state combination. Codes: ``BAD_CHART``, ``BAD_STATE``."""


class IntegrationError(BlowprofError):
    """Integration failures.

    Codes: ``STEP_UNDERFLOW``, ``INADMISSIBLE_START``, ``NO_RETURN``.
    """


class SeedError(BlowprofError):
    """Invalid shooting seed. Codes: ``BAD_SPEC``."""


class BisectionError(BlowprofError):
    """Transition bracketing failures.

    Codes: ``SAME_FATE_AT_ENDPOINTS``, ``TOO_MANY_INDETERMINATE``.
    """


class ProfileError(BlowprofError):
    """Profile reconstruction failures.

    Codes: ``DEGENERATE_TRAJECTORY``, ``BLOWUP``, ``TOUCHDOWN``,
    ``NO_PROFILE``, ``BAD_CONSTANTS``.
    """
