"""Exception hierarchy.

Verification predicates return ``bool``; operations that must produce a value
(decoding, issuing, proving, state transitions) raise one of these instead.
"""


class SperanzaError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(SperanzaError, ValueError):
    """Malformed, truncated or non-canonical wire data."""


class ProofError(SperanzaError):
    """An equality proof was requested for openings that do not verify."""


class TokenError(SperanzaError):
    """OIDC token rejected (bad signature, expired, wrong audience)."""


class CertificateError(SperanzaError):
    """Certificate rejected (bad CA signature or outside its validity window)."""


class AuthorizationError(SperanzaError):
    """A requested authorization-record transition was refused."""
