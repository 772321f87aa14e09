"""Exception types shared across modules."""


class UsageError(ValueError):
    """Bad input: malformed weights, mismatched shapes, unknown descriptors."""


class UnsupportedCase(UsageError):
    """The requested case has no constructive routine in the catalog."""


class CertificateNotFound(RuntimeError):
    """A constructive certificate could not be produced for the given input."""
