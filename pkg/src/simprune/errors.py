"""Exception types shared across the package."""


class FormatError(Exception):
    """Raised when a weights file or manifest cannot be parsed or fails validation."""


class ManifestError(FormatError):
    """Raised when a network manifest is structurally valid JSON but semantically broken."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine exhausts its iteration cap.

    Carries the last observed residual so callers can report how far the
    iteration was from its stopping tolerance.
    """

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual
