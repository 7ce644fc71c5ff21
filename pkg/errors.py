class AcForgeError(Exception):
    """Base class for every domain error raised by acforge."""


# ---------------- MODEL ---------------- #

class ElementError(AcForgeError):
    pass


class LinkError(AcForgeError):
    pass


# ---------------- STORE ---------------- #

class StoreError(AcForgeError):
    pass


class NotFoundError(StoreError):
    pass


class AlreadyExistsError(StoreError):
    pass


class KindMismatchError(StoreError):
    pass


class StillReferencedError(StoreError):
    pass


class InvariantViolationError(StoreError):
    pass


class CaseLockedError(StoreError):
    pass


class DuplicateTimestampError(StoreError):
    pass


# ---------------- DATA / TECHNIQUES ---------------- #

class DatasetError(AcForgeError):
    pass


class TechniqueError(AcForgeError):
    pass


# ---------------- OUTPUT ---------------- #

class RenderError(AcForgeError):
    pass


class ValidationFailedError(AcForgeError):
    """Raised when an export is refused because the case has validation errors."""

    def __init__(self, findings):
        self.findings = list(findings)
        rules = sorted({f.rule for f in self.findings})
        super().__init__(
            f"case has {len(self.findings)} validation error(s) ({', '.join(rules)}); export refused"
        )
