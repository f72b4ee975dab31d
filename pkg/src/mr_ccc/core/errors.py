"""Exception hierarchy for MR-CCC."""


class MrcccError(Exception):
    """Base class for all MR-CCC errors."""


class DataValidationError(MrcccError, ValueError):
    """Input data violates a structural requirement (shape, finiteness, variance, format)."""


class RankDeficiencyError(DataValidationError):
    """A regression design matrix does not have full column rank."""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class ConfigurationError(MrcccError, ValueError):
    """Settings, manifest or CLI configuration is invalid."""


class SamplerError(MrcccError, ArithmeticError):
    """Numerical failure inside a Gibbs update.

    Attributes:
        step: Label of the update that failed (e.g. ``"step 3: sigma2_X"``).
        iteration: Sweep index when raised from a running chain, else None.
    """

    def __init__(self, message: str, step: str, iteration: int | None = None):
        self.step = step
        self.iteration = iteration
        location = f"{step}" if iteration is None else f"iteration {iteration}, {step}"
        super().__init__(f"{message} ({location})")

    def at_iteration(self, iteration: int) -> "SamplerError":
        """Return a copy of this error tagged with the sweep index."""
        message = str(self).rsplit(" (", 1)[0]
        return SamplerError(message, step=self.step, iteration=iteration)


class TripletError(MrcccError):
    """A component failed while screening one ligand-receptor-pathway triplet."""

    def __init__(self, triplet_id: str, cause: Exception):
        self.triplet_id = triplet_id
        self.cause = cause
        super().__init__(f"{triplet_id}: {cause}")
