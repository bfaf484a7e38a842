from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class SolutionComposition:
    """Concentrations (mmol/L) of one phantom solution."""

    c_hno3: float
    c_h3po4: float
    c_koh: float
    total_volume: float = 40.0

    def __post_init__(self):
        for name in ("c_hno3", "c_h3po4", "c_koh"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")
        if not self.total_volume > 0:
            raise ValidationError(f"total_volume must be > 0, got {self.total_volume}")

    def as_tuple(self):
        return (self.c_hno3, self.c_h3po4, self.c_koh)
