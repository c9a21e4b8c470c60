from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class Tolerances:
    """Relative thresholds shared by the analysis modules."""

    eps_zero: float = 1e-9
    eps_area: float = 1e-8
    eps_norm: float = 1e-9
    eps_rec: float = 1e-8
    winding_residual: float = 1e-6

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            from .errors import ConfigError

            raise ConfigError(f"unknown tolerance key(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})


DEFAULT = Tolerances()
