"""Bounded continuous optimization domains and the affine map to the unit cube."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gpopt.errors import DimensionError


@dataclass(frozen=True)
class ContinuousParameter:
    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError(f"parameter {self.name!r} needs finite bounds")
        if not self.lower < self.upper:
            raise ValueError(
                f"parameter {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )


class Domain:
    """Ordered box of continuous parameters.

    Boundaries are inclusive. Domains compose with ``+``; parameter names must
    stay unique.
    """

    def __init__(self, parameters: Iterable[ContinuousParameter]):
        self.parameters: tuple[ContinuousParameter, ...] = tuple(parameters)
        if not self.parameters:
            raise ValueError("a domain needs at least one parameter")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        self._lower = np.array([p.lower for p in self.parameters], dtype=float)
        self._upper = np.array([p.upper for p in self.parameters], dtype=float)
        self._lower.flags.writeable = False
        self._upper.flags.writeable = False

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple[float, float]], names: Sequence[str] | None = None):
        if names is None:
            names = [f"x{i + 1}" for i in range(len(bounds))]
        if len(names) != len(bounds):
            raise ValueError("names and bounds differ in length")
        return cls(ContinuousParameter(n, float(lo), float(hi)) for n, (lo, hi) in zip(names, bounds))

    @classmethod
    def unit(cls, d: int) -> "Domain":
        return cls.from_bounds([(0.0, 1.0)] * d)

    @property
    def dimension(self) -> int:
        return len(self.parameters)

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def __len__(self):
        return self.dimension

    def __add__(self, other: "Domain") -> "Domain":
        return Domain(self.parameters + other.parameters)

    def __eq__(self, other):
        return isinstance(other, Domain) and self.parameters == other.parameters

    def __hash__(self):
        return hash(self.parameters)

    def __repr__(self):
        inner = ", ".join(f"{p.name}=[{p.lower:g}, {p.upper:g}]" for p in self.parameters)
        return f"Domain({inner})"

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise DimensionError(f"expected trailing dimension {self.dimension}, got shape {x.shape}")
        return x

    def to_unit(self, x) -> np.ndarray:
        """Map points of the box onto [0, 1]^d (works row-wise on matrices)."""
        x = self._check(x)
        return (x - self._lower) / (self._upper - self._lower)

    def from_unit(self, u) -> np.ndarray:
        u = self._check(u)
        return self._lower + u * (self._upper - self._lower)

    def contains(self, x) -> bool:
        x = self._check(x)
        return bool(np.all((x >= self._lower) & (x <= self._upper)))

    def clip(self, x) -> np.ndarray:
        return np.clip(self._check(x), self._lower, self._upper)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self._lower + self._upper)

    def to_dict(self) -> dict:
        return {"parameters": [{"name": p.name, "lower": p.lower, "upper": p.upper} for p in self.parameters]}

    @classmethod
    def from_dict(cls, data: dict) -> "Domain":
        return cls(
            ContinuousParameter(str(p["name"]), float(p["lower"]), float(p["upper"]))
            for p in data["parameters"]
        )
