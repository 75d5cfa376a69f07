"""Analytic benchmark problems used by the CLI and the acceptance runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gpopt.bo import Objective
from gpopt.domain import Domain
from gpopt.errors import ConfigurationError


@dataclass(frozen=True)
class Problem:
    name: str
    domain: Domain
    objective: Objective
    known_optimum: float | None = None
    reference: tuple[float, ...] | None = None
    description: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def n_objectives(self) -> int:
        return self.objective.n_objectives

    @property
    def n_constraints(self) -> int:
        return self.objective.n_constraints


def branin(x) -> float:
    x1, x2 = float(x[0]), float(x[1])
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (x2 - b * x1 * x1 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * math.cos(x1) + 10.0


def quadratic1d(x) -> float:
    return (float(x[0]) - 0.3) ** 2


def six_hump_camel(x) -> float:
    x1, x2 = float(x[0]), float(x[1])
    return (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2 + x1 * x2 + (-4.0 + 4.0 * x2**2) * x2**2


def schaffer(x) -> np.ndarray:
    x1 = float(x[0])
    return np.array([x1 * x1, (x1 - 2.0) ** 2])


def schaffer_constrained(x):
    """Schaffer N.1 in the first input; feasible when ``x2 >= 0.5``."""
    return schaffer(x), np.array([0.5 - float(x[1])])


BRANIN_MINIMUM = 0.397887357729739
SIX_HUMP_MINIMUM = -1.031628453489877


def _build() -> dict[str, Problem]:
    return {
        "branin": Problem(
            "branin",
            Domain.from_bounds([(-5.0, 10.0), (0.0, 15.0)]),
            Objective(branin),
            known_optimum=BRANIN_MINIMUM,
            description="Branin-Hoo, three global minima",
        ),
        "quadratic1d": Problem(
            "quadratic1d",
            Domain.from_bounds([(0.0, 1.0)]),
            Objective(quadratic1d),
            known_optimum=0.0,
            description="(x - 0.3)^2 on [0, 1]",
        ),
        "sixhump": Problem(
            "sixhump",
            Domain.from_bounds([(-3.0, 3.0), (-2.0, 2.0)]),
            Objective(six_hump_camel),
            known_optimum=SIX_HUMP_MINIMUM,
            description="six-hump camel",
        ),
        "schaffer_mo": Problem(
            "schaffer_mo",
            Domain.from_bounds([(-1.0, 3.0)]),
            Objective(schaffer, n_objectives=2),
            description="Schaffer N.1: f1 = x^2, f2 = (x - 2)^2; Pareto set x in [0, 2]",
        ),
        "schaffer_constrained": Problem(
            "schaffer_constrained",
            Domain.from_bounds([(-1.0, 3.0), (0.0, 1.0)]),
            Objective(schaffer_constrained, n_objectives=2, n_constraints=1),
            reference=(10.0, 10.0),
            description="Schaffer N.1 with an inert x2 and constraint 0.5 - x2 <= 0",
        ),
    }


PROBLEMS = _build()


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}; available: {', '.join(sorted(PROBLEMS))}"
        ) from None


def schaffer_oracle_hypervolume(reference=(10.0, 10.0), n: int = 200_001) -> float:
    """Hypervolume of the true Schaffer front from a dense grid over x in [0, 2]."""
    from gpopt.pareto import hypervolume

    x = np.linspace(0.0, 2.0, n)
    # every point of the Pareto set is mutually non-dominated, so no filtering is needed
    front = np.column_stack([x * x, (x - 2.0) ** 2])
    return hypervolume(front, reference)
