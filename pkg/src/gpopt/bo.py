"""The sequential Bayesian optimization loop.

Everything the surrogate sees lives on the unit cube with normalized
outputs; :class:`DataScaler` and :class:`ScaledModel` translate back so
acquisitions work on the original objective scale. Objectives are minimized
internally; maximization objectives are negated on the way in and restored
in the history.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from gpopt.acquisition import (
    SINGLE_OBJECTIVE_KINDS,
    AcquisitionSpec,
    MarginalizedAcquisition,
    ModelAcquisition,
    sample_min_values,
)
from gpopt.design import design_to_unit, tplhd
from gpopt.domain import Domain
from gpopt.errors import ConfigurationError, EvaluationError
from gpopt.gp import canonical_family, hmc_sample, optimize_hyperparameters
from gpopt.optimizer import OptimizerConfig, optimize_acquisition
from gpopt.pareto import (
    CellDecomposition,
    ParetoFront,
    cell_decomposition,
    default_ideal,
    default_reference,
    hypervolume,
    pareto_front,
)

STD_FLOOR = 1e-12


# --- scaling -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DataScaler:
    """Unit-cube inputs and per-column standardized outputs (population std)."""

    domain: Domain
    output_means: np.ndarray
    output_stds: np.ndarray

    @classmethod
    def fit(cls, domain: Domain, Y) -> "DataScaler":
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        means = Y.mean(axis=0)
        flat = np.ptp(Y, axis=0) == 0
        # a constant column must normalize to exact zeros
        means = np.where(flat, Y[0], means)
        stds = np.maximum(Y.std(axis=0), STD_FLOOR)
        return cls(domain, means, stds)

    def normalize_inputs(self, X) -> np.ndarray:
        return self.domain.to_unit(X)

    def denormalize_inputs(self, U) -> np.ndarray:
        return self.domain.from_unit(U)

    def normalize_outputs(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        return (Y - self.output_means) / self.output_stds

    def denormalize_outputs(self, Yn) -> np.ndarray:
        return np.asarray(Yn, dtype=float) * self.output_stds + self.output_means

    def denormalize_prediction(self, mean, var, column: int = 0):
        s = self.output_stds[column]
        return mean * s + self.output_means[column], var * s * s


class ScaledModel:
    """Wraps a GP fitted on normalized outputs so predictions come out in original units.

    Inputs stay on the unit cube.
    """

    def __init__(self, model, mean: float, std: float):
        self.model = model
        self.mean = float(mean)
        self.std = float(std)

    @property
    def X(self):
        return self.model.X

    def predict(self, U, include_noise: bool = False):
        mu, var = self.model.predict(U, include_noise)
        return mu * self.std + self.mean, var * self.std * self.std

    def predict_gradient(self, u):
        dmu, dvar = self.model.predict_gradient(u)
        return dmu * self.std, dvar * self.std * self.std


# --- problem and configuration ----------------------------------------------


@dataclass(frozen=True)
class Objective:
    """An expensive black box ``x -> (objectives, constraints)``.

    Constraints are feasible when ``c <= threshold``. ``senses`` holds
    ``"min"`` or ``"max"`` per objective.
    """

    func: Callable
    n_objectives: int = 1
    n_constraints: int = 0
    senses: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_objectives < 1 or self.n_constraints < 0:
            raise ConfigurationError("need at least one objective and a non-negative constraint count")
        senses = self.senses or ("min",) * self.n_objectives
        senses = tuple(s.lower() for s in senses)
        if len(senses) != self.n_objectives or not set(senses) <= {"min", "max"}:
            raise ConfigurationError("senses must list 'min' or 'max' for every objective")
        object.__setattr__(self, "senses", senses)

    @property
    def signs(self) -> np.ndarray:
        return np.array([1.0 if s == "min" else -1.0 for s in self.senses])

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray]:
        out = self.func(x)
        if isinstance(out, tuple) and len(out) == 2:
            y, c = out
        else:
            y, c = out, ()
        y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        c = np.atleast_1d(np.asarray(c, dtype=float)).ravel()
        if y.size != self.n_objectives or c.size != self.n_constraints:
            raise ConfigurationError(
                f"objective returned {y.size} objectives / {c.size} constraints, "
                f"declared {self.n_objectives} / {self.n_constraints}"
            )
        return y, c


@dataclass(frozen=True)
class HMCConfig:
    n_samples: int = 10
    step_size: float = 0.05
    leapfrog_steps: int = 10
    burn_in: int = 20
    thin: int = 2

    def __post_init__(self):
        if self.n_samples < 1 or self.leapfrog_steps < 1 or self.thin < 1 or self.burn_in < 0:
            raise ConfigurationError("invalid HMC settings")
        if not self.step_size > 0:
            raise ConfigurationError("HMC step_size must be positive")


@dataclass(frozen=True)
class BOConfig:
    budget: int = 20
    initial_design_size: int = 10
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    hmc: HMCConfig | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    kernel: str = "matern52"
    restarts: int = 3
    seed: int = 0
    clip_nonfinite: bool = False

    def __post_init__(self):
        if self.budget < 0 or self.initial_design_size < 1 or self.restarts < 1:
            raise ConfigurationError("budget >= 0, initial_design_size >= 1 and restarts >= 1 are required")
        try:
            object.__setattr__(self, "kernel", canonical_family(self.kernel))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "initial_design_size": self.initial_design_size,
            "acquisition": self.acquisition.to_dict(),
            "hmc": None if self.hmc is None else asdict(self.hmc),
            "optimizer": self.optimizer.to_dict(),
            "kernel": self.kernel,
            "restarts": self.restarts,
            "seed": self.seed,
            "clip_nonfinite": self.clip_nonfinite,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BOConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            if isinstance(data.get("acquisition"), dict):
                data["acquisition"] = AcquisitionSpec.from_dict(data["acquisition"])
            if isinstance(data.get("hmc"), dict):
                data["hmc"] = HMCConfig(**data["hmc"])
            if isinstance(data.get("optimizer"), dict):
                data["optimizer"] = OptimizerConfig(**data["optimizer"])
            return cls(**data)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from None


# --- history -----------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationRecord:
    iteration: int
    phase: str  # "init" or "bo"
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray
    incumbent: float  # best feasible value, or feasible-front hypervolume
    lml: float
    wall_time: float


@dataclass
class BOHistory:
    domain: Domain
    objective_senses: tuple[str, ...]
    n_constraints: int
    seed: int
    config: dict
    U: list = field(default_factory=list)
    records: list[EvaluationRecord] = field(default_factory=list)

    @property
    def X(self) -> np.ndarray:
        return np.array([r.x for r in self.records], dtype=float).reshape(len(self.records), self.domain.dimension)

    @property
    def Y(self) -> np.ndarray:
        return np.array([r.y for r in self.records], dtype=float).reshape(len(self.records), len(self.objective_senses))

    @property
    def C(self) -> np.ndarray:
        return np.array([r.c for r in self.records], dtype=float).reshape(len(self.records), self.n_constraints)

    @property
    def incumbents(self) -> np.ndarray:
        return np.array([r.incumbent for r in self.records])

    def __len__(self):
        return len(self.records)

    @property
    def signs(self) -> np.ndarray:
        return np.array([1.0 if s == "min" else -1.0 for s in self.objective_senses])


@dataclass(frozen=True, eq=False)
class Incumbent:
    """Best feasible point (one objective) or feasible Pareto front (several).

    ``feasible`` is False when no row satisfies every constraint.
    """

    feasible: bool
    index: int | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    front: ParetoFront | None = None
    front_indices: tuple[int, ...] = ()


def feasible_mask(C, threshold: float = 0.0) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    return np.all(C <= threshold, axis=1)


def _front_indices(Ymin: np.ndarray, rows: np.ndarray) -> tuple[ParetoFront, tuple[int, ...]]:
    front = pareto_front(Ymin[rows])
    idx = []
    for p in front.points:
        hits = rows[np.all(Ymin[rows] == p, axis=1)]
        idx.append(int(hits[0]))
    return front, tuple(idx)


def incumbent(history: BOHistory, threshold: float = 0.0) -> Incumbent:
    if len(history) == 0:
        raise ValueError("incumbent needs a non-empty history")
    Ymin = history.Y * history.signs
    rows = np.flatnonzero(feasible_mask(history.C, threshold))
    if rows.size == 0:
        return Incumbent(False)
    if Ymin.shape[1] == 1:
        best = int(rows[np.argmin(Ymin[rows, 0])])
        return Incumbent(True, best, history.X[best], history.Y[best])
    front, idx = _front_indices(Ymin, rows)
    return Incumbent(True, front=ParetoFront(front.points * history.signs), front_indices=idx)


def _progress_value(Ymin, C, threshold, reference) -> float:
    rows = feasible_mask(C, threshold)
    if Ymin.shape[1] == 1:
        return float(Ymin[rows, 0].min()) if rows.any() else float("nan")
    if not rows.any():
        return 0.0
    pts = Ymin[rows]
    pts = pts[np.all(pts < reference, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    return hypervolume(pareto_front(pts), reference)


# --- the loop ----------------------------------------------------------------


def _validate(objective: Objective, config: BOConfig):
    kind = config.acquisition.kind
    m, q = objective.n_objectives, objective.n_constraints
    if kind in SINGLE_OBJECTIVE_KINDS and m > 1:
        raise ConfigurationError(f"{kind} is single-objective but the problem has {m} objectives")
    if kind == "HvPoI" and m not in (2, 3):
        raise ConfigurationError(f"HvPoI needs 2 or 3 objectives, the problem has {m}")
    if kind == "PoF" and q == 0:
        raise ConfigurationError("PoF needs at least one constraint")
    ref = config.acquisition.reference
    if ref is not None and len(ref) != m:
        raise ConfigurationError("reference point length does not match the objective count")


class _Loop:
    def __init__(self, objective: Objective, domain: Domain, config: BOConfig):
        self.objective = objective
        self.domain = domain
        self.unit = Domain.unit(domain.dimension)
        self.config = config
        self.spec = config.acquisition
        self.rng = np.random.default_rng(config.seed)
        self.signs = objective.signs
        self.history = BOHistory(
            domain, objective.senses, objective.n_constraints, config.seed, config.to_dict()
        )
        self.U: list[np.ndarray] = []
        self.Ymin: list[np.ndarray] = []
        self.C: list[np.ndarray] = []

    # reference used for the recorded hypervolume column
    def _report_reference(self, Ymin):
        if self.spec.reference is not None:
            return np.asarray(self.spec.reference, dtype=float)
        return default_reference(Ymin)

    def evaluate(self, u, phase, lml, started):
        x = self.domain.from_unit(u)
        y, c = self.objective(x)
        y_min = y * self.signs
        if not (np.all(np.isfinite(y_min)) and np.all(np.isfinite(c))):
            if not self.config.clip_nonfinite or not self.Ymin:
                raise EvaluationError(
                    f"objective returned a non-finite value at x={x.tolist()}", x=x, history=self.history
                )
            worst_y = np.max(np.array(self.Ymin), axis=0)
            y_min = np.where(np.isfinite(y_min), y_min, worst_y)
            if c.size:
                worst_c = np.max(np.array(self.C), axis=0)
                c = np.where(np.isfinite(c), c, worst_c)
        self.U.append(np.asarray(u, dtype=float))
        self.Ymin.append(y_min)
        self.C.append(c)
        Ymin = np.array(self.Ymin)
        C = np.array(self.C).reshape(len(self.C), -1)
        progress = _progress_value(
            Ymin, C, self.spec.pof_threshold, self._report_reference(Ymin) if Ymin.shape[1] > 1 else None
        )
        self.history.U.append(np.asarray(u, dtype=float))
        self.history.records.append(
            EvaluationRecord(
                iteration=len(self.history.records),
                phase=phase,
                x=x,
                y=y_min * self.signs,
                c=c,
                incumbent=progress,
                lml=lml,
                wall_time=time.perf_counter() - started,
            )
        )

    def _fit_outputs(self, U, columns):
        """Fit one model per output column; returns (list of model sets, lml of the first)."""
        cfg = self.config
        n_sets = cfg.hmc.n_samples if cfg.hmc else 1
        per_output = []
        lml = float("nan")
        for j, col in enumerate(columns):
            scaler = DataScaler.fit(self.unit, col)
            yn = scaler.normalize_outputs(col[:, None])[:, 0]
            mean, std = scaler.output_means[0], scaler.output_stds[0]
            if cfg.hmc:
                h = cfg.hmc
                samples = hmc_sample(
                    U, yn, cfg.kernel, h.n_samples, h.step_size, h.leapfrog_steps, h.burn_in, h.thin, self.rng
                )
                models = [ScaledModel(s.fit(U, yn, cfg.kernel), mean, std) for s in samples]
                if j == 0:
                    lml = float(np.mean([m.model.log_marginal_likelihood() for m in models]))
            else:
                gp = optimize_hyperparameters(U, yn, cfg.kernel, cfg.restarts, self.rng)
                models = [ScaledModel(gp, mean, std)] * n_sets
                if j == 0:
                    lml = gp.log_marginal_likelihood()
            per_output.append(models)
        return per_output, lml

    def _build(self, objective_models, constraint_models, Ymin, C):
        spec = self.spec
        feasible = feasible_mask(C, spec.pof_threshold) if C.shape[1] else np.ones(len(Ymin), bool)
        has_constraints = bool(constraint_models)
        if spec.kind == "PoF":
            return ModelAcquisition(spec, objective_models, constraint_models, feasibility_only=True)
        if has_constraints and not feasible.any():
            return ModelAcquisition(spec, objective_models, constraint_models, feasibility_only=True)
        if spec.kind in SINGLE_OBJECTIVE_KINDS:
            f_best = float(Ymin[feasible, 0].min())
            min_values = None
            if spec.kind == "MES":
                min_values = sample_min_values(
                    objective_models[0], self.unit, spec.mes_samples, spec.mes_grid_size, self.rng
                )
            return ModelAcquisition(
                spec, objective_models, constraint_models, f_best=f_best, min_values=min_values
            )
        # HvPoI
        reference = (
            np.asarray(spec.reference, dtype=float) if spec.reference is not None else default_reference(Ymin)
        )
        ideal = np.asarray(spec.ideal, dtype=float) if spec.ideal is not None else default_ideal(Ymin)
        pts = Ymin[feasible]
        pts = pts[np.all(pts < reference, axis=1)]
        if pts.shape[0]:
            front = pareto_front(pts)
            ideal = np.minimum(ideal, front.points.min(axis=0) - 1e-9 * (1.0 + np.abs(front.points.min(axis=0))))
            decomposition = cell_decomposition(front, reference, ideal)
        else:
            if has_constraints:
                return ModelAcquisition(spec, objective_models, constraint_models, feasibility_only=True)
            m = Ymin.shape[1]
            front = ParetoFront(np.empty((0, m)))
            ideal = np.minimum(ideal, reference - 1e-9 * (1.0 + np.abs(reference)))
            decomposition = CellDecomposition(ideal[None, :], reference[None, :], reference, ideal)
        return ModelAcquisition(
            spec, objective_models, constraint_models, front=front, decomposition=decomposition
        )

    def _warm_starts(self, U, Ymin, C):
        feasible = feasible_mask(C, self.spec.pof_threshold) if C.shape[1] else np.ones(len(Ymin), bool)
        rows = np.flatnonzero(feasible)
        if rows.size == 0:
            return None
        if Ymin.shape[1] == 1:
            return U[rows[np.argmin(Ymin[rows, 0])]][None, :]
        _, idx = _front_indices(Ymin, rows)
        return U[list(idx)]

    def step(self):
        started = time.perf_counter()
        U = np.array(self.U)
        Ymin = np.array(self.Ymin)
        C = np.array(self.C).reshape(len(self.C), -1)
        columns = [Ymin[:, j] for j in range(Ymin.shape[1])] + [C[:, j] for j in range(C.shape[1])]
        per_output, lml = self._fit_outputs(U, columns)
        m = Ymin.shape[1]
        n_sets = len(per_output[0])
        members = []
        for s in range(n_sets):
            objective_models = [per_output[j][s] for j in range(m)]
            constraint_models = [per_output[j][s] for j in range(m, len(per_output))]
            members.append(self._build(objective_models, constraint_models, Ymin, C))
        acq = members[0] if n_sets == 1 else MarginalizedAcquisition(members)
        grad_fn = acq.value_and_grad if acq.has_gradient else None
        u_next, _ = optimize_acquisition(
            acq, self.unit, self.config.optimizer, self._warm_starts(U, Ymin, C), grad_fn
        )
        self.evaluate(u_next, "bo", lml, started)

    def run(self) -> BOHistory:
        d = self.domain.dimension
        for u in design_to_unit(tplhd(self.config.initial_design_size, d)):
            self.evaluate(u, "init", float("nan"), time.perf_counter())
        for _ in range(self.config.budget):
            self.step()
        return self.history


def bayesian_optimize(objective: Objective, domain: Domain, config: BOConfig | None = None) -> BOHistory:
    """Run an initial TPLHD design followed by ``config.budget`` BO iterations.

    Raises :class:`~gpopt.errors.EvaluationError` (carrying the partial
    history) when the objective returns NaN/inf and ``clip_nonfinite`` is off.
    """
    config = config or BOConfig()
    _validate(objective, config)
    return _Loop(objective, domain, config).run()
