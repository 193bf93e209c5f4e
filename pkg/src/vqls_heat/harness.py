"""Single solves, repetition-averaged sweeps, aggregation and plot-ready files.

Every run seed is derived from a master seed and the run's position in the
sweep, and work is reduced in submission order, so a sweep repeated with the
same master seed writes byte-identical CSV files whatever the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import build_ansatz
from .cost import CostMode
from .errors import NotConvergedError
from .optimizer import OptimizerConfig, SolveResult, minimize
from .problems import (
    LinearProblem,
    classical_solve,
    condition_number,
    fidelity,
    parse_label,
    rescale_solution,
)
from .statevector import sample_count_array

STOPPING_RULES = ("precision", "cost")
SWEEP_KINDS = ("shots", "epsilon", "qubits", "condition")
DEFAULT_RESTARTS = 5
COUNTING_NOTE = ("cost_evaluations counts one exact cost evaluation per iteration plus the "
                 "initial one; parameter-shift gradient work is reported separately")
CONDITION_PRESETS = (0.03, 0.05, 0.1, 1.0, 2.0)

# plot-ready CSV header per sweep kind
CSV_COLUMNS = {
    "shots": ("shots_log10", "precision_log10", "precision_mean", "std", "n"),
    "epsilon": ("inv_epsilon_log10", "mean_evals", "std", "n"),
    "qubits": ("n_qubits", "mean_evals", "std", "n"),
    "condition": ("kappa", "mean_evals", "std", "n"),
}


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic 63-bit seed for the run at ``indices`` under ``master``."""
    if master < 0 or any(i < 0 for i in indices):
        raise ValueError("seeds and run indices must be non-negative")
    word = np.random.SeedSequence([master, *indices]).generate_state(1, np.uint64)[0]
    return int(word >> np.uint64(1))


def cost_threshold(epsilon: float, rule: str, n_qubits: int, kappa: float) -> float:
    """Local-cost stopping threshold for a requested ``epsilon``.

    ``"precision"`` reads epsilon as a bound on the trace distance between the
    normalised trial state and the true solution; since that distance is at
    most ``kappa * sqrt(n * C_local)``, stopping at ``epsilon**2 / (n kappa**2)``
    guarantees it.  ``"cost"`` uses epsilon as the cost threshold itself.
    """
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    if rule == "cost":
        return float(epsilon)
    if rule == "precision":
        return float(epsilon**2 / (n_qubits * kappa**2))
    raise ValueError(f"stopping rule must be one of {STOPPING_RULES}, got {rule!r}")


@dataclass(frozen=True)
class SolveSettings:
    """Everything a single solve needs apart from its seed."""

    label: str
    epsilon: float = 0.05
    stopping_rule: str = "precision"
    layers: int | None = None
    layout: str = "pairs"
    method: str = "momentum"
    learning_rate: float | None = None
    momentum_beta: float = OptimizerConfig.momentum_beta
    max_iterations: int = 50000
    cost_mode: str = "analytic"

    def __post_init__(self):
        if self.stopping_rule not in STOPPING_RULES:
            raise ValueError(f"stopping rule must be one of {STOPPING_RULES}, got {self.stopping_rule!r}")
        CostMode.parse(self.cost_mode)
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")

    def as_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=32)
def _problem_and_kappa(label: str) -> tuple[LinearProblem, float]:
    problem = parse_label(label)
    return problem, condition_number(problem)


def _resolve(settings: SolveSettings, problem: LinearProblem | None = None):
    if problem is None:
        problem, kappa = _problem_and_kappa(settings.label)
    else:
        kappa = condition_number(problem)
    spec = build_ansatz(problem.n_qubits, settings.layers, settings.layout)
    threshold = cost_threshold(settings.epsilon, settings.stopping_rule, problem.n_qubits, kappa)
    return problem, kappa, spec, threshold


def _config(settings: SolveSettings, threshold: float, seed: int) -> OptimizerConfig:
    return OptimizerConfig(method=settings.method, learning_rate=settings.learning_rate,
                           momentum_beta=settings.momentum_beta, max_iterations=settings.max_iterations,
                           epsilon=threshold, seed=seed)


def run_summary(result: SolveResult) -> dict:
    return {
        "seed": result.config.seed,
        "converged": result.converged,
        "iterations": result.iterations,
        "cost_evaluations": result.cost_evaluations,
        "gradient_evaluations": result.gradient_evaluations,
        "final_cost": result.final_cost,
    }


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values).ravel()]


@dataclass(eq=False)
class SolveOutcome:
    settings: SolveSettings
    problem: LinearProblem
    kappa: float
    cost_threshold: float
    seed: int
    result: SolveResult
    attempts: list[dict]
    reference: np.ndarray
    fidelity: float

    @property
    def converged(self) -> bool:
        return self.result.converged

    @property
    def is_heat(self) -> bool:
        return self.problem.label.startswith("heat")

    def temperatures(self) -> np.ndarray:
        return rescale_solution(self.result.solution_state, self.problem)

    def as_dict(self, timestamp: str | None = None) -> dict:
        r = self.result
        out = {
            "converged": r.converged,
            "iterations": r.iterations,
            "cost_evaluations": r.cost_evaluations,
            "gradient_evaluations": r.gradient_evaluations,
            "final_cost": r.final_cost,
            "epsilon": self.settings.epsilon,
            "stopping_rule": self.settings.stopping_rule,
            "cost_threshold": self.cost_threshold,
            "seed": r.config.seed,
            "master_seed": self.seed,
            "params": _floats(r.final_params),
            "trace": [float(c) for c in r.cost_trace],
            "optimizer": r.config.as_dict(),
            "ansatz": r.spec.as_dict(),
            "cost_mode": self.settings.cost_mode,
            "problem": {
                "label": self.problem.label,
                "n_qubits": self.problem.n_qubits,
                "terms": len(self.problem.decomposition.terms),
                "kappa": self.kappa,
            },
            "fidelity": self.fidelity,
            "attempts": self.attempts,
            "solution_state": _floats(r.solution_state.amplitudes.real),
            "counting": COUNTING_NOTE,
            "tool": {"name": "vqls-heat", "version": __version__},
        }
        if self.is_heat:
            out["temperatures"] = {"quantum": _floats(self.temperatures()),
                                   "classical": _floats(self.reference)}
        if timestamp is not None:
            out["created"] = timestamp
        return out


def run_solve(settings: SolveSettings, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
              problem: LinearProblem | None = None) -> SolveOutcome:
    """Solve ``settings.label`` (or ``problem``), restarting from fresh seeds on failure.

    The first attempt uses ``seed`` itself; restart ``r`` uses
    ``derive_seed(seed, r)``.  The outcome of the last attempt is reported.
    """
    if restarts < 0:
        raise ValueError("restarts must be non-negative")
    problem, kappa, spec, threshold = _resolve(settings, problem)
    reference = classical_solve(problem)
    attempts = []
    for attempt in range(restarts + 1):
        run_seed = seed if attempt == 0 else derive_seed(seed, attempt)
        mode = CostMode.parse(settings.cost_mode, seed=run_seed)
        result = minimize(problem, spec, _config(settings, threshold, run_seed), mode)
        attempts.append(run_summary(result))
        if result.converged:
            break
    return SolveOutcome(settings, problem, kappa, threshold, seed, result, attempts, reference,
                        fidelity(result.solution_state, reference))


def slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", text).strip("_")


def _timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_json(path: Path, payload: dict) -> Path:
    with _open_for_write(path) as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header, rows) -> Path:
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_solve(outcome: SolveOutcome, out_dir, formats=("csv", "json"), trace: bool = False,
                stem: str | None = None) -> list[Path]:
    """Result JSON, plus temperature and cost-trace CSVs when requested."""
    out_dir = Path(out_dir)
    stem = stem or f"solve_{slug(outcome.problem.label)}"
    written = []
    if "json" in formats:
        written.append(_write_json(out_dir / f"{stem}.json", outcome.as_dict(_timestamp())))
    if "csv" in formats and outcome.is_heat:
        rows = zip(range(outcome.reference.size), outcome.temperatures(), outcome.reference)
        written.append(_write_csv(out_dir / f"{stem}_temperatures.csv",
                                  ("index", "quantum", "classical"), rows))
    if trace:
        r = outcome.result
        mode = CostMode.parse(outcome.settings.cost_mode)
        shots = "" if mode.is_analytic else mode.shots
        rows = ((i, c, num, den, mode.describe(), shots)
                for i, (c, (num, den)) in enumerate(zip(r.cost_trace, r.sums_trace)))
        written.append(_write_csv(out_dir / f"{stem}_trace.csv",
                                  ("iteration", "cost", "numerator", "denominator", "mode", "shots"), rows))
    return written


# ---------------------------------------------------------------------------
# sweeps


def with_option(label: str, key: str, value) -> str:
    """``label`` with option ``key`` set to ``value`` (added or replaced)."""
    family, _, rest = label.partition(":")
    items = [item for item in rest.split(",") if item and item.partition("=")[0].strip() != key]
    items.append(f"{key}={value:g}" if isinstance(value, float) else f"{key}={value}")
    return f"{family}:{','.join(items)}"


def label_for_qubits(label: str, n: int) -> str:
    if label.startswith("heat2d"):
        if n % 2:
            raise ValueError(f"2D heat problems need an even qubit count, got {n}")
        return with_option(label, "npd", n // 2)
    return with_option(label, "n", n)


@dataclass(frozen=True)
class SweepConfig:
    kind: str
    points: tuple
    base: SolveSettings
    repetitions: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"sweep kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        points = tuple(float(p) for p in self.points)
        if not points:
            raise ValueError("a sweep needs at least one point")
        steps = np.diff(points)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"sweep points must be strictly monotone, got {points}")
        if self.kind == "epsilon" and not all(0 < p < 0.5 for p in points):
            raise ValueError("epsilon points must lie in (0, 0.5)")
        if self.kind in ("shots", "qubits") and not all(p == int(p) and p >= 1 for p in points):
            raise ValueError(f"{self.kind} points must be positive integers")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.master_seed < 0:
            raise ValueError("master seed must be non-negative")
        object.__setattr__(self, "points", points)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "points": list(self.points), "repetitions": self.repetitions,
                "master_seed": self.master_seed, "base": self.base.as_dict()}

    def settings_at(self, point: float) -> SolveSettings:
        if self.kind == "epsilon":
            return replace(self.base, epsilon=point)
        if self.kind == "qubits":
            return replace(self.base, label=label_for_qubits(self.base.label, int(point)))
        if self.kind == "condition":
            return replace(self.base, label=with_option(self.base.label, "c0", point))
        return self.base


def _mean_std(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1))


@dataclass
class SweepRecord:
    point: float
    runs: list[dict]
    metric_name: str
    extra: dict = field(default_factory=dict)

    def metric_values(self) -> list[float]:
        return [r["metric"] for r in self.runs if r["converged"]]

    @property
    def converged_count(self) -> int:
        return len(self.metric_values())

    @property
    def mean_metric(self) -> float:
        return _mean_std(self.metric_values())[0]

    @property
    def std(self) -> float:
        return _mean_std(self.metric_values())[1]

    @property
    def flagged(self) -> bool:
        return self.converged_count == 0


def aggregate(records: list[SweepRecord]) -> list[dict]:
    """Per-point mean, sample standard deviation and converged count.

    Non-converged runs are excluded; a point with none left is flagged.
    """
    names = {r.metric_name for r in records}
    if len(names) > 1:
        raise ValueError(f"cannot aggregate records with different metrics: {sorted(names)}")
    rows = []
    for rec in records:
        mean, std = _mean_std(rec.metric_values())
        rows.append({"point": rec.point, "mean": mean, "std": std,
                     "converged_count": rec.converged_count, "runs": len(rec.runs),
                     "flagged": rec.converged_count == 0, **rec.extra})
    return rows


def linear_fit(x, y) -> dict:
    """Least-squares line through finite ``(x, y)`` pairs with its R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2:
        return {"slope": None, "intercept": None, "r2": None, "points": int(x.size)}
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / total if total > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2, "points": int(x.size)}


@dataclass
class SweepResult:
    config: SweepConfig
    records: list[SweepRecord]
    base_solve: dict | None = None

    @property
    def metric_name(self) -> str:
        return "tv_distance" if self.config.kind == "shots" else "cost_evaluations"

    def plot_axes(self) -> tuple[np.ndarray, np.ndarray]:
        rows = aggregate(self.records)
        mean = np.array([r["mean"] for r in rows])
        kind = self.config.kind
        if kind == "shots":
            x = np.log10([r["point"] for r in rows])
            with np.errstate(divide="ignore"):
                return x, np.log10(mean)
        if kind == "epsilon":
            return -np.log10([r["point"] for r in rows]), mean
        if kind == "condition":
            return np.array([r["kappa"] for r in rows]), mean
        return np.array([r["point"] for r in rows]), mean

    def fit(self) -> dict:
        return linear_fit(*self.plot_axes())

    def csv_rows(self) -> list[tuple]:
        x, y = self.plot_axes()
        rows = []
        for xi, yi, agg in zip(x, y, aggregate(self.records)):
            tail = (agg["std"], agg["converged_count"])
            if self.config.kind == "shots":
                rows.append((xi, yi, agg["mean"]) + tail)
            elif self.config.kind == "qubits":
                rows.append((int(xi), yi) + tail)
            else:
                rows.append((xi, yi) + tail)
        return rows

    def as_dict(self, timestamp: str | None = None) -> dict:
        points = []
        for rec, agg in zip(self.records, aggregate(self.records)):
            points.append({"point": rec.point, "extra": rec.extra, "runs": rec.runs,
                           "mean": _finite_or_none(agg["mean"]), "std": _finite_or_none(agg["std"]),
                           "converged_count": agg["converged_count"], "flagged": agg["flagged"]})
        fit = {k: _finite_or_none(v) if isinstance(v, float) else v for k, v in self.fit().items()}
        out = {
            "kind": self.config.kind,
            "metric": self.metric_name,
            "config": self.config.as_dict(),
            "fit": fit,
            "points": points,
            "counting": COUNTING_NOTE,
            "tool": {"name": "vqls-heat", "version": __version__},
        }
        if self.base_solve is not None:
            out["base_solve"] = self.base_solve
        if timestamp is not None:
            out["created"] = timestamp
        return out


def _finite_or_none(value):
    return float(value) if value is not None and math.isfinite(value) else None


def records_from_json(payload: dict) -> list[SweepRecord]:
    """Rebuild records from a sweep JSON document so aggregates can be recomputed."""
    return [SweepRecord(p["point"], p["runs"], payload["metric"], p.get("extra", {}))
            for p in payload["points"]]


def _solve_task(task: tuple[SolveSettings, int]) -> dict:
    settings, seed = task
    problem, kappa, spec, threshold = _resolve(settings)
    mode = CostMode.parse(settings.cost_mode, seed=seed)
    result = minimize(problem, spec, _config(settings, threshold, seed), mode)
    summary = run_summary(result)
    summary["cost_threshold"] = threshold
    summary["metric"] = result.cost_evaluations if result.converged else None
    return summary


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order, so the reduction ignores completion order
        return list(pool.map(fn, tasks, chunksize=1))


def sampled_tv_distance(probs: np.ndarray, shots: int, seed: int) -> float:
    counts = sample_count_array(probs, shots, seed)
    return float(0.5 * np.abs(counts / shots - probs).sum())


def run_sweep(config: SweepConfig, workers: int = 1, restarts: int = DEFAULT_RESTARTS) -> SweepResult:
    """Run every (point, repetition) of ``config`` and collect per-point records."""
    if config.kind == "shots":
        return _shots_sweep(config, restarts)
    tasks, extras = [], []
    for i, point in enumerate(config.points):
        settings = config.settings_at(point)
        _, kappa, _, threshold = _resolve(settings)
        extras.append({"label": settings.label, "kappa": kappa, "cost_threshold": threshold})
        tasks.extend((settings, derive_seed(config.master_seed, i, r)) for r in range(config.repetitions))
    summaries = _map(_solve_task, tasks, workers)
    reps = config.repetitions
    records = [SweepRecord(point, summaries[i * reps:(i + 1) * reps], "cost_evaluations", extras[i])
               for i, point in enumerate(config.points)]
    return SweepResult(config, records)


def _shots_sweep(config: SweepConfig, restarts: int) -> SweepResult:
    base = replace(config.base, cost_mode="analytic")
    outcome = run_solve(base, derive_seed(config.master_seed, 0), restarts)
    if not outcome.converged:
        raise NotConvergedError(
            f"base solve of {base.label} did not converge after {len(outcome.attempts)} attempts "
            f"(final cost {outcome.result.final_cost:.3e} > {outcome.cost_threshold:.3e})")
    probs = outcome.result.solution_state.probabilities
    records = []
    for i, shots in enumerate(config.points):
        runs = []
        for r in range(config.repetitions):
            seed = derive_seed(config.master_seed, i + 1, r)
            runs.append({"seed": seed, "converged": True, "metric": sampled_tv_distance(probs, int(shots), seed)})
        records.append(SweepRecord(shots, runs, "tv_distance", {"shots": int(shots)}))
    base_solve = {"label": base.label, "seed": outcome.result.config.seed,
                  "final_cost": outcome.result.final_cost, "fidelity": outcome.fidelity,
                  "probabilities": _floats(probs)}
    return SweepResult(config, records, base_solve)


def emit_outputs(result: SweepResult, out_dir, formats=("csv", "json"), stem: str | None = None) -> list[Path]:
    """Write the plot-ready CSV and/or the provenance JSON; returns the paths."""
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown output formats {sorted(unknown)}")
    out_dir = Path(out_dir)
    stem = stem or f"sweep_{result.config.kind}_{slug(result.config.base.label)}"
    written = []
    if "csv" in formats:
        written.append(_write_csv(out_dir / f"{stem}.csv", CSV_COLUMNS[result.config.kind],
                                  result.csv_rows()))
    if "json" in formats:
        written.append(_write_json(out_dir / f"{stem}.json", result.as_dict(_timestamp())))
    return written
