"""Gradient descent (momentum or Adam) on the local cost with parameter-shift gradients."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import AnsatzSpec, ansatz_states
from .cost import CostMode, local_cost, local_from_sums, numerator_denominator, u_table_hadamard, weighted_sums
from .errors import DegenerateStateError, NumericalFailure
from .problems import LinearProblem
from .statevector import Statevector

SHIFT = np.pi / 2


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "momentum"
    learning_rate: float | None = None
    momentum_beta: float = 0.995
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_iterations: int = 50000
    epsilon: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("momentum", "adam"):
            raise ValueError(f"optimizer method must be 'momentum' or 'adam', got {self.method!r}")
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", 0.05)
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        for name in ("momentum_beta", "adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class SolveResult:
    final_params: np.ndarray
    final_cost: float
    converged: bool
    iterations: int
    cost_evaluations: int
    gradient_evaluations: int
    cost_trace: list[float] = field(default_factory=list)
    sums_trace: list[tuple[float, float]] = field(default_factory=list)
    solution_state: Statevector | None = None
    config: OptimizerConfig | None = None
    spec: AnsatzSpec | None = None

    def first_passage(self, epsilon: float) -> int | None:
        """Cost evaluations needed until the trace first drops to ``epsilon``."""
        hits = np.flatnonzero(np.asarray(self.cost_trace) <= epsilon)
        return int(hits[0]) + 1 if hits.size else None


def _shift_batch(params: np.ndarray) -> np.ndarray:
    """Rows: ``params``, then ``params + s e_k`` for each k, then ``params - s e_k``."""
    p = params.shape[0]
    eye = np.eye(p) * SHIFT
    return np.vstack([params[None, :], params + eye, params - eye])


def _quotient_gradient(numer, denom, n: int) -> tuple[float, np.ndarray]:
    p = (numer.shape[0] - 1) // 2
    n0, d0 = numer[0], denom[0]
    dn = (numer[1:p + 1] - numer[p + 1:]) / 2
    dd = (denom[1:p + 1] - denom[p + 1:]) / 2
    cost = float(local_from_sums(n0, d0, n))
    grad = -(dn * d0 - n0 * dd) / (2 * n * d0**2)
    return cost, grad


def _sums_shots(problem, spec, batch, mode: CostMode) -> tuple[np.ndarray, np.ndarray]:
    c = problem.decomposition.coefficients
    numer, denom = [], []
    for i, row in enumerate(batch):
        sums = weighted_sums(u_table_hadamard(problem, spec, row, mode.reseeded(mode.seed + i)), c).real
        numer.append(sums[1:].sum())
        denom.append(sums[0])
    return np.array(numer), np.array(denom)


def cost_and_gradient(problem: LinearProblem, spec: AnsatzSpec, params,
                      mode: CostMode | None = None) -> tuple[float, np.ndarray]:
    """Local cost and its parameter-shift gradient at ``params``.

    Numerator and denominator sums are each shifted by +-pi/2 per parameter
    (exact for Ry rotations) and the quotient rule combines them.
    """
    cost, grad, _ = _cost_gradient_sums(problem, spec, params, mode)
    return cost, grad


def _cost_gradient_sums(problem, spec, params, mode):
    mode = mode or CostMode()
    params = spec._check(params)
    batch = _shift_batch(params)
    if mode.is_analytic:
        numer, denom, _ = numerator_denominator(problem, spec, batch)
    else:
        numer, denom = _sums_shots(problem, spec, batch, mode)
    if not denom[0] > 1e-14:
        raise DegenerateStateError(f"<Phi|Phi> = {denom[0]:.3e}: A|x> is numerically null")
    cost, grad = _quotient_gradient(numer, denom, problem.n_qubits)
    return cost, grad, (float(numer[0]), float(denom[0]))


def gradient(problem: LinearProblem, spec: AnsatzSpec, params,
             mode: CostMode | None = None) -> np.ndarray:
    return cost_and_gradient(problem, spec, params, mode)[1]


def initial_params(spec: AnsatzSpec, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0, 2 * np.pi, spec.param_count)


def minimize(problem: LinearProblem, spec: AnsatzSpec, config: OptimizerConfig | None = None,
             mode: CostMode | None = None, params0=None) -> SolveResult:
    """Descend the local cost until it drops to ``config.epsilon``.

    ``cost_evaluations`` counts the initial evaluation plus one per
    iteration; gradient work is tallied separately in ``gradient_evaluations``.
    """
    config = config or OptimizerConfig()
    mode = mode or CostMode()
    params = initial_params(spec, config.seed) if params0 is None else spec._check(params0).copy()
    velocity = np.zeros_like(params)
    second = np.zeros_like(params)
    trace: list[float] = []
    sums: list[tuple[float, float]] = []
    grad_evals = 0
    converged = False
    it = 0
    while True:
        step_mode = mode if mode.is_analytic else mode.reseeded(mode.seed + 7919 * it)
        cost, grad, pair = _cost_gradient_sums(problem, spec, params, step_mode)
        if not np.isfinite(cost):
            raise NumericalFailure("non-finite cost", it)
        trace.append(cost)
        sums.append(pair)
        if cost <= config.epsilon:
            converged = True
            break
        if it >= config.max_iterations:
            break
        if not np.all(np.isfinite(grad)):
            raise NumericalFailure("non-finite gradient", it)
        grad_evals += 1
        it += 1
        with np.errstate(over="ignore", invalid="ignore"):
            if config.method == "momentum":
                velocity = config.momentum_beta * velocity + grad
                params = params - config.learning_rate * velocity
            else:
                velocity = config.adam_beta1 * velocity + (1 - config.adam_beta1) * grad
                second = config.adam_beta2 * second + (1 - config.adam_beta2) * grad**2
                m_hat = velocity / (1 - config.adam_beta1**it)
                v_hat = second / (1 - config.adam_beta2**it)
                params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        if not np.all(np.isfinite(params)):
            raise NumericalFailure("parameter update overflowed", it)
    state = Statevector(spec.n_qubits, ansatz_states(spec, params))
    return SolveResult(
        final_params=params,
        final_cost=trace[-1],
        converged=converged,
        iterations=it,
        cost_evaluations=it + 1,
        gradient_evaluations=grad_evals,
        cost_trace=trace,
        sums_trace=sums,
        solution_state=state,
        config=config,
        spec=spec,
    )


def evaluate(problem: LinearProblem, spec: AnsatzSpec, params, mode: CostMode | None = None) -> float:
    return local_cost(problem, spec, params, mode).value
