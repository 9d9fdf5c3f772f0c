"""Adaptive and fixed-step mirror-prox solvers.

The core loop is the optimistic two-prox update anchored at y_{t-1},

    x_t = argmin_{x in K}  M_t.x + (1/eta_t) D_R(x, y_{t-1}),
    y_t = argmin_{x in K}  g_t.x + (1/eta_t) D_R(x, y_{t-1}),

with the extragradient choices M_t = F(y_{t-1}) and g_t = F(x_t) (fresh
independent samples of each in stochastic mode). Universal mode derives the
step size from the normalized iterate movement,

    Z_t^2  = (||x_t - y_t||^2 + ||x_t - y_{t-1}||^2) / (5 eta_t^2),
    eta_t  = D / sqrt(G0^2 + sum_{tau < t} Z_tau^2),

computed in the geometry's primal norm, so eta_t settles to a constant when
the operator's local variation dies out and decays like 1/sqrt(t) when it
does not; no smoothness or noise constants are supplied. The output is the
uniform average of the x_t iterates.

Every step enforces the movement invariants ||x_t - y_{t-1}|| <= eta_t G and
||y_t - y_{t-1}|| <= eta_t G (hence Z_t <= G), where G bounds the dual norm
of the sampled operator; a violation or a non-finite iterate aborts the run
with the step index and step size in the exception.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .geometry import Geometry, GeometryError
from .operators import StochasticOracle, VIProblem, noisy_eval

__all__ = [
    "SolverConfig",
    "StepState",
    "StepRecord",
    "RunTrace",
    "SolverError",
    "DivergenceError",
    "InvariantError",
    "optimistic_step",
    "update_eta",
    "compute_z_sq",
    "universal_mirror_prox",
    "fixed_step_mirror_prox",
]

_MOVEMENT_TOL = 1e-9


class SolverError(RuntimeError):
    """Run aborted; carries the step index and step size of the failure."""

    def __init__(self, t: int, eta: float, message: str):
        super().__init__(f"aborted at step t={t}, eta={eta:.6g}: {message}")
        self.t = t
        self.eta = eta


class DivergenceError(SolverError):
    """Non-finite iterate or operator value."""


class InvariantError(SolverError):
    """Movement bound violated; indicates a wrong g_bound or a geometry bug."""


@dataclass
class SolverConfig:
    """Iteration budget, step-size prior G0, mode, and trace thinning."""

    iterations: int
    g0: float = 1.0
    mode: str = "universal"
    eta: Optional[float] = None
    record_every: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.g0 > 0:
            raise ValueError("g0 must be positive")
        if self.mode not in ("universal", "fixed-step"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "fixed-step" and not (self.eta is not None and self.eta > 0):
            raise ValueError("fixed-step mode requires eta > 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class StepState:
    """Mutable per-iteration state of the two-prox recursion."""

    y_prev: np.ndarray
    x_t: Optional[np.ndarray] = None
    y_t: Optional[np.ndarray] = None
    m_t: Optional[np.ndarray] = None
    g_t: Optional[np.ndarray] = None
    eta_t: float = 0.0
    z_sq_t: float = 0.0
    z_sq_accum: float = 0.0


@dataclass
class StepRecord:
    """One recorded step; x_prefix is the exact running sum of x_1..x_t."""

    t: int
    eta: float
    z_sq: float
    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    g: np.ndarray
    x_prefix: np.ndarray


@dataclass
class RunTrace:
    """Recorded steps plus exact aggregates of a single run."""

    problem_name: str
    mode: str
    iterations: int
    record_every: int
    g0: float
    g_bound: float
    stochastic: bool
    records: List[StepRecord]
    x_avg: np.ndarray
    duration: float
    eta_first: float
    eta_final: float
    z_sq_total: float
    max_xy_ratio: float
    max_yy_ratio: float
    max_z_sq: float
    fixed_eta: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def final_record(self) -> StepRecord:
        return self.records[-1]


def update_eta(state: StepState, diameter: float, g0: float) -> float:
    """Adaptive step size D / sqrt(G0^2 + accumulated Z^2); D/G0 at t=1."""
    if diameter <= 0 or g0 <= 0:
        raise ValueError("diameter and g0 must be positive")
    return diameter / math.sqrt(g0 * g0 + state.z_sq_accum)


def compute_z_sq(geom: Geometry, x_t, y_t, y_prev, eta_t: float) -> float:
    """Movement statistic (||x_t - y_t||^2 + ||x_t - y_{t-1}||^2) / (5 eta_t^2)."""
    if not eta_t > 0:
        raise ValueError("eta_t must be positive")
    a = geom.primal_norm(np.asarray(x_t, float) - np.asarray(y_t, float))
    b = geom.primal_norm(np.asarray(x_t, float) - np.asarray(y_prev, float))
    return (a * a + b * b) / (5.0 * eta_t * eta_t)


def optimistic_step(geom: Geometry, state: StepState, hint, loss, eta: float):
    """Two prox steps from y_{t-1}: against the hint for x_t, the loss for y_t."""
    x_t = geom.prox_step(state.y_prev, hint, eta)
    y_t = geom.prox_step(state.y_prev, loss, eta)
    return x_t, y_t


def _run_loop(
    problem: VIProblem, config: SolverConfig, oracle: Optional[StochasticOracle]
) -> RunTrace:
    geom = problem.geom
    diameter = geom.diameter()
    fixed = config.mode == "fixed-step"
    if oracle is not None:
        if oracle.base is not problem:
            raise ValueError("oracle was built for a different problem instance")
        g_cap = oracle.g_bound
        evaluate = lambda p: noisy_eval(oracle, p)  # noqa: E731
    else:
        g_cap = problem.g_bound
        evaluate = problem.operator

    state = StepState(y_prev=geom.min_point())
    sum_x = np.zeros(geom.dim)
    comp = np.zeros(geom.dim)
    records: List[StepRecord] = []
    max_xy = max_yy = max_zsq = 0.0
    eta_first = 0.0
    started = time.perf_counter()

    for t in range(1, config.iterations + 1):
        eta = config.eta if fixed else update_eta(state, diameter, config.g0)
        try:
            m = np.asarray(evaluate(state.y_prev), dtype=float)
            x = geom.prox_step(state.y_prev, m, eta)
            g = np.asarray(evaluate(x), dtype=float)
            y = geom.prox_step(state.y_prev, g, eta)
        except GeometryError as exc:
            raise DivergenceError(t, eta, str(exc)) from exc
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DivergenceError(t, eta, "non-finite iterate")

        z_sq = compute_z_sq(geom, x, y, state.y_prev, eta)
        ratio_x = geom.primal_norm(x - state.y_prev) / eta
        ratio_y = geom.primal_norm(y - state.y_prev) / eta
        if math.isfinite(g_cap):
            if ratio_x > g_cap + _MOVEMENT_TOL or ratio_y > g_cap + _MOVEMENT_TOL:
                raise InvariantError(
                    t, eta, f"movement/eta ratio {max(ratio_x, ratio_y):.6g} "
                    f"exceeds operator bound {g_cap:.6g}"
                )
            if z_sq > g_cap * g_cap + _MOVEMENT_TOL:
                raise InvariantError(
                    t, eta, f"Z^2 = {z_sq:.6g} exceeds G^2 = {g_cap * g_cap:.6g}"
                )
        max_xy = max(max_xy, ratio_x)
        max_yy = max(max_yy, ratio_y)
        max_zsq = max(max_zsq, z_sq)

        # Kahan-compensated running sum keeps the average exact to ~1e-16.
        incr = x - comp
        total = sum_x + incr
        comp = (total - sum_x) - incr
        sum_x = total

        if t == 1:
            eta_first = eta
        state.x_t, state.y_t, state.m_t, state.g_t = x, y, m, g
        state.eta_t, state.z_sq_t = eta, z_sq
        if t % config.record_every == 0 or t == config.iterations:
            records.append(
                StepRecord(t=t, eta=eta, z_sq=z_sq, x=x, y=y, m=m, g=g,
                           x_prefix=sum_x.copy())
            )
        state.z_sq_accum += z_sq
        state.y_prev = y

    return RunTrace(
        problem_name=problem.name,
        mode=config.mode,
        iterations=config.iterations,
        record_every=config.record_every,
        g0=config.g0,
        g_bound=g_cap,
        stochastic=oracle is not None,
        records=records,
        x_avg=sum_x / config.iterations,
        duration=time.perf_counter() - started,
        eta_first=eta_first,
        eta_final=state.eta_t,
        z_sq_total=state.z_sq_accum,
        max_xy_ratio=max_xy,
        max_yy_ratio=max_yy,
        max_z_sq=max_zsq,
        fixed_eta=config.eta if fixed else None,
    )


def universal_mirror_prox(
    problem: VIProblem,
    config: SolverConfig,
    oracle: Optional[StochasticOracle] = None,
) -> RunTrace:
    """Run the adaptive-step solver; pass an oracle for the stochastic setting."""
    if config.mode != "universal":
        raise ValueError("config.mode must be 'universal'")
    return _run_loop(problem, config, oracle)


def fixed_step_mirror_prox(
    problem: VIProblem,
    eta: float,
    iterations: int,
    *,
    record_every: int = 1,
    oracle: Optional[StochasticOracle] = None,
) -> RunTrace:
    """Classic mirror-prox with constant step size, as a tuned baseline."""
    config = SolverConfig(
        iterations=iterations, mode="fixed-step", eta=eta, record_every=record_every
    )
    return _run_loop(problem, config, oracle)
