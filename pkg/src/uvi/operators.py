"""Monotone operators, compatible gap functions, and bounded-noise oracles.

A problem couples an operator F over a geometry's feasible set with a gap
function satisfying Delta(x, y) <= F(x).(x - y), convex in x, whose maximum
over y (the duality gap) vanishes exactly at solutions. Two adapters cover
the standard cases:

* convex minimization: Delta(x, y) = f(x) - f(y), F = grad f, and the
  duality gap f(x) - min_K f;
* convex-concave saddle problems: Delta(x, x0) = phi(u, v0) - phi(u0, v)
  with F(x) = (grad_u phi, -grad_v phi) over the scaled product geometry.

The stochastic oracle adds zero-mean sign noise whose dual norm is bounded
almost surely, so the sampled operator stays norm-bounded as required by
the solver's movement invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    EntropicSimplex,
    EuclideanBall,
    EuclideanBox,
    Geometry,
    GeometryError,
    ProductGeometry,
)

__all__ = [
    "VIProblem",
    "StochasticOracle",
    "UnknownProblemError",
    "convex_min_problem",
    "saddle_problem",
    "matrix_game",
    "noisy_eval",
    "noisy_eval_batch",
    "builtin_problems",
    "make_problem",
]


class UnknownProblemError(ValueError):
    """Requested catalog problem name does not exist."""


@dataclass
class VIProblem:
    """A monotone operator with a compatible gap function over a feasible set.

    ``g_bound`` is a bound on the dual norm of F over K (and of any oracle
    sample); ``smoothness`` is the dual-norm Lipschitz constant of F when it
    exists; ``dual_gap_eval`` evaluates the exact duality gap when one is
    registered; ``gap_tolerance`` records the accuracy of the reference
    minimum used by that evaluator (0 for closed forms).
    """

    name: str
    geom: Geometry
    operator_eval: Callable[[np.ndarray], np.ndarray]
    gap_eval: Callable[[np.ndarray, np.ndarray], float]
    g_bound: float
    smoothness: Optional[float] = None
    dual_gap_eval: Optional[Callable[[np.ndarray], float]] = None
    known_solution: Optional[np.ndarray] = None
    gap_tolerance: float = 0.0
    params: dict = field(default_factory=dict)

    def operator(self, x) -> np.ndarray:
        return np.asarray(self.operator_eval(np.asarray(x, dtype=float)), dtype=float)

    def gap(self, x, y) -> float:
        return float(self.gap_eval(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


def _reference_minimum(f, geom: Geometry) -> tuple[float, float]:
    """High-accuracy inner solve for min_K f when no closed form is supplied.

    Multi-start SLSQP with the feasible set expressed as constraints; the
    returned tolerance is recorded on the problem as ``gap_tolerance``.
    """
    from scipy.optimize import minimize

    bounds = None
    constraints = ()
    if isinstance(geom, EuclideanBall):
        r2 = geom.radius * geom.radius
        constraints = ({"type": "ineq", "fun": lambda x: r2 - float(x @ x)},)
    elif isinstance(geom, EuclideanBox):
        bounds = list(zip(geom.lower, geom.upper))
    elif isinstance(geom, (EntropicSimplex,)) or geom.kind == "euclidean-simplex":
        bounds = [(0.0, None)] * geom.dim
        constraints = ({"type": "eq", "fun": lambda x: float(x.sum()) - 1.0},)
    else:
        raise GeometryError(
            f"no reference-minimum solver for geometry kind {geom.kind!r}"
        )

    rng = np.random.default_rng(0)
    starts = [geom.min_point()] + [geom.sample(rng) for _ in range(8)]
    best = math.inf
    for x0 in starts:
        res = minimize(
            lambda x: float(f(x)),
            x0,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
            options={"maxiter": 500, "ftol": 1e-14},
        )
        if res.fun < best:
            best = float(res.fun)
    return best, 1e-8


def convex_min_problem(
    f,
    grad,
    geom: Geometry,
    *,
    g_bound: float,
    smoothness: Optional[float] = None,
    name: str = "convex-min",
    min_value: Optional[float] = None,
    minimizer=None,
    params: Optional[dict] = None,
) -> VIProblem:
    """Adapt a convex objective to the gap-function interface.

    Delta(x, y) = f(x) - f(y) and F = grad; the duality gap is
    f(x) - min_K f, with the minimum taken from ``min_value`` when the
    closed form is known and from a cached inner solve otherwise.
    """
    if min_value is None:
        min_value, gap_tol = _reference_minimum(f, geom)
    else:
        min_value, gap_tol = float(min_value), 0.0

    def gap_eval(x, y):
        return float(f(x) - f(y))

    def dual_gap_eval(x):
        return float(f(x)) - min_value

    return VIProblem(
        name=name,
        geom=geom,
        operator_eval=lambda x: np.asarray(grad(x), dtype=float),
        gap_eval=gap_eval,
        g_bound=float(g_bound),
        smoothness=smoothness,
        dual_gap_eval=dual_gap_eval,
        known_solution=None if minimizer is None else np.asarray(minimizer, float),
        gap_tolerance=gap_tol,
        params=dict(params or {}),
    )


def saddle_problem(
    phi,
    grad_u,
    grad_v,
    geom_u: Geometry,
    geom_v: Geometry,
    *,
    g_bound: float,
    smoothness: Optional[float] = None,
    name: str = "saddle",
    dual_gap_eval=None,
    known_solution=None,
    params: Optional[dict] = None,
) -> VIProblem:
    """Adapt a convex-concave function phi(u, v) to the gap-function interface.

    F(u, v) = (grad_u phi, -grad_v phi) and
    Delta((u, v), (u0, v0)) = phi(u, v0) - phi(u0, v), both over the scaled
    product geometry of the two blocks.
    """
    geom = ProductGeometry(geom_u, geom_v)
    u0, v0 = geom_u.min_point(), geom_v.min_point()
    gu = np.asarray(grad_u(u0, v0), dtype=float)
    gv = np.asarray(grad_v(u0, v0), dtype=float)
    if gu.shape != (geom_u.dim,) or gv.shape != (geom_v.dim,):
        raise GeometryError(
            f"block-dimension mismatch: gradients have shapes {gu.shape}/{gv.shape}, "
            f"geometry blocks have dims {geom_u.dim}/{geom_v.dim}"
        )

    def operator_eval(x):
        u, v = geom.split(x)
        return np.concatenate(
            [np.asarray(grad_u(u, v), float), -np.asarray(grad_v(u, v), float)]
        )

    def gap_eval(x, x0):
        u, v = geom.split(x)
        u0_, v0_ = geom.split(x0)
        return float(phi(u, v0_) - phi(u0_, v))

    return VIProblem(
        name=name,
        geom=geom,
        operator_eval=operator_eval,
        gap_eval=gap_eval,
        g_bound=float(g_bound),
        smoothness=smoothness,
        dual_gap_eval=dual_gap_eval,
        known_solution=known_solution,
        params=dict(params or {}),
    )


def matrix_game(A, *, name: str = "matrix-game", clamp_eps: float = 1e-12) -> VIProblem:
    """Bilinear zero-sum game phi(u, v) = u.A.v over two entropic simplices.

    The operator bound comes from max_ij |A_ij| through the product dual
    norm, and the smoothness constant uses the cross-block Lipschitz
    constants L12 = L21 = max_ij |A_ij| (the l1->linf operator norm of A):
    L = 2 max|A| sqrt(log d1 * log d2). The duality gap is exact by vertex
    enumeration: max_j (A'u)_j - min_i (Av)_i.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("payoff matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix must have finite entries")
    d1, d2 = A.shape
    geom_u = EntropicSimplex(d1, clamp_eps)
    geom_v = EntropicSimplex(d2, clamp_eps)
    amax = float(np.abs(A).max())
    du2, dv2 = geom_u.diameter_sq, geom_v.diameter_sq
    g_bound = amax * math.sqrt(du2 + dv2)
    smoothness = 2.0 * amax * math.sqrt(du2 * dv2)

    def dual_gap_eval(x):
        u, v = x[:d1], x[d1:]
        return float(np.max(A.T @ u) - np.min(A @ v))

    return saddle_problem(
        phi=lambda u, v: float(u @ A @ v),
        grad_u=lambda u, v: A @ v,
        grad_v=lambda u, v: A.T @ u,
        geom_u=geom_u,
        geom_v=geom_v,
        g_bound=g_bound,
        smoothness=smoothness,
        name=name,
        dual_gap_eval=dual_gap_eval,
        params={"matrix": A.tolist()},
    )


@dataclass
class StochasticOracle:
    """Unbiased sampled operator F + zeta with bounded sign noise.

    Each coordinate of zeta is an independent fair sign times
    noise_bound / c, where c is the dual norm of the all-ones vector, so
    dual_norm(zeta) = noise_bound almost surely and the second moment of
    the dual norm is exactly noise_bound^2. ``sigma_sq`` stores the variance
    bound for verification only; the solver never reads it. One oracle
    instance per run; the generator is PCG64 seeded from ``rng_seed``.
    """

    base: VIProblem
    noise_bound: float
    sigma_sq: Optional[float] = None
    rng_seed: Union[int, np.random.SeedSequence] = 0

    def __post_init__(self):
        if self.noise_bound < 0:
            raise ValueError("noise_bound must be nonnegative")
        if self.sigma_sq is None:
            self.sigma_sq = self.noise_bound**2
        elif self.sigma_sq < self.noise_bound**2 * (1 - 1e-12):
            raise ValueError(
                "sigma_sq understates the noise model: sign noise with dual-norm "
                f"bound {self.noise_bound} has second moment {self.noise_bound ** 2}"
            )
        self._rng = np.random.default_rng(self.rng_seed)
        self._unit_dual = self.base.geom.dual_norm(np.ones(self.base.geom.dim))

    @property
    def g_bound(self) -> float:
        return self.base.g_bound + self.noise_bound

    def _noise(self, count: Optional[int] = None) -> np.ndarray:
        d = self.base.geom.dim
        shape = (d,) if count is None else (count, d)
        signs = self._rng.integers(0, 2, size=shape) * 2 - 1
        return (self.noise_bound / self._unit_dual) * signs


def noisy_eval(oracle: StochasticOracle, x) -> np.ndarray:
    """One fresh unbiased sample of the operator at a feasible point."""
    geom = oracle.base.geom
    x = geom.check_point(x)
    if not geom.contains(x, tol=1e-8):
        raise GeometryError(f"noisy_eval: point is not feasible for {geom.kind}")
    f = oracle.base.operator(x)
    if oracle.noise_bound == 0.0:
        return f
    return f + oracle._noise()


def noisy_eval_batch(oracle: StochasticOracle, x, count: int) -> np.ndarray:
    """``count`` independent samples at a fixed point, shape (count, dim)."""
    geom = oracle.base.geom
    x = geom.check_point(x)
    if not geom.contains(x, tol=1e-8):
        raise GeometryError(f"noisy_eval: point is not feasible for {geom.kind}")
    f = oracle.base.operator(x)
    if oracle.noise_bound == 0.0:
        return np.tile(f, (count, 1))
    return f[None, :] + oracle._noise(count)


# ---------------------------------------------------------------------------
# Builtin problem catalog
# ---------------------------------------------------------------------------

_RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def _make_rps() -> VIProblem:
    problem = matrix_game(_RPS, name="rps")
    problem.known_solution = np.full(6, 1.0 / 3.0)
    return problem


def _make_random_game(d1: int = 3, d2: int = 3, seed: int = 0) -> VIProblem:
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(int(d1), int(d2)))
    problem = matrix_game(A, name="random-game")
    problem.params.update({"d1": int(d1), "d2": int(d2), "seed": int(seed)})
    return problem


def _make_quadratic_ball(radius: float = 1.0, x0=(1.5, 0.0)) -> VIProblem:
    """f(x) = ||x - x0||^2 / 2 over an l2 ball.

    With x0 outside the ball the constrained minimizer sits on the boundary
    with a nonzero gradient, which is the regime where gradient magnitudes
    do not vanish even though the problem is smooth.
    """
    x0 = np.asarray(x0, dtype=float)
    geom = EuclideanBall(radius, x0.size)
    nrm = float(np.linalg.norm(x0))
    if nrm <= radius:
        minimizer, min_value = x0.copy(), 0.0
    else:
        minimizer = x0 * (radius / nrm)
        min_value = 0.5 * (nrm - radius) ** 2
    return convex_min_problem(
        f=lambda x: 0.5 * float((x - x0) @ (x - x0)),
        grad=lambda x: x - x0,
        geom=geom,
        g_bound=radius + nrm,
        smoothness=1.0,
        name="quadratic-ball",
        min_value=min_value,
        minimizer=minimizer,
        params={"radius": float(radius), "x0": x0.tolist()},
    )


def _l1_min_on_ball(x0: np.ndarray, radius: float) -> tuple[Optional[float], Optional[np.ndarray]]:
    """Closed-form min of ||x - x0||_1 over the ball when available."""
    nrm = float(np.linalg.norm(x0))
    if nrm <= radius:
        return 0.0, x0.copy()
    nonzero = np.flatnonzero(x0)
    if nonzero.size == 1:
        j = int(nonzero[0])
        minimizer = np.zeros_like(x0)
        minimizer[j] = math.copysign(radius, x0[j])
        return abs(float(x0[j])) - radius, minimizer
    return None, None


def _make_l1_ball(radius: float = 1.0, x0=(-0.16, -0.6, 0.4)) -> VIProblem:
    """f(x) = ||x - x0||_1 over an l2 ball; non-smooth at the target point.

    The default target is interior, so the iterates keep straddling the
    kinks instead of settling in a smooth region. Zero coordinates of the
    residual take subgradient component 0 (deterministic, minimal norm).
    """
    x0 = np.asarray(x0, dtype=float)
    geom = EuclideanBall(radius, x0.size)
    min_value, minimizer = _l1_min_on_ball(x0, radius)
    return convex_min_problem(
        f=lambda x: float(np.abs(x - x0).sum()),
        grad=lambda x: np.sign(x - x0),
        geom=geom,
        g_bound=math.sqrt(x0.size),
        name="l1-ball",
        min_value=min_value,
        minimizer=minimizer,
        params={"radius": float(radius), "x0": x0.tolist()},
    )


def _make_piecewise_max(slopes=None, offsets=None, lower=-1.0, upper=1.0) -> VIProblem:
    """f(x) = max_i (a_i.x + b_i) over a box; the reference minimum is an LP."""
    if slopes is None:
        slopes = [[1.0, 1.0], [-1.0, 0.3], [0.2, -1.0]]
        offsets = [-0.5, 0.0, -0.1]
    a = np.asarray(slopes, dtype=float)
    b = np.asarray(offsets, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise ValueError("slopes must be (k, d) and offsets length k")
    d = a.shape[1]
    geom = EuclideanBox(np.full(d, float(lower)), np.full(d, float(upper)))

    def f(x):
        return float(np.max(a @ x + b))

    def grad(x):
        return a[int(np.argmax(a @ x + b))]

    # Exact epigraph LP: min s  s.t.  a_i.x + b_i <= s,  x in the box.
    from scipy.optimize import linprog

    c = np.zeros(d + 1)
    c[-1] = 1.0
    A_ub = np.hstack([a, -np.ones((a.shape[0], 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=-b,
        bounds=[(float(lower), float(upper))] * d + [(None, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"reference LP for piecewise-max failed: {res.message}")
    return convex_min_problem(
        f=f,
        grad=grad,
        geom=geom,
        g_bound=float(np.linalg.norm(a, axis=1).max()),
        name="piecewise-max",
        min_value=float(res.fun),
        minimizer=np.asarray(res.x[:d], float),
        params={
            "slopes": a.tolist(),
            "offsets": b.tolist(),
            "lower": float(lower),
            "upper": float(upper),
        },
    )


def builtin_problems() -> dict:
    """Catalog of named problem factories addressable from run configs."""
    return {
        "rps": _make_rps,
        "random-game": _make_random_game,
        "quadratic-ball": _make_quadratic_ball,
        "l1-ball": _make_l1_ball,
        "piecewise-max": _make_piecewise_max,
    }


def make_problem(name: str, **params) -> VIProblem:
    catalog = builtin_problems()
    if name not in catalog:
        known = ", ".join(sorted(catalog))
        raise UnknownProblemError(f"unknown problem {name!r}; known problems: {known}")
    return catalog[name](**params)
