"""Rate-bound calculators and executable inequality oracles.

``theorem_bounds`` evaluates the convergence-rate expressions for the four
regimes (smooth/non-smooth x noiseless/noisy) with unit leading constants;
these are shape values for scaling comparisons only, never absolute ones.

The ``lemma*_check`` functions evaluate both sides of the scalar-sequence
inequalities that drive the adaptive-step analysis, and ``prop1_mc`` checks
the martingale-smoothing bound by Monte Carlo against an adversarially
chosen feasible point. ``regret_bound_sides`` computes both sides of the
optimistic-update regret bound along an actual run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Geometry
from .operators import VIProblem
from .solver import RunTrace, SolverConfig

__all__ = [
    "BoundReport",
    "theorem_bounds",
    "lemma4_check",
    "lemma5_check",
    "lemma7_check",
    "lemma8_check",
    "prop1_mc",
    "rate_fit",
    "regret_bound_sides",
]

_HOLD_TOL = 1e-12


@dataclass
class BoundReport:
    """Theoretical rate shapes next to observed values for one run setup.

    alpha = max(G/G0, G0/G) measures the quality of the step-size prior.
    Bounds that need constants the problem lacks (L for the smooth rates,
    sigma for the noisy ones) are None. ``log_regime_clamped`` flags that
    log(L D / G0) was negative and got clamped to 0.
    """

    alpha: float
    thm1_rhs: Optional[float] = None
    thm2_rhs: Optional[float] = None
    thm3_rhs: Optional[float] = None
    thm4_rhs: Optional[float] = None
    observed_gap: Optional[float] = None
    lemma3_lhs: Optional[float] = None
    lemma3_rhs: Optional[float] = None
    log_regime_clamped: bool = False


def theorem_bounds(
    problem: VIProblem,
    config: SolverConfig,
    T: Optional[int] = None,
    sigma_sq: Optional[float] = None,
    g_bound: Optional[float] = None,
) -> BoundReport:
    """Unit-constant rate shapes for the applicable convergence theorems.

    Smooth deterministic: (alpha G D + alpha^2 L D^2 + L D^2 log(L D / G0)) / T.
    Non-smooth: alpha G D sqrt(log(1+T)) / sqrt(T) (log(1+T) keeps the shape
    strictly decreasing from T=1 on). Noisy variants add / swap in sigma.
    """
    T = config.iterations if T is None else int(T)
    g0 = config.g0
    G = problem.g_bound if g_bound is None else float(g_bound)
    D = problem.geom.diameter()
    L = problem.smoothness
    sigma = None if sigma_sq is None else math.sqrt(sigma_sq)

    alpha = max(G / g0, g0 / G) if G > 0 else math.inf
    sqrt_log_t = math.sqrt(math.log(1.0 + T))
    clamped = False

    report = BoundReport(alpha=alpha)
    if math.isfinite(alpha):
        report.thm2_rhs = alpha * G * D * sqrt_log_t / math.sqrt(T)
        if L is not None:
            log_term = math.log(L * D / g0) if L * D > 0 else -math.inf
            if log_term < 0.0:
                log_term = 0.0
                clamped = True
            smooth_part = (
                alpha * G * D + alpha**2 * L * D * D + L * D * D * log_term
            ) / T
            report.thm1_rhs = smooth_part
            if sigma is not None:
                report.thm4_rhs = smooth_part + alpha * sigma * D * sqrt_log_t / math.sqrt(T)
        if sigma is not None:
            report.thm3_rhs = alpha * G * D * sqrt_log_t / math.sqrt(T)
    report.log_regime_clamped = clamped
    return report


def _sequence(seq, cap) -> Tuple[np.ndarray, float]:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim != 1:
        raise ValueError("sequence must be 1-D")
    if arr.size and float(arr.min()) < 0:
        raise ValueError("sequence entries must be nonnegative")
    top = float(arr.max()) if arr.size else 0.0
    if cap is None:
        cap = top
    elif cap < top - 1e-15:
        raise ValueError("cap must dominate every sequence entry")
    return arr, float(cap)


def lemma4_check(a0: float, seq: Sequence[float], cap: Optional[float] = None) -> dict:
    """Two-sided bound on sum_i a_i / sqrt(a0 + sum_{j<i} a_j).

    Lower: sqrt(a0 + sum_{i<=n-1} a_i) - sqrt(a0) (and the strengthened
    full-sum variant, reported as lhs_full). Upper:
    2a/sqrt(a0) + 3 sqrt(a) + 3 sqrt(a0 + sum_{i<=n-1} a_i), where a caps
    the entries.
    """
    if not a0 > 0:
        raise ValueError("a0 must be positive")
    arr, a = _sequence(seq, cap)
    prefix = np.concatenate([[0.0], np.cumsum(arr)])
    mid = float(np.sum(arr / np.sqrt(a0 + prefix[:-1]))) if arr.size else 0.0
    partial = float(prefix[-2]) if arr.size else 0.0
    total = float(prefix[-1])
    lhs = math.sqrt(a0 + partial) - math.sqrt(a0)
    lhs_full = math.sqrt(a0 + total) - math.sqrt(a0)
    rhs = 2.0 * a / math.sqrt(a0) + 3.0 * math.sqrt(a) + 3.0 * math.sqrt(a0 + partial)
    holds = (
        lhs <= mid + _HOLD_TOL * (1 + abs(mid))
        and lhs_full <= mid + _HOLD_TOL * (1 + abs(mid))
        and mid <= rhs + _HOLD_TOL * (1 + abs(rhs))
    )
    return {"lhs": lhs, "lhs_full": lhs_full, "mid": mid, "rhs": rhs, "holds": holds}


def lemma5_check(a0: float, seq: Sequence[float], cap: Optional[float] = None) -> dict:
    """sum_i a_i/(a0 + sum_{j<i} a_j) <= 2 + 4a/a0 + 2 log(1 + sum_{i<=n-1} a_i / a0)."""
    if not a0 > 0:
        raise ValueError("a0 must be positive")
    arr, a = _sequence(seq, cap)
    prefix = np.concatenate([[0.0], np.cumsum(arr)])
    lhs = float(np.sum(arr / (a0 + prefix[:-1]))) if arr.size else 0.0
    partial = float(prefix[-2]) if arr.size else 0.0
    rhs = 2.0 + 4.0 * a / a0 + 2.0 * math.log1p(partial / a0)
    holds = lhs <= rhs + _HOLD_TOL * (1 + abs(rhs))
    return {"lhs": lhs, "rhs": rhs, "holds": holds}


def lemma7_check(seq: Sequence[float]) -> dict:
    """sum_i a_i / sqrt(sum_{j<=i} a_j) <= 2 sqrt(sum_i a_i), with 0/0 := 0."""
    arr, _ = _sequence(seq, None)
    csum = np.cumsum(arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(csum > 0, arr / np.sqrt(np.where(csum > 0, csum, 1.0)), 0.0)
    lhs = float(terms.sum())
    rhs = 2.0 * math.sqrt(float(csum[-1])) if arr.size else 0.0
    holds = lhs <= rhs + _HOLD_TOL * (1 + abs(rhs))
    return {"lhs": lhs, "rhs": rhs, "holds": holds}


def lemma8_check(seq: Sequence[float]) -> dict:
    """sum_i b_i / (1 + sum_{j<=i} b_j) <= 1 + log(1 + sum_i b_i)."""
    arr, _ = _sequence(seq, None)
    csum = np.cumsum(arr)
    lhs = float(np.sum(arr / (1.0 + csum))) if arr.size else 0.0
    rhs = 1.0 + math.log1p(float(csum[-1])) if arr.size else 1.0
    holds = lhs <= rhs + _HOLD_TOL * (1 + abs(rhs))
    return {"lhs": lhs, "rhs": rhs, "holds": holds}


def prop1_mc(
    geom: Geometry,
    n: int,
    trials: int,
    seed: int = 0,
    *,
    magnitude: float = 1.0,
    adversarial: bool = True,
) -> dict:
    """Monte-Carlo check of the martingale-smoothing inner-product bound.

    Draws n independent sign-noise vectors Z_i scaled to dual norm
    ``magnitude``, lets X be the feasible maximizer of (sum_i Z_i).x (so X
    depends on the whole sequence, the adversarial case the bound is made
    for; with adversarial=False, X is a fixed extreme point), and compares
    the sample mean of (sum_i Z_i).X against

        rhs = D_sc * sqrt(sum_i E||Z_i||*^2),   D_sc = sqrt(2 (max R - min R)),

    where D_sc is the diameter in the convention R - min R <= D_sc^2 / 2
    assumed by the bound, and E||Z_i||*^2 = magnitude^2 exactly under this
    noise model. The bound's derivation optimizes D_sc^2/(2s) + (s/2) sum E
    over s, giving the D_sc * sqrt(.) value used here. Holds allows CLT
    slack 3/sqrt(trials).
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    if magnitude < 0:
        raise ValueError("magnitude must be nonnegative")
    rng = np.random.default_rng(seed)
    d = geom.dim
    unit = geom.dual_norm(np.ones(d))
    scale = magnitude / unit
    signs = rng.integers(0, 2, size=(trials, n, d)) * 2 - 1
    sums = signs.sum(axis=1) * scale
    if adversarial:
        values = np.empty(trials)
        for k in range(trials):
            point, neg = geom.linear_minimize(-sums[k])
            values[k] = -neg
    else:
        point, neg = geom.linear_minimize(-np.eye(d)[0])
        values = sums @ point
    lhs = float(values.mean())
    rhs = math.sqrt(2.0 * geom.diameter_sq) * math.sqrt(n) * magnitude
    stderr = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    holds = lhs <= rhs * (1.0 + 3.0 / math.sqrt(trials)) + _HOLD_TOL
    return {"lhs_estimate": lhs, "rhs": rhs, "stderr": stderr, "holds": holds}


def rate_fit(points: Sequence[Tuple[float, float]]) -> dict:
    """Least-squares slope of log(gap) against log(T); nonpositive gaps drop."""
    kept = [(float(t), float(g)) for t, g in points if g > 0]
    if len(kept) < 3:
        raise ValueError("rate fit needs at least 3 positive gap values")
    x = np.log([t for t, _ in kept])
    y = np.log([g for _, g in kept])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {"exponent": float(slope), "r2": r2}


def regret_bound_sides(
    problem: VIProblem, trace: RunTrace, upto: Optional[int] = None
) -> Tuple[float, float]:
    """Both sides of the optimistic-update regret bound over a run prefix.

    LHS: sum_t g_t.(x_t - x*) with x* the exact linear minimizer of
    sum_t g_t over K. RHS: D^2/eta_1 + D^2/eta_t
    + sum_t ||g_t - M_t||* ||x_t - y_t||
    - (1/2) sum_t (1/eta_t)(||x_t - y_t||^2 + ||x_t - y_{t-1}||^2).
    Requires record_every=1 so every step is available.
    """
    if trace.record_every != 1:
        raise ValueError("regret bound needs every step recorded (record_every=1)")
    records: List = trace.records if upto is None else trace.records[:upto]
    if not records:
        raise ValueError("empty trace prefix")
    geom = problem.geom
    d_sq = geom.diameter_sq

    total_g = np.zeros(geom.dim)
    for rec in records:
        total_g += rec.g
    x_star, _ = geom.linear_minimize(total_g)

    lhs = 0.0
    rhs = d_sq / records[0].eta + d_sq / records[-1].eta
    y_prev = geom.min_point()
    for rec in records:
        lhs += float(rec.g @ (rec.x - x_star))
        xy = geom.primal_norm(rec.x - rec.y)
        xyp = geom.primal_norm(rec.x - y_prev)
        rhs += geom.dual_norm(rec.g - rec.m) * xy
        rhs -= 0.5 * (xy * xy + xyp * xyp) / rec.eta
        y_prev = rec.y
    return lhs, rhs
