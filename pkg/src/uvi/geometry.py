"""Feasible-set geometries for constrained mirror-prox solvers.

Each geometry couples a compact convex set K with a mirror map R that is
1-strongly convex w.r.t. the set's primal norm, and exposes closed forms for
everything the solver touches: Bregman divergence, prox (argmin) steps, the
primal/dual norm pair, the R-minimizer, and the Bregman diameter
D = sqrt(max_K R - min_K R).

Supported sets: Euclidean balls and boxes (squared-distance mirror map,
l2/l2 norm pair), the probability simplex under either the squared-distance
map or the negative-entropy map (l1/linf norms, multiplicative prox), and
two-block products with the 1/D^2 block scaling that keeps the product map
1-strongly convex w.r.t. the blended norm.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "GeometryError",
    "Geometry",
    "EuclideanBall",
    "EuclideanBox",
    "EuclideanSimplex",
    "EntropicSimplex",
    "ProductGeometry",
    "project_simplex",
]


class GeometryError(ValueError):
    """Dimension mismatch, infeasible input, or invalid geometry parameter."""


def project_simplex(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the standard simplex (sort-and-threshold).

    Deterministic: ties in the sort resolve by numpy's stable ordering, and
    the optimum is unique anyway (strictly convex objective).
    """
    u = np.sort(z)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, z.size + 1)
    feasible = u + (1.0 - css) / ks > 0
    k = ks[feasible][-1]
    tau = (css[k - 1] - 1.0) / k
    return np.maximum(z - tau, 0.0)


class Geometry:
    """Base class; concrete geometries supply the closed forms."""

    kind = "abstract"

    def __init__(self, dim: int, diameter_sq: float, clamp_eps: float = 0.0):
        if dim < 1:
            raise GeometryError("dimension must be positive")
        self.dim = int(dim)
        self.diameter_sq = float(diameter_sq)
        self.clamp_eps = float(clamp_eps)

    def check_point(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        if arr.shape != (self.dim,):
            raise GeometryError(
                f"{self.kind}: expected vector of dimension {self.dim}, "
                f"got shape {arr.shape}"
            )
        return arr

    def diameter(self) -> float:
        return math.sqrt(self.diameter_sq)

    def _prox_inputs(self, anchor, direction, eta):
        anchor = self.check_point(anchor)
        direction = self.check_point(direction)
        if not eta > 0:
            raise GeometryError(f"prox step size must be positive, got {eta}")
        if not np.all(np.isfinite(direction)):
            raise GeometryError("prox direction has non-finite components")
        return anchor, direction, float(eta)

    # Interface implemented by subclasses.
    def bregman(self, x, y) -> float:
        raise NotImplementedError

    def prox_step(self, anchor, direction, eta) -> np.ndarray:
        raise NotImplementedError

    def primal_norm(self, v) -> float:
        raise NotImplementedError

    def dual_norm(self, v) -> float:
        raise NotImplementedError

    def min_point(self) -> np.ndarray:
        raise NotImplementedError

    def mirror_value(self, x) -> float:
        """R(x), shifted so that min over K is exactly 0."""
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-10) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def linear_minimize(self, c) -> tuple[np.ndarray, float]:
        """Exact argmin/min of the linear function c.x over K."""
        raise NotImplementedError


class _EuclideanGeometry(Geometry):
    """Shared closed forms for R(x) = ||x - center||^2 / 2 geometries."""

    def bregman(self, x, y) -> float:
        x = self.check_point(x)
        y = self.check_point(y)
        d = x - y
        return 0.5 * float(d @ d)

    def prox_step(self, anchor, direction, eta) -> np.ndarray:
        anchor, direction, eta = self._prox_inputs(anchor, direction, eta)
        return self.project(anchor - eta * direction)

    def primal_norm(self, v) -> float:
        v = self.check_point(v)
        return float(np.linalg.norm(v))

    def dual_norm(self, v) -> float:
        return self.primal_norm(v)

    def mirror_value(self, x) -> float:
        x = self.check_point(x)
        d = x - self.min_point()
        return 0.5 * float(d @ d)

    def project(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class EuclideanBall(_EuclideanGeometry):
    """l2 ball of given radius centered at the origin."""

    kind = "euclidean-ball"

    def __init__(self, radius: float, dim: int):
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        super().__init__(dim, 0.5 * radius * radius)
        self.radius = float(radius)

    def project(self, z):
        nrm = np.linalg.norm(z)
        if nrm <= self.radius:
            return z
        return z * (self.radius / nrm)

    def min_point(self):
        return np.zeros(self.dim)

    def contains(self, x, tol=1e-10):
        x = self.check_point(x)
        return np.linalg.norm(x) <= self.radius + tol

    def sample(self, rng):
        v = rng.normal(size=self.dim)
        v /= np.linalg.norm(v)
        return v * self.radius * rng.uniform() ** (1.0 / self.dim)

    def linear_minimize(self, c):
        c = self.check_point(c)
        nrm = np.linalg.norm(c)
        if nrm == 0.0:
            return np.zeros(self.dim), 0.0
        x = -(self.radius / nrm) * c
        return x, -self.radius * float(nrm)


class EuclideanBox(_EuclideanGeometry):
    """Axis-aligned box [lower_i, upper_i] with the squared-distance map."""

    kind = "euclidean-box"

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise GeometryError("box bounds must be 1-D arrays of equal length")
        if not np.all(lower < upper):
            raise GeometryError("box requires lower < upper in every coordinate")
        half = 0.5 * (upper - lower)
        super().__init__(lower.size, 0.5 * float(half @ half))
        self.lower = lower
        self.upper = upper
        self.center = 0.5 * (lower + upper)

    def project(self, z):
        return np.clip(z, self.lower, self.upper)

    def min_point(self):
        return self.center.copy()

    def contains(self, x, tol=1e-10):
        x = self.check_point(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)

    def linear_minimize(self, c):
        c = self.check_point(c)
        x = np.where(c > 0, self.lower, np.where(c < 0, self.upper, self.lower))
        return x.astype(float), float(c @ x)


class EuclideanSimplex(_EuclideanGeometry):
    """Probability simplex with the squared-distance mirror map (l2/l2)."""

    kind = "euclidean-simplex"

    def __init__(self, dim: int):
        if dim < 2:
            raise GeometryError("simplex needs dimension >= 2")
        super().__init__(dim, 0.5 * (1.0 - 1.0 / dim))

    def project(self, z):
        return project_simplex(z)

    def min_point(self):
        return np.full(self.dim, 1.0 / self.dim)

    def contains(self, x, tol=1e-10):
        x = self.check_point(x)
        return bool(np.all(x >= -tol) and abs(float(x.sum()) - 1.0) <= tol)

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.dim))

    def linear_minimize(self, c):
        c = self.check_point(c)
        i = int(np.argmin(c))
        x = np.zeros(self.dim)
        x[i] = 1.0
        return x, float(c[i])


class EntropicSimplex(Geometry):
    """Probability simplex with the negative-entropy mirror map.

    R(x) = sum_i x_i log x_i + log d, so min R = 0 at the uniform point and
    the Bregman diameter squared is exactly log d. The norm pair is l1/linf
    and the prox step is the multiplicative update
    anchor_i * exp(-eta * direction_i), normalized, then clamped away from
    the boundary so the mirror-map gradient stays finite.
    """

    kind = "entropic-simplex"

    def __init__(self, dim: int, clamp_eps: float = 1e-12):
        if dim < 2:
            raise GeometryError("simplex needs dimension >= 2")
        if not clamp_eps > 0:
            raise GeometryError("clamp_eps must be positive")
        super().__init__(dim, math.log(dim), clamp_eps)

    def bregman(self, x, y) -> float:
        x = self.check_point(x)
        y = self.check_point(y)
        if float(np.min(x)) < -1e-9:
            raise GeometryError("bregman: first argument is outside the simplex")
        if float(np.min(y)) <= 0.0:
            raise GeometryError(
                "bregman: second argument must be interior (all coordinates > 0)"
            )
        xp = np.maximum(x, 0.0)
        terms = np.where(xp > 0.0, xp * np.log(np.maximum(xp, 1e-300) / y), 0.0)
        return float(terms.sum())

    def prox_step(self, anchor, direction, eta) -> np.ndarray:
        anchor, direction, eta = self._prox_inputs(anchor, direction, eta)
        if float(np.min(anchor)) <= 0.0:
            raise GeometryError("prox anchor must be interior (all coordinates > 0)")
        logw = np.log(anchor) - eta * direction
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()
        w = np.maximum(w, self.clamp_eps)
        return w / w.sum()

    def primal_norm(self, v) -> float:
        v = self.check_point(v)
        return float(np.abs(v).sum())

    def dual_norm(self, v) -> float:
        v = self.check_point(v)
        return float(np.abs(v).max())

    def min_point(self):
        return np.full(self.dim, 1.0 / self.dim)

    def mirror_value(self, x) -> float:
        x = self.check_point(x)
        xp = np.maximum(x, 0.0)
        terms = np.where(xp > 0.0, xp * np.log(np.maximum(xp, 1e-300)), 0.0)
        return float(terms.sum()) + math.log(self.dim)

    def contains(self, x, tol=1e-10):
        x = self.check_point(x)
        return bool(np.all(x >= -tol) and abs(float(x.sum()) - 1.0) <= tol)

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.dim))

    def linear_minimize(self, c):
        c = self.check_point(c)
        i = int(np.argmin(c))
        x = np.zeros(self.dim)
        x[i] = 1.0
        return x, float(c[i])


class ProductGeometry(Geometry):
    """Two-block product K = U x V with block maps scaled by 1/D_U^2, 1/D_V^2.

    R(u, v) = R_U(u)/D_U^2 + R_V(v)/D_V^2, which has range exactly [0, 2], so
    the product diameter squared is 2 by construction. The primal norm is
    sqrt(||u||_U^2/D_U^2 + ||v||_V^2/D_V^2) and its dual is
    sqrt(D_U^2 (||u||_U*)^2 + D_V^2 (||v||_V*)^2). The prox step separates
    into block prox steps with effective step sizes eta*D_U^2 and eta*D_V^2.
    """

    kind = "product"

    def __init__(self, geom_u: Geometry, geom_v: Geometry):
        super().__init__(geom_u.dim + geom_v.dim, 2.0)
        self.u = geom_u
        self.v = geom_v

    def split(self, x):
        x = self.check_point(x)
        return x[: self.u.dim], x[self.u.dim :]

    def bregman(self, x, y) -> float:
        xu, xv = self.split(x)
        yu, yv = self.split(y)
        return (
            self.u.bregman(xu, yu) / self.u.diameter_sq
            + self.v.bregman(xv, yv) / self.v.diameter_sq
        )

    def prox_step(self, anchor, direction, eta) -> np.ndarray:
        anchor, direction, eta = self._prox_inputs(anchor, direction, eta)
        au, av = anchor[: self.u.dim], anchor[self.u.dim :]
        du, dv = direction[: self.u.dim], direction[self.u.dim :]
        pu = self.u.prox_step(au, du, eta * self.u.diameter_sq)
        pv = self.v.prox_step(av, dv, eta * self.v.diameter_sq)
        return np.concatenate([pu, pv])

    def primal_norm(self, v) -> float:
        vu, vv = self.split(v)
        nu = self.u.primal_norm(vu)
        nv = self.v.primal_norm(vv)
        return math.sqrt(nu * nu / self.u.diameter_sq + nv * nv / self.v.diameter_sq)

    def dual_norm(self, v) -> float:
        vu, vv = self.split(v)
        su = self.u.dual_norm(vu)
        sv = self.v.dual_norm(vv)
        return math.sqrt(self.u.diameter_sq * su * su + self.v.diameter_sq * sv * sv)

    def min_point(self):
        return np.concatenate([self.u.min_point(), self.v.min_point()])

    def mirror_value(self, x) -> float:
        xu, xv = self.split(x)
        return (
            self.u.mirror_value(xu) / self.u.diameter_sq
            + self.v.mirror_value(xv) / self.v.diameter_sq
        )

    def contains(self, x, tol=1e-10):
        xu, xv = self.split(x)
        return self.u.contains(xu, tol) and self.v.contains(xv, tol)

    def sample(self, rng):
        return np.concatenate([self.u.sample(rng), self.v.sample(rng)])

    def linear_minimize(self, c):
        cu, cv = self.split(c)
        pu, vu = self.u.linear_minimize(cu)
        pv, vv = self.v.linear_minimize(cv)
        return np.concatenate([pu, pv]), vu + vv
