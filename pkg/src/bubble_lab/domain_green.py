"""Model domains, anisotropic weights, and the Green's function of the ball.

Two model shapes are supported: a ball and a sphere-shifted annulus
(the annulus template 1 < |x-c|^2 < 4 with c on the first coordinate
axis).  The weight a(x) = (x^1)^{k1} ... (x^m)^{km} must be strictly
positive on the closure, which pins the domain away from the
coordinate hyperplanes of the weighted variables.

The Dirichlet Green's function G = gamma_n |x-y|^{2-n} - H is available
in closed form on the ball only, through the image charge

    H(x, y) = gamma_n (R/|y-c|)^{n-2} |x - y*|^{2-n},

with y* the inversion of y across the sphere.  The annulus carries the
geometry and weight queries (boundary critical points, condition (a))
but no H.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy_constants import sphere_area


class DomainError(ValueError):
    """Inadmissible domain data or query."""


class OutsideCollarError(DomainError):
    """Point is beyond the collar where boundary projection is unique."""


class DegenerateCriticalPointWarning(UserWarning):
    """Boundary Hessian of the weight is singular at a candidate."""


def gamma_n(n: int) -> float:
    """Normalizing constant of the fundamental solution |x|^{2-n}."""
    return 1.0 / ((n - 2) * sphere_area(n))


@dataclass(frozen=True)
class BoundaryPoint:
    x: np.ndarray
    nu: np.ndarray                    # inward unit normal
    d_to_other_component: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.nu) - 1.0) > 1e-12:
            raise DomainError("normal must be a unit vector")


@dataclass(frozen=True)
class DomainModel:
    """Ball or shifted annulus with a product-power weight."""

    shape: str                        # "ball" | "shifted_annulus"
    n: int
    center: tuple
    R: Optional[float] = None         # ball radius
    r_in: Optional[float] = None      # annulus radii
    r_out: Optional[float] = None
    weight_exponents: tuple = ()

    def __post_init__(self):
        if self.shape not in ("ball", "shifted_annulus"):
            raise DomainError(f"unknown shape {self.shape!r}")
        if self.n < 3:
            raise DomainError("dimension must be >= 3")
        if len(self.center) != self.n:
            raise DomainError("center must have n coordinates")
        if self.shape == "ball":
            if not self.R or self.R <= 0:
                raise DomainError("ball needs a positive radius")
        else:
            if not (self.r_in and self.r_out) or not 0 < self.r_in < self.r_out:
                raise DomainError("annulus needs 0 < r_in < r_out")
        # weighted coordinates must stay strictly positive on the closure
        outer = self.R if self.shape == "ball" else self.r_out
        for i, k in enumerate(self.weight_exponents):
            if k != 0 and self.center[i] - outer <= 0:
                raise DomainError(
                    f"weight coordinate {i + 1} not positive on the closure")

    @classmethod
    def from_json(cls, source) -> "DomainModel":
        """Build from a JSON file path or an already-parsed dict."""
        if isinstance(source, dict):
            spec = source
        else:
            with open(source) as fh:
                spec = json.load(fh)
        shape = spec["shape"]
        kwargs = dict(shape=shape, n=int(spec["n"]),
                      center=tuple(spec["center"]),
                      weight_exponents=tuple(spec.get("weight_exponents", ())))
        if shape == "ball":
            kwargs["R"] = float(spec["radius"])
        else:
            radii = spec["radii"]
            kwargs["r_in"], kwargs["r_out"] = float(radii[0]), float(radii[1])
        return cls(**kwargs)

    # -- geometry -----------------------------------------------------

    @property
    def _c(self):
        return np.asarray(self.center, dtype=float)

    @property
    def collar_width(self) -> float:
        if self.shape == "ball":
            return 0.25 * self.R
        return 0.25 * (self.r_out - self.r_in)

    def contains(self, x, margin: float = 0.0) -> bool:
        rho = np.linalg.norm(np.asarray(x, dtype=float) - self._c)
        if self.shape == "ball":
            return rho < self.R - margin
        return self.r_in + margin < rho < self.r_out - margin

    def boundary_distance(self, x) -> float:
        rho = np.linalg.norm(np.asarray(x, dtype=float) - self._c)
        if self.shape == "ball":
            return self.R - rho
        return min(rho - self.r_in, self.r_out - rho)

    def boundary_project(self, x):
        """Closest boundary point and the inward unit normal there."""
        x = np.asarray(x, dtype=float)
        v = x - self._c
        rho = np.linalg.norm(v)
        if rho == 0:
            raise OutsideCollarError("projection not unique at the center")
        u = v / rho
        if self.shape == "ball" or (self.r_out - rho) <= (rho - self.r_in):
            sphere_r = self.R if self.shape == "ball" else self.r_out
            return self._c + sphere_r * u, -u
        return self._c + self.r_in * u, u

    def reflect(self, x):
        """Mirror x across the nearest boundary component.

        Works on both sides of the boundary (signed distance, positive
        inside) as long as x stays within the collar."""
        x = np.asarray(x, dtype=float)
        d = self.boundary_distance(x)
        if d == 0 or abs(d) > self.collar_width:
            raise OutsideCollarError(
                f"distance {d:.4g} outside collar of width {self.collar_width:.4g}")
        _, nu = self.boundary_project(x)
        return x - 2.0 * d * nu

    # -- weight -------------------------------------------------------

    def weight(self, x) -> float:
        x = np.asarray(x, dtype=float)
        val = 1.0
        for i, k in enumerate(self.weight_exponents):
            val *= x[i] ** k
        return val

    def weight_gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        a = self.weight(x)
        for i, k in enumerate(self.weight_exponents):
            if k != 0:
                g[i] = k * a / x[i]
        return g


# -- Green's function on the ball -------------------------------------

def _check_ball(domain):
    if domain.shape != "ball":
        raise DomainError("closed-form Green's function needs a ball")


def regular_part_ball(domain: DomainModel, x, y) -> float:
    """Regular part H(x, y) by the image charge."""
    _check_ball(domain)
    n, R, c = domain.n, domain.R, domain._c
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = gamma_n(n)
    rho = np.linalg.norm(y - c)
    if rho == 0:
        return g * R ** (2 - n)
    y_star = c + (R ** 2 / rho ** 2) * (y - c)
    return g * (R / rho) ** (n - 2) * np.linalg.norm(x - y_star) ** (2 - n)


def green_ball(domain: DomainModel, x, y) -> float:
    """Dirichlet Green's function of the ball."""
    _check_ball(domain)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = np.linalg.norm(x - y)
    if dist == 0:
        raise DomainError("Green's function is singular at coincident points")
    return gamma_n(domain.n) * dist ** (2 - domain.n) - regular_part_ball(domain, x, y)


def harmonicity_residual(domain: DomainModel, x, y, h: float = 1e-3) -> float:
    """|Laplacian_x H(x,y)| / |H| by 4th-order central differences."""
    _check_ball(domain)
    x = np.asarray(x, dtype=float)
    lap = 0.0
    H0 = regular_part_ball(domain, x, y)
    for i in range(domain.n):
        e = np.zeros(domain.n)
        e[i] = h
        lap += (-regular_part_ball(domain, x + 2 * e, y)
                + 16 * regular_part_ball(domain, x + e, y)
                - 30 * H0
                + 16 * regular_part_ball(domain, x - e, y)
                - regular_part_ball(domain, x - 2 * e, y)) / (12 * h * h)
    return abs(lap) / abs(H0)


def lemH_bound_check(domain: DomainModel, n_samples: int = 500,
                     rng=None) -> dict:
    """Empirical check that H(x,y) tracks the reflected charge.

    Ratio |H - gamma_n |xbar - y|^{2-n}| * |xbar - y|^{n-2} / d(x) is
    recorded over random collar points x and interior points y, bucketed
    by dyadic d(x) levels; the report passes when no level's max exceeds
    1.5x the previous one and H >= 0 everywhere sampled.
    """
    _check_ball(domain)
    if rng is None:
        rng = np.random.default_rng(0)
    n, R, c = domain.n, domain.R, domain._c
    g = gamma_n(n)
    levels = [(2.0 ** -(k + 3)) * domain.collar_width for k in range(4)]
    level_max = []
    h_min = math.inf
    for d_level in levels:
        worst = 0.0
        for _ in range(n_samples // 4):
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            d = d_level * (0.5 + 0.5 * rng.random())
            x = c + (R - d) * u
            # interior y drawn uniformly in a concentric ball
            w = rng.normal(size=n)
            w /= np.linalg.norm(w)
            y = c + rng.random() ** (1.0 / n) * 0.9 * R * w
            xbar = domain.reflect(x)
            H = regular_part_ball(domain, x, y)
            h_min = min(h_min, H)
            ref = g * np.linalg.norm(xbar - y) ** (2 - n)
            ratio = abs(H - ref) * np.linalg.norm(xbar - y) ** (n - 2) / d
            worst = max(worst, ratio)
        level_max.append(worst)
    growth_ok = all(level_max[k + 1] <= 1.5 * max(level_max[: k + 1])
                    for k in range(len(level_max) - 1))
    return {"levels_d": levels, "level_max_ratio": level_max,
            "H_min": h_min, "passes": growth_ok and h_min >= 0}


# -- boundary critical points of the weight ---------------------------

def _sphere_candidates(domain, c, radius, inward_sign):
    """Axis intersections of a sphere |x-c| = radius, with inward normal
    nu = inward_sign * (c - x)/radius."""
    out = []
    for s in (-1.0, 1.0):
        x = c.copy()
        x[0] += s * radius
        nu = inward_sign * (c - x) / radius
        out.append((x, nu))
    return out


def boundary_critical_points(domain: DomainModel) -> list:
    """Critical points of the weight on the boundary, with the
    condition-(a) tag <grad a, nu> > 0.

    Only single-coordinate weights (x^1)^k admit the closed-form
    candidate set: the gradient is parallel to e_1, so critical points
    sit on the first-coordinate axis through the center.
    """
    ks = [k for k in domain.weight_exponents if k != 0]
    if not ks:
        return []      # constant weight: every point critical, none non-degenerate
    if len(domain.weight_exponents) > 1 and any(
            k != 0 for k in domain.weight_exponents[1:]):
        raise DomainError("closed-form candidates need a single-axis weight")
    c = domain._c
    if domain.shape == "ball":
        cands = _sphere_candidates(domain, c, domain.R, +1.0)
        gap = math.inf
    else:
        cands = (_sphere_candidates(domain, c, domain.r_out, +1.0)
                 + _sphere_candidates(domain, c, domain.r_in, -1.0))
        gap = domain.r_out - domain.r_in
    out = []
    for x, nu in cands:
        bp = BoundaryPoint(x=x, nu=nu, d_to_other_component=gap)
        g = domain.weight_gradient(x)
        out.append((bp, bool(np.dot(g, nu) > 0)))
    out.sort(key=lambda item: tuple(item[0].x))
    return out


# -- lift to the full-dimensional domain ------------------------------

def lift_to_full_domain(domain: DomainModel, func, y, partition) -> float:
    """Evaluate the rotation-invariant lift at y in R^N.

    partition (k_1, ..., k_m) says the first m coordinates of the model
    domain come from blocks of sizes k_i + 1 of y; the remaining z-block
    passes through unchanged.  func is any callable on model-domain
    points (for instance a projected-bubble evaluator).
    """
    y = np.asarray(y, dtype=float)
    x = []
    pos = 0
    for k in partition:
        block = y[pos:pos + k + 1]
        if block.size != k + 1:
            raise DomainError("point does not match the block partition")
        x.append(np.linalg.norm(block))
        pos += k + 1
    x.extend(y[pos:])
    x = np.asarray(x, dtype=float)
    if x.size != domain.n:
        raise DomainError("lifted point has wrong model dimension")
    if domain.boundary_distance(x) < -1e-12:
        raise DomainError("point lies outside the lifted domain")
    return func(x)
