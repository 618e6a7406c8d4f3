"""Closed-form symbol machinery for Randers metrics on surfaces.

For F = sqrt(g) + theta with b = sqrt(1 - |theta|_g^2) and varphi the
half-argument of the 1-form in a g-orthonormal frame, the symbol of the
operator has the closed form (in that frame)

    sigma_11 = (1/b) * (1 + cos(2*varphi) * (1-b)/(1+b))
    sigma_22 = (1/b) * (1 - cos(2*varphi) * (1-b)/(1+b))
    sigma_12 = (sin(2*varphi)/b) * (1-b)/(1+b)

with det(sigma) = 4 / (b*(1+b)^2).  The quadrature oracle evaluates the
fiber integrals directly.  The inverse design map reconstructs a Randers
metric realizing a prescribed (symbol-dual metric, volume) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charts import ChartPoint, TORUS
from .errors import ConstructionError, InvalidMetricError
from .metrics import (CovectorField, MatrixField, RandersMetric,
                      _as_covector_field, _as_matrix_field)

ORACLE_N = 4096


def triangular_factor(g: np.ndarray) -> np.ndarray:
    """Upper-triangular T with T^T T = g (first row along d/dx)."""
    g11 = g[0, 0]
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    if g11 <= 0.0 or det <= 0.0:
        raise InvalidMetricError("metric tensor not positive definite")
    r = math.sqrt(g11)
    return np.array([[r, g[0, 1] / r], [0.0, math.sqrt(det) / r]])


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns are a g-orthonormal frame, the first along d/dx.

    N = T^{-1} for the triangular factor; chart vector components are
    v = N v_frame and frame covector components are theta_frame = N^T theta.
    """
    return np.linalg.inv(triangular_factor(g))


@dataclass
class RandersData:
    """A Randers metric sqrt(g) + theta with its derived frame data."""

    g_field: Callable[[ChartPoint], np.ndarray]
    theta_field: Callable[[ChartPoint], np.ndarray]
    chart: str = TORUS

    def g(self, x: ChartPoint) -> np.ndarray:
        return np.asarray(self.g_field(x), dtype=float)

    def theta(self, x: ChartPoint) -> np.ndarray:
        return np.asarray(self.theta_field(x), dtype=float)

    def theta_frame(self, x: ChartPoint) -> np.ndarray:
        """Components of theta in the g-orthonormal frame at x."""
        return orthonormal_frame(self.g(x)).T @ self.theta(x)

    def norm_theta(self, x: ChartPoint) -> float:
        return float(np.linalg.norm(self.theta_frame(x)))

    def b(self, x: ChartPoint) -> float:
        n2 = float(self.theta_frame(x) @ self.theta_frame(x))
        if n2 >= 1.0:
            raise InvalidMetricError(f"|theta|_g = {math.sqrt(n2):.6f} >= 1")
        return math.sqrt(1.0 - n2)

    def varphi(self, x: ChartPoint) -> float:
        """Half-angle of the 1-form in the orthonormal frame.

        Convention fixed by the quadrature oracle: varphi = arg(t1 + i*t2)
        for frame components (t1, t2).
        """
        t = self.theta_frame(x)
        return math.atan2(t[1], t[0])

    def metric(self) -> RandersMetric:
        return RandersMetric(self.g_field, self.theta_field, self.chart)


def make_randers(g: MatrixField, theta: CovectorField,
                 chart: str = TORUS) -> RandersMetric:
    """Build sqrt(g) + theta; the g-norm of theta must stay below 1.

    The norm condition is enforced at every evaluation point; the first
    offending point is reported.
    """
    gf, _ = _as_matrix_field(g)
    tf, _ = _as_covector_field(theta)
    metric = RandersMetric(gf, tf, chart)
    return metric


def randers_data(metric_or_g, theta: Optional[CovectorField] = None,
                 chart: str = TORUS) -> RandersData:
    """RandersData from a RandersMetric or from (g, theta) fields."""
    if isinstance(metric_or_g, RandersMetric):
        m = metric_or_g
        return RandersData(m.g_field, m.theta_field, m.chart)
    gf, _ = _as_matrix_field(metric_or_g)
    tf, _ = _as_covector_field(theta)
    return RandersData(gf, tf, chart)


def _symbol_frame(b: float, varphi: float) -> np.ndarray:
    k = (1.0 - b) / (1.0 + b)
    c2, s2 = math.cos(2.0 * varphi), math.sin(2.0 * varphi)
    return (1.0 / b) * np.array([
        [1.0 + c2 * k, s2 * k],
        [s2 * k, 1.0 - c2 * k],
    ])


def symbol_closed_form(rd: RandersData, x: ChartPoint) -> np.ndarray:
    """Closed-form symbol in chart coordinates.

    Computed in the g-orthonormal frame and pushed to the chart basis by
    the frame congruence sigma_chart = N sigma_frame N^T.
    """
    N = orthonormal_frame(rd.g(x))
    s = _symbol_frame(rd.b(x), rd.varphi(x))
    return N @ s @ N.T


def symbol_oracle(rd: RandersData, x: ChartPoint, n: int = ORACLE_N) -> np.ndarray:
    """Quadrature oracle for the symbol.

    Trapezoid evaluation of the three fiber integrals

        sigma_ab = (1/pi) Int_0^{2pi} e_a(t) e_b(t) / (1 + t1 cos t + t2 sin t) dt

    in the orthonormal frame (t1, t2 the frame components of theta),
    pushed to chart coordinates the same way as the closed form.
    """
    N = orthonormal_frame(rd.g(x))
    t1, t2 = rd.theta_frame(x)
    ts = 2.0 * np.pi * np.arange(n) / n
    c, s = np.cos(ts), np.sin(ts)
    denom = 1.0 + t1 * c + t2 * s
    if np.any(denom <= 0.0):
        raise InvalidMetricError("|theta|_g >= 1: fiber integrand not positive")
    w = 2.0 * np.pi / n / np.pi
    s11 = w * np.sum(c * c / denom)
    s22 = w * np.sum(s * s / denom)
    s12 = w * np.sum(c * s / denom)
    frame = np.array([[s11, s12], [s12, s22]])
    return N @ frame @ N.T


def dual_symbol(rd: RandersData, x: ChartPoint) -> np.ndarray:
    """The Riemannian metric dual to the symbol (its matrix inverse)."""
    return np.linalg.inv(symbol_closed_form(rd, x))


def solve_b(mu_prime: float, tol: float = 1e-12) -> float:
    """Root of b*(1+b)^2/4 = mu'^2 on (0, 1]; the cubic is strictly increasing."""
    if not 0.0 < mu_prime <= 1.0 + 1e-12:
        raise ConstructionError(f"mu' = {mu_prime} outside (0, 1]")
    if mu_prime >= 1.0:
        return 1.0
    target = mu_prime**2
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * (1.0 + mid) ** 2 / 4.0 < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class InverseDesign:
    """Result of the inverse construction: data, metric and the volume scale K.

    The constructed metric satisfies (symbol-dual = g_goal) and its
    canonical volume density equals K times the goal density.
    """

    data: RandersData
    K: float

    def metric(self) -> RandersMetric:
        return self.data.metric()


def inverse_design(g_goal: MatrixField, omega_goal, Z,
                   chart: str = TORUS,
                   K: Optional[float] = None,
                   sample_n: int = 192) -> InverseDesign:
    """Randers metric whose symbol-dual is g_goal and whose volume is
    K * omega_goal.

    ``omega_goal`` is the goal volume density against du ^ dv and ``Z``
    a vector field (callable or constant 2-array) that must not vanish
    where the construction needs a preferred direction.  K defaults to
    the sampled supremum of mu = sqrt(det g_goal)/omega_goal, so that
    mu' = mu/K lies in (0, 1].

    The pointwise norm of the constructed 1-form is sqrt(1-b^2) with b
    solving b(1+b)^2/4 = mu'^2, and its half-angle in the g-orthonormal
    frame aligned with Z is pi/4 (theta is the g-dual of Z rotated by
    pi/2).
    """
    g_goal_f, _ = _as_matrix_field(g_goal)
    omega_f = omega_goal if callable(omega_goal) else (lambda x, c=float(omega_goal): c)
    Z_f, _ = _as_covector_field(Z) if not callable(Z) else (Z, False)

    def mu(x: ChartPoint) -> float:
        om = float(omega_f(x))
        if om <= 0.0:
            raise ConstructionError("goal volume density must be positive")
        return math.sqrt(float(np.linalg.det(np.asarray(g_goal_f(x), dtype=float)))) / om

    if K is None:
        # sampled supremum; mu' is clamped to 1 at evaluation, so a slight
        # between-sample overshoot only flattens theta to 0 there.  Pass K
        # explicitly when the supremum is known exactly.
        if chart != TORUS:
            raise ConstructionError("automatic K estimation implemented on the torus")
        us = np.arange(sample_n) / sample_n
        K = max(mu(ChartPoint(TORUS, u, v)) for u in us for v in us)
    K = float(K)
    if not math.isfinite(K) or K <= 0.0:
        raise ConstructionError(f"volume ratio supremum K = {K} unusable")

    # Z must not vanish on the locus mu' = 1 (where the construction
    # degenerates to theta = 0 but smoothness needs a direction nearby).
    if chart == TORUS:
        us = np.arange(sample_n) / sample_n
        for u in us:
            for v in us:
                x = ChartPoint(TORUS, u, v)
                if mu(x) / K >= 1.0 - 1e-9 and np.linalg.norm(Z_f(x)) < 1e-13:
                    raise ConstructionError(
                        f"direction field Z vanishes on the mu'=1 locus near ({u}, {v})"
                    )

    def pointwise(x: ChartPoint):
        g1 = np.asarray(g_goal_f(x), dtype=float)
        mp = min(mu(x) / K, 1.0)
        b = solve_b(mp)
        zvec = np.asarray(Z_f(x), dtype=float)
        nz = float(np.linalg.norm(zvec))
        if b >= 1.0 - 1e-13:
            return g1, np.zeros(2)
        if nz < 1e-13:
            raise ConstructionError(
                f"direction field Z vanishes at ({x.u}, {x.v}) where theta != 0"
            )
        # rotate the chart so that Z is along the first axis
        beta = math.atan2(zvec[1], zvec[0])
        R = np.array([[math.cos(beta), -math.sin(beta)],
                      [math.sin(beta), math.cos(beta)]])
        gz = R.T @ g1 @ R
        u_, v_, w_ = gz[0, 0], gz[0, 1], gz[1, 1]
        root = math.sqrt(u_ * w_ - v_ * v_) / mp
        one_b2 = 1.0 - b * b
        den = (1.0 + b) ** 2
        g11 = 4.0 * u_ / den
        g12 = (4.0 * v_ - one_b2 * root) / den
        g22 = (4.0 * w_ - 2.0 * one_b2 * root * ((4.0 * v_ - one_b2 * root) / (4.0 * u_))) / den
        gz_new = np.array([[g11, g12], [g12, g22]])
        # theta with norm sqrt(1-b^2) and half-angle pi/4 in the frame of gz_new
        t_frame = math.sqrt(one_b2) * np.array([math.cos(math.pi / 4.0),
                                                -math.sin(math.pi / 4.0)])
        T = triangular_factor(gz_new)
        theta_z = T.T @ t_frame
        return R @ gz_new @ R.T, R @ theta_z

    def g_field(x: ChartPoint) -> np.ndarray:
        return pointwise(x)[0]

    def theta_field(x: ChartPoint) -> np.ndarray:
        return pointwise(x)[1]

    return InverseDesign(data=RandersData(g_field, theta_field, chart), K=K)
