"""Energy, Rayleigh quotients and generalized eigenproblems.

Eigenvalues of the negative operator are computed from the symmetric
pencil (S, M): S the volume-weighted discrete operator form, M the
volume mass matrix.  Small dense pencils go through Cholesky reduction
plus cyclic Jacobi rotations; large sparse grids use shift-invert
Lanczos (deterministic start vector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .charts import ChartPoint, SPHERE, TORUS
from .errors import ConfigError, DomainError, NumericError
from .fields import field_gradient
from .hilbert import reeb_profile
from .laplace import assemble_torus_operator
from .measures import DEFAULT_FIBER_N, fiber_quadrature, fiber_quadrature_adaptive
from .metrics import FinslerMetric2D, KatokZillerMetric

MERGE_TOL = 1e-9
JACOBI_MAX_DENSE = 200


@dataclass(frozen=True)
class TorusGridBasis:
    """Periodic n x n finite-difference grid (n >= 16)."""

    n: int
    fiber_n: int = DEFAULT_FIBER_N


@dataclass(frozen=True)
class SphereHarmonicBasis:
    """Spherical-harmonic sector of azimuthal order m, degrees |m| .. lmax."""

    lmax: int
    m: int
    nquad: Optional[int] = None


@dataclass
class SpectralProblem:
    """Assembled symmetric pencil for the generalized eigenproblem."""

    basis: Union[TorusGridBasis, SphereHarmonicBasis]
    stiffness: Union[np.ndarray, sp.spmatrix]
    mass: Union[np.ndarray, sp.spmatrix]
    metric_tag: str
    sym_defect: float

    def __post_init__(self):
        if sp.issparse(self.mass):
            d = self.mass.diagonal()
            if self.mass.nnz != np.count_nonzero(d) or np.any(d <= 0.0):
                raise NumericError("sparse mass matrix must be positive diagonal")
        else:
            try:
                np.linalg.cholesky(self.mass)
            except np.linalg.LinAlgError as exc:
                raise NumericError("mass matrix not positive definite") from exc

    @property
    def dim(self) -> int:
        return self.stiffness.shape[0]


@dataclass
class SpectrumResult:
    """Sorted eigenvalues of the negative operator with multiplicities."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, values, meta=None, merge_tol: float = MERGE_TOL):
        values = np.sort(np.asarray(values, dtype=float))
        scale = max(1.0, float(np.abs(values).max(initial=0.0)))
        if values.size and values[0] < -1e-9 * scale:
            raise NumericError(f"negative eigenvalue {values[0]} in a nonnegative spectrum")
        reps: List[float] = []
        counts: List[int] = []
        for v in values:
            tol = merge_tol * max(1.0, abs(v))
            if reps and v - reps[-1] <= tol:
                counts[-1] += 1
                reps[-1] += (v - reps[-1]) / counts[-1]
            else:
                reps.append(float(v))
                counts.append(1)
        return cls(np.array(reps), np.array(counts, dtype=int), dict(meta or {}))

    def expand(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.eigenvalues, self.multiplicities)


@dataclass(frozen=True)
class BaseQuadrature:
    """Base-manifold quadrature: chart points and cell weights."""

    points: tuple
    weights: np.ndarray


def torus_base(n: int) -> BaseQuadrature:
    pts = tuple(ChartPoint(TORUS, i / n, j / n) for i in range(n) for j in range(n))
    return BaseQuadrature(points=pts, weights=np.full(n * n, 1.0 / n**2))


def sphere_base(n_phi: int, n_theta: int) -> BaseQuadrature:
    """Gauss-Legendre in phi (pole-free) times uniform theta."""
    t, w = np.polynomial.legendre.leggauss(n_phi)
    phis = 0.5 * math.pi * (t + 1.0)
    wphi = 0.5 * math.pi * w
    thetas = 2.0 * math.pi * np.arange(n_theta) / n_theta
    wtheta = 2.0 * math.pi / n_theta
    pts, wts = [], []
    for p, wp in zip(phis, wphi):
        for th in thetas:
            pts.append(ChartPoint(SPHERE, p, th))
            wts.append(wp * wtheta)
    return BaseQuadrature(points=tuple(pts), weights=np.array(wts))


def _point_quadrature(metric: FinslerMetric2D, x: ChartPoint, fiber_n: int):
    # sphere fibers grow eccentric toward the poles; refine there
    if metric.chart == SPHERE:
        return fiber_quadrature_adaptive(metric, x, fiber_n)
    return fiber_quadrature(metric, x, fiber_n)


def energy(metric: FinslerMetric2D, u, base: BaseQuadrature,
           fiber_n: int = DEFAULT_FIBER_N) -> float:
    """Dirichlet-type energy: (1/pi) Int (grad u . V)^2 over the fiber bundle.

    Equals -<u, Lap u> against the canonical volume up to discretization
    (the Green identity).
    """
    shared = None
    if metric.position_independent and base.points:
        quad = _point_quadrature(metric, base.points[0], fiber_n)
        V, _, _ = reeb_profile(metric, base.points[0], quad.nodes)
        shared = (quad, V)
    total = 0.0
    for x, wx in zip(base.points, base.weights):
        if shared is not None:
            quad, V = shared
        else:
            quad = _point_quadrature(metric, x, fiber_n)
            V, _, _ = reeb_profile(metric, x, quad.nodes)
        du = field_gradient(u, x)
        rates = V @ du
        total += wx * quad.volume * float(quad.weights @ rates**2)
    return total / math.pi


def omega_norm_sq(metric: FinslerMetric2D, u, base: BaseQuadrature,
                  fiber_n: int = DEFAULT_FIBER_N) -> float:
    """Integral of u^2 against the canonical volume."""
    shared_vol = None
    if metric.position_independent and base.points:
        shared_vol = _point_quadrature(metric, base.points[0], fiber_n).volume
    total = 0.0
    for x, wx in zip(base.points, base.weights):
        vol = shared_vol
        if vol is None:
            vol = _point_quadrature(metric, x, fiber_n).volume
        total += wx * vol * float(u(x)) ** 2
    return total


def omega_mean(metric: FinslerMetric2D, u, base: BaseQuadrature,
               fiber_n: int = DEFAULT_FIBER_N) -> float:
    """Volume-weighted mean of u (for projecting out constants)."""
    shared_vol = None
    if metric.position_independent and base.points:
        shared_vol = _point_quadrature(metric, base.points[0], fiber_n).volume
    num = den = 0.0
    for x, wx in zip(base.points, base.weights):
        vol = shared_vol
        if vol is None:
            vol = _point_quadrature(metric, x, fiber_n).volume
        num += wx * vol * float(u(x))
        den += wx * vol
    return num / den


def rayleigh(metric: FinslerMetric2D, u, base: BaseQuadrature,
             fiber_n: int = DEFAULT_FIBER_N) -> float:
    """Rayleigh quotient: energy over the volume-weighted L^2 norm."""
    nsq = omega_norm_sq(metric, u, base, fiber_n)
    if nsq <= 1e-300:
        raise DomainError("Rayleigh quotient undefined: zero volume-weighted norm")
    return energy(metric, u, base, fiber_n) / nsq


def _sym_defect(a) -> float:
    if sp.issparse(a):
        diff = (a - a.T).tocoo()
        num = np.abs(diff.data).max() if diff.nnz else 0.0
        den = np.abs(a.tocoo().data).max()
    else:
        num = np.abs(a - a.T).max()
        den = np.abs(a).max()
    return float(num / den) if den > 0 else 0.0


def assemble_eigenproblem(metric: FinslerMetric2D, basis) -> SpectralProblem:
    """Assemble the symmetric pencil for a torus grid or a sphere sector.

    The stiffness is the volume-weighted operator form symmetrized by
    averaging with its transpose; the asymmetry defect is recorded.
    """
    if isinstance(basis, TorusGridBasis):
        if metric.chart != TORUS:
            raise ConfigError("torus grid basis needs a torus metric")
        if basis.n < 16:
            raise ConfigError(f"torus grid needs n >= 16, got {basis.n}")
        L, vol = assemble_torus_operator(metric, basis.n, basis.fiber_n)
        h2 = 1.0 / basis.n**2
        M = sp.diags(vol.ravel() * h2).tocsr()
        ML = (M @ L).tocsr()
        defect = _sym_defect(ML)
        S = (ML + ML.T) * 0.5
        return SpectralProblem(basis=basis, stiffness=S.tocsr(), mass=M,
                               metric_tag=f"{metric.kind} on torus", sym_defect=defect)
    if isinstance(basis, SphereHarmonicBasis):
        from .katok_ziller import galerkin_matrices

        if not isinstance(metric, KatokZillerMetric) or metric.chart != SPHERE:
            raise ConfigError("sphere harmonic basis requires a Katok-Ziller sphere metric")
        if basis.lmax < max(4, abs(basis.m)):
            raise ConfigError(f"lmax = {basis.lmax} too small")
        A, M = galerkin_matrices(metric.eps, basis.m, basis.lmax, basis.nquad)
        defect = _sym_defect(A)
        S = 0.5 * (A + A.T)
        return SpectralProblem(basis=basis, stiffness=S, mass=M,
                               metric_tag=f"katok-ziller sphere eps={metric.eps}",
                               sym_defect=defect)
    raise ConfigError(f"unknown basis spec {basis!r}")


def jacobi_eigh(B: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Sweeps rotate away off-diagonal entries until the off-diagonal
    Frobenius norm falls below ``tol`` times the matrix norm.  Returns
    ``(eigenvalues ascending, eigenvectors as columns)``.
    """
    B = np.array(B, dtype=float)
    n = B.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(B), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(B**2) - np.sum(np.diag(B) ** 2), 0.0))
        if off <= tol * scale:
            break
        thresh = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = B[p, q]
                if abs(apq) <= 0.1 * thresh:
                    continue
                tau = (B[q, q] - B[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rp, rq = B[p, :].copy(), B[q, :].copy()
                B[p, :] = c * rp - s * rq
                B[q, :] = s * rp + c * rq
                cp, cq = B[:, p].copy(), B[:, q].copy()
                B[:, p] = c * cp - s * cq
                B[:, q] = s * cp + c * cq
                B[p, q] = B[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(B).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def solve_eigen(problem: SpectralProblem, k: int,
                method: str = "auto") -> SpectrumResult:
    """Lowest k eigenvalues of the negative operator for the pencil.

    ``method="jacobi"`` reduces with a mass Cholesky factor and runs
    cyclic Jacobi (dense, dimensions up to a few hundred);
    ``method="lanczos"`` uses shift-invert Lanczos with a fixed start
    vector.  ``"auto"`` picks by dimension.
    """
    if k < 1 or k > problem.dim:
        raise ConfigError(f"k = {k} outside 1..{problem.dim}")
    if method == "auto":
        method = "jacobi" if problem.dim <= JACOBI_MAX_DENSE else "lanczos"
    S = problem.stiffness
    M = problem.mass
    meta = {
        "solver": method,
        "basis": type(problem.basis).__name__,
        "dim": problem.dim,
        "metric": problem.metric_tag,
        "sym_defect": problem.sym_defect,
    }

    if method == "jacobi":
        Sd = S.toarray() if sp.issparse(S) else np.asarray(S, dtype=float)
        Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        L = np.linalg.cholesky(Md)
        Y = np.linalg.solve(L, -Sd)
        B = np.linalg.solve(L, Y.T).T
        B = 0.5 * (B + B.T)
        w, _ = jacobi_eigh(B)
        vals = w[:k]
    elif method == "lanczos":
        if k >= problem.dim - 1:
            # ARPACK needs k < dim - 1; fall back to a dense solve
            import scipy.linalg as sla

            Sd = S.toarray() if sp.issparse(S) else np.asarray(S, dtype=float)
            Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
            vals = np.sort(sla.eigh(-Sd, Md, eigvals_only=True))[:k]
        else:
            Ss = sp.csr_matrix(S) if not sp.issparse(S) else S
            Ms = sp.csr_matrix(M) if not sp.issparse(M) else M
            v0 = np.full(problem.dim, 1.0 / math.sqrt(problem.dim))
            vals = spla.eigsh(-Ss, k=k, M=Ms, sigma=-1.0, which="LM",
                              v0=v0, return_eigenvectors=False)
            vals = np.sort(vals)
    else:
        raise ConfigError(f"unknown solver method {method!r}")
    return SpectrumResult.from_values(vals, meta=meta)


def sphere_spectrum(eps: float, lmax: int, k: int,
                    nquad: Optional[int] = None,
                    method: str = "auto") -> SpectrumResult:
    """Union of the sector spectra over |m| <= lmax (each |m| > 0 twice)."""
    from .metrics import kz_sphere

    metric = kz_sphere(eps)
    values: List[float] = []
    for m in range(0, lmax + 1):
        prob = assemble_eigenproblem(metric, SphereHarmonicBasis(lmax=lmax, m=m, nquad=nquad))
        res = solve_eigen(prob, k=prob.dim, method=method)
        vals = res.expand()
        values.extend(vals.tolist())
        if m > 0:
            values.extend(vals.tolist())
    values = np.sort(values)[: max(k, 1)]
    return SpectrumResult.from_values(values, meta={
        "solver": "galerkin-union", "lmax": lmax, "eps": eps,
    })
