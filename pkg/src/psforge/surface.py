"""Sym-formula meshes, discrete-PS checks and the Hirota-lattice oracle.

The surface at spectral parameter lam > 0 is f = lam (dF/dlam) F^{-1}, read
back from su(2) as a vector in R^3. The oracle builds the same frames
independently: it solves the discrete sine-Gordon (Hirota) equation for u on
the lattice and multiplies the Lax matrices

    U = [[e^{-(i/2)(u1-u)}, (i/2) p lam], [(i/2) p lam, e^{(i/2)(u1-u)}]] / sqrt(1 + (p/2)^2 lam^2)
    V = [[1, -(i/2) q e^{(i/2)(u2+u)} / lam], [-(i/2) q e^{-(i/2)(u2+u)} / lam, 1]] / sqrt(1 + (q/2)^2 / lam^2)

along lattice paths, differentiating in lam by Richardson-extrapolated
central differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import from_su2, max_abs, sl2_inverse, su2_defect, unitarity_defect
from .dalembert import FrameGrid, NormalizedPotentials

SYM_TOL = 1e-10
FIT_TOL = 1e-6
FIT_LAMBDAS = (0.5, 1.0, 2.0)

FOUR_PI = 4.0 * math.pi


def _wrap(x, period):
    """Representative of x modulo ``period`` in [-period/2, period/2)."""
    return (np.asarray(x) + period / 2) % period - period / 2


def _check_lambda(lam):
    lam = float(lam)
    if not lam > 0 or not math.isfinite(lam):
        raise ValueError(f"spectral parameter must be a positive real, got {lam!r}")
    return lam


def sym_point(chain, lam: float, tol: float = SYM_TOL) -> np.ndarray:
    lam = _check_lambda(lam)
    F, dF = chain.evaluate_with_derivative(lam)
    X = lam * dF @ sl2_inverse(F)
    defect = su2_defect(X)
    if not defect <= tol * max(1.0, max_abs(X)):
        raise ValueError(f"Sym image is not in su(2) (defect {defect:.3e}); invalid frame chain")
    return from_su2(X, tol=math.inf)


@dataclass(eq=False)
class SurfaceMesh:
    N: int
    M: int
    lam: float
    vertices: np.ndarray  # (N+1, M+1, 3)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.shape != (self.N + 1, self.M + 1, 3):
            raise ValueError(f"vertex array shape {self.vertices.shape} does not match window")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("mesh has non-finite vertices")

    def index(self, n: int, m: int) -> int:
        """0-based row-major vertex index."""
        return n * (self.M + 1) + m

    def quads(self) -> np.ndarray:
        """(N*M, 4) 0-based corner indices ordered (n,m), (n+1,m), (n+1,m+1), (n,m+1)."""
        n, m = np.meshgrid(np.arange(self.N), np.arange(self.M), indexing="ij")
        n, m = n.ravel(), m.ravel()
        W = self.M + 1
        return np.stack([n * W + m, (n + 1) * W + m, (n + 1) * W + m + 1, n * W + m + 1], axis=1)


def mesh_from_frames(grid: FrameGrid, lam: float) -> SurfaceMesh:
    lam = _check_lambda(lam)
    verts = np.empty((grid.N + 1, grid.M + 1, 3))
    for n in range(grid.N + 1):
        for m in range(grid.M + 1):
            verts[n, m] = sym_point(grid.frames[n][m], lam)
    return SurfaceMesh(grid.N, grid.M, lam, verts)


def build_mesh(source, N: int, M: int, lam: float, threads: int | None = None) -> SurfaceMesh:
    if N < 1 or M < 1:
        raise ValueError("window must be at least 1x1")
    return mesh_from_frames(FrameGrid(source, N, M, threads=threads), lam)


# -- verification -----------------------------------------------------------


@dataclass
class VerificationReport:
    coplanarity_max: float = 0.0
    opposite_edge_max: float = 0.0
    hirota_residual_max: float = 0.0
    unitarity_max: float = 0.0
    frame_cross_check_max: float = 0.0
    coplanarity: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    opposite_edge: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    hirota_residual: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    unitarity: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    frame_cross_check: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    degenerate_edges: list = field(default_factory=list)

    MAXIMA = (
        "coplanarity_max",
        "opposite_edge_max",
        "hirota_residual_max",
        "unitarity_max",
        "frame_cross_check_max",
    )

    def to_dict(self) -> dict:
        out = {k: float(getattr(self, k)) for k in self.MAXIMA}
        for k in ("coplanarity", "opposite_edge", "hirota_residual", "unitarity", "frame_cross_check"):
            out[k + "_cells"] = np.asarray(getattr(self, k)).tolist()
        out["degenerate_edges"] = [list(e) for e in self.degenerate_edges]
        return out


def _max(arr) -> float:
    arr = np.asarray(arr)
    return float(np.max(arr)) if arr.size else 0.0


def check_discrete_ps(mesh: SurfaceMesh) -> VerificationReport:
    """Planar vertex stars and equal opposite edges, per cell.

    Coplanarity at an interior vertex is |det[f1-f, f2-f, f-1 - f]| +
    |det[f1-f, f2-f, f-2 - f]| divided by the cube of the mean incident edge
    length. Zero-length edges are listed in ``degenerate_edges``; a star whose
    mean edge length vanishes gets an infinite residual.
    """
    V = mesh.vertices
    e1 = np.linalg.norm(V[1:, :] - V[:-1, :], axis=-1)  # (N, M+1), edge (n,m)-(n+1,m)
    e2 = np.linalg.norm(V[:, 1:] - V[:, :-1], axis=-1)  # (N+1, M), edge (n,m)-(n,m+1)
    degenerate = [("n", int(i), int(j)) for i, j in zip(*np.nonzero(e1 == 0))]
    degenerate += [("m", int(i), int(j)) for i, j in zip(*np.nonzero(e2 == 0))]

    opp = np.maximum(np.abs(e1[:, :-1] - e1[:, 1:]), np.abs(e2[:-1, :] - e2[1:, :]))

    if mesh.N >= 2 and mesh.M >= 2:
        f = V[1:-1, 1:-1]
        d1, d1b = V[2:, 1:-1] - f, V[:-2, 1:-1] - f
        d2, d2b = V[1:-1, 2:] - f, V[1:-1, :-2] - f
        normal = np.cross(d1, d2)
        vol = np.abs(np.einsum("...i,...i", normal, d1b)) + np.abs(np.einsum("...i,...i", normal, d2b))
        scale = (
            np.linalg.norm(d1, axis=-1)
            + np.linalg.norm(d1b, axis=-1)
            + np.linalg.norm(d2, axis=-1)
            + np.linalg.norm(d2b, axis=-1)
        ) / 4
        with np.errstate(divide="ignore", invalid="ignore"):
            cop = np.where(scale > 0, vol / scale**3, np.inf)
    else:
        cop = np.zeros((0, 0))

    return VerificationReport(
        coplanarity_max=_max(cop),
        opposite_edge_max=_max(opp),
        coplanarity=cop,
        opposite_edge=opp,
        degenerate_edges=degenerate,
    )


# -- discrete sine-Gordon ---------------------------------------------------


def hirota_step(u: float, u1: float, u2: float, p: float, q: float) -> float:
    """Solve sin((u12-u1-u2+u)/4) = (pq/4) sin((u12+u1+u2+u)/4) for u12.

    With X = (u12+u)/4 and Y = (u1+u2)/4 the equation reads
    tan X = ((1+k)/(1-k)) tan Y, k = pq/4. X is taken in the same quadrant
    as Y (atan2 keeps this pole-free), so u12 is continuous in the data.
    """
    k = p * q / 4.0
    if not abs(k) < 1:
        raise ValueError(f"|pq/4| = {abs(k)!r} must be < 1")
    Y = (u1 + u2) / 4.0
    r = (1.0 + k) / (1.0 - k)
    X = Y + math.remainder(math.atan2(r * math.sin(Y), math.cos(Y)) - Y, 2.0 * math.pi)
    return 4.0 * X - u


@dataclass(eq=False)
class HirotaGrid:
    u: np.ndarray  # (N+1, M+1)
    p: np.ndarray  # (N,)
    q: np.ndarray  # (M,)


def hirota_residual_cells(g: HirotaGrid) -> np.ndarray:
    u = np.asarray(g.u)
    u0, u1, u2, u12 = u[:-1, :-1], u[1:, :-1], u[:-1, 1:], u[1:, 1:]
    k = np.outer(g.p, g.q) / 4.0
    return np.abs(np.sin((u12 - u1 - u2 + u0) / 4) - k * np.sin((u12 + u1 + u2 + u0) / 4))


def hirota_residual(g: HirotaGrid) -> float:
    return _max(hirota_residual_cells(g))


def lax_u(u, u1, p, lam):
    e = np.exp(-0.5j * (u1 - u))
    off = 0.5j * p * lam
    return np.array([[e, off], [off, 1 / e]]) / np.sqrt(1 + (p / 2) ** 2 * lam**2 + 0j)


def lax_v(u, u2, q, lam):
    e = np.exp(0.5j * (u2 + u))
    c = 0.5j * q / lam
    return np.array([[1, -c * e], [-c / e, 1]]) / np.sqrt(1 + (q / 2) ** 2 / lam**2 + 0j)


class HirotaOracle:
    """Frames and meshes from a directly solved Hirota lattice.

    ``u(0,0) = 0``; the axes follow u(n+1,0) = 2 alpha(n) - u(n,0) and
    u(0,m+1) = 2 beta(m) - u(0,m); the interior is filled by :func:`hirota_step`.
    """

    PATH_TOL = 1e-11

    def __init__(self, pot: NormalizedPotentials, N: int, M: int, u00: float = 0.0):
        pot.check_window(N, M)
        self.N, self.M = N, M
        self.p = np.array(pot.p[:N])
        self.q = np.array(pot.q[:M])
        u = np.zeros((N + 1, M + 1))
        u[0, 0] = u00
        for n in range(N):
            u[n + 1, 0] = 2 * pot.alpha[n] + 2 * u00 - u[n, 0]
        for m in range(M):
            u[0, m + 1] = 2 * pot.beta[m] - u[0, m]
        for s in range(2, N + M + 1):
            for n in range(max(1, s - M), min(N, s - 1) + 1):
                m = s - n
                u[n, m] = hirota_step(u[n - 1, m - 1], u[n, m - 1], u[n - 1, m], self.p[n - 1], self.q[m - 1])
        self.u = u
        self._cache = {}

    @property
    def grid(self) -> HirotaGrid:
        return HirotaGrid(self.u, self.p, self.q)

    def frames(self, lam) -> np.ndarray:
        """(N+1, M+1, 2, 2) frames; raises if the two paths around a cell disagree."""
        lam = complex(lam)
        if lam in self._cache:
            return self._cache[lam]
        u, N, M = self.u, self.N, self.M
        F = np.empty((N + 1, M + 1, 2, 2), dtype=complex)
        F[0, 0] = np.eye(2)
        for n in range(N):
            F[n + 1, 0] = F[n, 0] @ lax_u(u[n, 0], u[n + 1, 0], self.p[n], lam)
        for n in range(N + 1):
            for m in range(M):
                F[n, m + 1] = F[n, m] @ lax_v(u[n, m], u[n, m + 1], self.q[m], lam)
                if n > 0:
                    other = F[n - 1, m + 1] @ lax_u(u[n - 1, m + 1], u[n, m + 1], self.p[n - 1], lam)
                    dev = max_abs(other - F[n, m + 1]) / max(1.0, max_abs(other))
                    if dev > self.PATH_TOL:
                        raise ArithmeticError(
                            f"path dependence {dev:.3e} at cell ({n - 1}, {m}): Hirota solution is wrong"
                        )
        self._cache[lam] = F
        return F

    def evaluate(self, n: int, m: int, lam) -> np.ndarray:
        return self.frames(lam)[n, m]

    def mesh(self, lam: float, h: float = 1e-5) -> SurfaceMesh:
        lam = _check_lambda(lam)

        def central(step):
            return (self.frames(lam + step) - self.frames(lam - step)) / (2 * step)

        dF = (4 * central(h / 2) - central(h)) / 3
        F = self.frames(lam)
        verts = np.empty((self.N + 1, self.M + 1, 3))
        for n in range(self.N + 1):
            for m in range(self.M + 1):
                X = lam * dF[n, m] @ sl2_inverse(F[n, m])
                verts[n, m] = from_su2(X, tol=1e-6)
        return SurfaceMesh(self.N, self.M, lam, verts)


def hirota_oracle_surface(pot: NormalizedPotentials, N: int, M: int, lam: float):
    oracle = HirotaOracle(pot, N, M)
    return oracle.mesh(lam), oracle


# -- transition fitting -----------------------------------------------------


def _transition(frames, n0, m0, n1, m1, lam):
    return sl2_inverse(frames.evaluate(n0, m0, lam)) @ frames.evaluate(n1, m1, lam)


def _plus_matrix(theta, a, lam):
    s = np.sqrt(1 + abs(a) ** 2 * lam**2 + 0j)
    return np.array([[np.exp(1j * theta), a * lam], [-np.conj(a) * lam, np.exp(-1j * theta)]]) / s


def _minus_matrix(kappa, b, lam):
    s = np.sqrt(1 + abs(b) ** 2 / lam**2 + 0j)
    return np.array([[np.exp(1j * kappa), b / lam], [-np.conj(b) / lam, np.exp(-1j * kappa)]]) / s


def fit_plus(mats: Sequence[np.ndarray], lams: Sequence[float]):
    """Least-squares fit of transition matrices to one plus factor e+(theta, a).

    Returns (theta, a, residual) with residual the max entrywise misfit.
    """
    lams = [_check_lambda(l) for l in lams]
    if len(lams) < 2:
        raise ValueError("need at least two spectral samples")
    d = np.array([T[0, 0] for T in mats])
    theta = float(np.angle(np.mean(d / np.abs(d))))
    ratio = np.mean([T[0, 1] / (T[0, 0] * l) for T, l in zip(mats, lams)])
    a = complex(ratio * np.exp(1j * theta))
    res = max(max_abs(T - _plus_matrix(theta, a, l)) for T, l in zip(mats, lams))
    return theta, a, res


def fit_minus(mats: Sequence[np.ndarray], lams: Sequence[float]):
    lams = [_check_lambda(l) for l in lams]
    if len(lams) < 2:
        raise ValueError("need at least two spectral samples")
    d = np.array([T[0, 0] for T in mats])
    kappa = float(np.angle(np.mean(d / np.abs(d))))
    ratio = np.mean([T[0, 1] * l / T[0, 0] for T, l in zip(mats, lams)])
    b = complex(ratio * np.exp(1j * kappa))
    res = max(max_abs(T - _minus_matrix(kappa, b, l)) for T, l in zip(mats, lams))
    return kappa, b, res


@dataclass
class Transitions:
    u_diff: float  # u(n+1,m) - u(n,m), defined mod 4 pi
    u_sum: float  # u(n,m+1) + u(n,m), defined mod 4 pi given the sign of q
    p: float
    q: float
    residual: float


def extract_transitions(frames, n: int, m: int, lams=FIT_LAMBDAS, q_sign: float = 1.0,
                        tol: float = FIT_TOL) -> Transitions:
    """Read u-differences, u-sums and p, q off F^{-1}F_1 and F^{-1}F_2.

    ``frames`` is anything with ``evaluate(n, m, lam)``. The frame only fixes
    q e^{(i/2)(u2+u)}, so the sign of q is an input (``q_sign``).
    """
    lams = [_check_lambda(l) for l in lams]
    if len(set(lams)) < 2:
        raise ValueError("need at least two distinct spectral samples")
    TU = [_transition(frames, n, m, n + 1, m, l) for l in lams]
    TV = [_transition(frames, n, m, n, m + 1, l) for l in lams]
    theta, a, _ = fit_plus(TU, lams)
    kappa, b, _ = fit_minus(TV, lams)
    p = 2.0 * a.imag
    q = math.copysign(2.0 * abs(b), q_sign)
    if p == 0.0 or q == 0.0:
        raise ValueError("transitions have no off-diagonal part; not a Lax-pair frame")
    psi = float(np.angle(b / (-0.5j * q)))
    u_diff = -2.0 * theta
    u_sum = 2.0 * psi
    res = max(
        max(max_abs(T - lax_u(0.0, u_diff, p, l)) for T, l in zip(TU, lams)),
        max(max_abs(T - lax_v(0.0, u_sum, q, l)) for T, l in zip(TV, lams)),
    )
    if res > tol:
        raise ValueError(f"transitions do not fit the Lax templates (residual {res:.3e})")
    return Transitions(u_diff, u_sum, p, q, res)


@dataclass(eq=False)
class LatticeFit:
    grid: HirotaGrid
    gauge: np.ndarray  # diagonal gauge angles gamma(n, m)
    fit_residual: float  # worst single-edge misfit to an elementary factor
    gauge_residual: float  # how far the gauged factors are from the Lax templates
    consistency_residual: float  # disagreement between u read along n and along m
    hirota_cells: np.ndarray

    @property
    def hirota_residual_max(self) -> float:
        return _max(self.hirota_cells)


def fit_lattice(frames, N: int, M: int, lams=FIT_LAMBDAS, p_sign=1.0, q_sign=1.0) -> LatticeFit:
    """Fit every lattice transition and remove a diagonal gauge.

    Frames that differ from a Lax-pair frame by F -> F diag(e^{i g}, e^{-i g})
    (for instance when a lam-independent diagonal factor was dropped) still
    give the underlying u, p, q. ``p_sign`` and ``q_sign`` (scalars or per-index
    arrays) pick the sign convention the frame cannot see.
    """
    lams = [_check_lambda(l) for l in lams]
    p_sign = np.broadcast_to(np.sign(p_sign), (N,)) if N else np.zeros(0)
    q_sign = np.broadcast_to(np.sign(q_sign), (M,)) if M else np.zeros(0)
    F = {l: [[frames.evaluate(n, m, l) for m in range(M + 1)] for n in range(N + 1)] for l in lams}

    theta = np.zeros((N, M + 1))
    a = np.zeros((N, M + 1), dtype=complex)
    kappa = np.zeros((N + 1, M))
    b = np.zeros((N + 1, M), dtype=complex)
    fit_res = 0.0
    for n in range(N + 1):
        for m in range(M + 1):
            inv = {l: sl2_inverse(F[l][n][m]) for l in lams}
            if n < N:
                theta[n, m], a[n, m], r = fit_plus([inv[l] @ F[l][n + 1][m] for l in lams], lams)
                fit_res = max(fit_res, r)
            if m < M:
                kappa[n, m], b[n, m], r = fit_minus([inv[l] @ F[l][n][m + 1] for l in lams], lams)
                fit_res = max(fit_res, r)

    g = np.zeros((N + 1, M + 1))
    for n in range(N):
        target = np.angle(1j * p_sign[n])
        g[n + 1, 0] = np.angle(a[n, 0]) - target - g[n, 0]
    for m in range(M):
        g[:, m + 1] = g[:, m] - kappa[:, m]

    theta_g = theta - g[:-1, :] + g[1:, :]
    a_g = a * np.exp(-1j * (g[:-1, :] + g[1:, :]))
    kappa_g = kappa - g[:, :-1] + g[:, 1:]
    b_g = b * np.exp(-1j * (g[:, :-1] + g[:, 1:]))

    p_cells = 2.0 * a_g.imag
    p = p_cells[:, 0].copy() if N else np.zeros(0)
    q_cells = 2.0 * np.abs(b_g) * q_sign[None, :]
    q = q_cells[0, :].copy() if M else np.zeros(0)
    gauge_res = max(
        _max(np.abs(a_g.real)),
        _max(np.abs(p_cells - p[:, None])),
        _max(np.abs(q_cells - q[None, :])),
        _max(np.abs(_wrap(kappa_g, 2 * math.pi))),
    )

    psi = np.angle(b_g / (-0.5j * q_cells)) if M else np.zeros((N + 1, 0))
    u = np.zeros((N + 1, M + 1))
    for n in range(N):
        u[n + 1, 0] = u[n, 0] - 2.0 * theta_g[n, 0]
    for m in range(M):
        u[:, m + 1] = 2.0 * psi[:, m] - u[:, m]
    consistency = _max(np.abs(_wrap(u[1:, :] - u[:-1, :] + 2.0 * theta_g, FOUR_PI)))

    grid = HirotaGrid(u, p, q)
    return LatticeFit(
        grid=grid,
        gauge=g,
        fit_residual=fit_res,
        gauge_residual=gauge_res,
        consistency_residual=consistency,
        hirota_cells=hirota_residual_cells(grid) if N and M else np.zeros((N, M)),
    )


def recover_potentials(fit: LatticeFit):
    """alpha(n) = u(n+1,0)/2 + u(n,0)/2 - u(0,0) and beta(m) = u(0,m+1)/2 + u(0,m)/2."""
    u = fit.grid.u
    alpha = 0.5 * u[1:, 0] + 0.5 * u[:-1, 0] - u[0, 0]
    beta = 0.5 * u[0, 1:] + 0.5 * u[0, :-1]
    return alpha, beta


def compatibility_residual(fit: LatticeFit, lams=FIT_LAMBDAS) -> float:
    """max | U(n,m) V(n+1,m) - V(n,m) U(n,m+1) | over cells and samples."""
    u, p, q = fit.grid.u, fit.grid.p, fit.grid.q
    N, M = len(p), len(q)
    worst = 0.0
    for l in lams:
        for n in range(N):
            for m in range(M):
                lhs = lax_u(u[n, m], u[n + 1, m], p[n], l) @ lax_v(u[n + 1, m], u[n + 1, m + 1], q[m], l)
                rhs = lax_v(u[n, m], u[n, m + 1], q[m], l) @ lax_u(u[n, m + 1], u[n + 1, m + 1], p[n], l)
                worst = max(worst, max_abs(lhs - rhs))
    return worst


def unitarity_cells(grid: FrameGrid, lams: Sequence[float]) -> np.ndarray:
    out = np.zeros((grid.N + 1, grid.M + 1))
    for n in range(grid.N + 1):
        for m in range(grid.M + 1):
            out[n, m] = max(unitarity_defect(grid.frames[n][m].evaluate(l)) for l in lams)
    return out


def verify_frames(grid: FrameGrid, lam: float, fit_lams=FIT_LAMBDAS, p_sign=1.0, q_sign=1.0):
    """Full report for the mesh of ``grid`` at ``lam`` plus frame-level residuals."""
    mesh = mesh_from_frames(grid, lam)
    report = check_discrete_ps(mesh)
    if grid.N and grid.M:
        fit = fit_lattice(grid, grid.N, grid.M, fit_lams, p_sign=p_sign, q_sign=q_sign)
        report.hirota_residual = fit.hirota_cells
        report.hirota_residual_max = fit.hirota_residual_max
    lams = sorted({float(lam), *map(float, fit_lams)})
    report.unitarity = unitarity_cells(grid, lams)
    report.unitarity_max = _max(report.unitarity)
    report.frame_cross_check = grid.cross_check(lams)
    report.frame_cross_check_max = _max(report.frame_cross_check)
    return mesh, report
