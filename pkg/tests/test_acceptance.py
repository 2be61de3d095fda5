"""Acceptance criteria, one test each. A PASS/FAIL line per criterion is
printed in the pytest terminal summary."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from psforge.algebra import sl2_inverse, su2_defect
from psforge.dalembert import FrameGrid, NormalizedPotentials, revolution_potentials
from psforge.factors import (
    FactorChain,
    MinusFactor,
    PLUS,
    MINUS,
    PlusFactor,
    SplitState,
    birkhoff_split,
    reality_residual,
    swap_plus_minus,
    twist_residual,
)
from psforge.surface import HirotaOracle, check_discrete_ps, fit_lattice, hirota_step, mesh_from_frames, recover_potentials

SEED = 7
LAM16 = np.r_[np.linspace(0.2, 5.0, 6), -np.array([0.5, 2.0]), np.exp(1j * np.linspace(0.3, 6.0, 8))]


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def elementary(kind, ang, c, lam):
    """Vectorized factor matrices, shape (..., 2, 2), written out independently of the package."""
    lam = np.asarray(lam)
    e = np.exp(1j * ang)
    if kind == "plus":
        off, s2 = c * lam, 1 + np.abs(c) ** 2 * lam**2
    else:
        off, s2 = c / lam, 1 + np.abs(c) ** 2 / lam**2
    s = np.sqrt(s2 + 0j)
    out = np.empty(np.broadcast(off, e).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = e / s
    out[..., 0, 1] = off / s
    out[..., 1, 0] = -np.conj(c) * (lam if kind == "plus" else 1 / lam) / s
    out[..., 1, 1] = np.conj(e) / s
    return out


def test_criterion_1_swap_soundness():
    rng = np.random.default_rng(SEED)
    n = 10_000
    theta, kappa = rng.uniform(-math.pi, math.pi, (2, n))
    a, b = rng.uniform(0, 0.95, (2, n)) * np.exp(1j * rng.uniform(0, 2 * math.pi, (2, n)))
    t0 = time.perf_counter()
    out = [swap_plus_minus(PlusFactor(theta[i], a[i]), MinusFactor(kappa[i], b[i])) for i in range(n)]
    elapsed = time.perf_counter() - t0
    kt = np.array([m.kappa for m, _ in out])
    bt = np.array([m.b for m, _ in out])
    tt = np.array([p.theta for _, p in out])
    at = np.array([p.a for _, p in out])
    lam = LAM16[:, None]
    lhs = elementary("plus", theta, a, lam) @ elementary("minus", kappa, b, lam)
    rhs = elementary("minus", kt, bt, lam) @ elementary("plus", tt, at, lam)
    prod = float(np.max(np.abs(lhs - rhs)))
    mod = float(max(np.max(np.abs(np.abs(at) - np.abs(a))), np.max(np.abs(np.abs(bt) - np.abs(b)))))
    ok = prod <= 1e-12 and mod <= 1e-15 and np.all(kt == 0) and elapsed < 5
    record(1, "swap soundness", ok, f"product {prod:.2e} (<=1e-12), moduli {mod:.2e} (<=1e-15), {elapsed:.2f}s (<5s)")


def random_interleaved(rng, n_plus=20, n_minus=20):
    kinds = rng.permutation([PLUS] * n_plus + [MINUS] * n_minus)
    out = []
    for k in kinds:
        ang = rng.uniform(-math.pi, math.pi)
        c = rng.uniform(0, 0.95) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        out.append(PlusFactor(ang, c) if k == PLUS else MinusFactor(ang, c))
    return FactorChain(out)


def test_criterion_2_birkhoff_split():
    rng = np.random.default_rng(SEED)
    chains = [random_interleaved(rng) for _ in range(200)]
    t0 = time.perf_counter()
    prod = kappa = inc = 0.0
    for c in chains:
        v_minus, v_plus = birkhoff_split(c)
        state = SplitState().extend(c)
        s_minus, s_plus = state.parts()
        kappa = max(kappa, float(np.max(np.abs(v_minus.angles), initial=0.0)))
        kappa = max(kappa, float(np.max(np.abs(s_minus.angles), initial=0.0)))
        for lam in LAM16:
            # off the reals the entries reach ~1e6, so the error is scaled by max(1, |C|)
            ref = c.evaluate(lam)
            err = float(np.max(np.abs((v_minus + v_plus).evaluate(lam) - ref)))
            prod = max(prod, err / max(1.0, float(np.max(np.abs(ref)))))
            inc = max(inc, float(np.max(np.abs(s_minus.evaluate(lam) - v_minus.evaluate(lam)))))
            inc = max(inc, float(np.max(np.abs(s_plus.evaluate(lam) - v_plus.evaluate(lam)))))
    elapsed = time.perf_counter() - t0
    ok = prod <= 1e-10 and kappa == 0.0 and inc <= 1e-11 and elapsed < 10
    record(2, "Birkhoff split", ok, f"product {prod:.2e} (<=1e-10, relative off the reals), max|kappa| {kappa:.1e}, incremental {inc:.2e} (<=1e-11), {elapsed:.2f}s (<10s)")


@pytest.fixture(scope="module")
def normalized_grids():
    rng = np.random.default_rng(SEED)
    pots = [NormalizedPotentials.random(rng, 6, 6) for _ in range(20)]
    t0 = time.perf_counter()
    grids = [FrameGrid(p, 6, 6) for p in pots]
    return pots, grids, time.perf_counter() - t0


@pytest.fixture(scope="module")
def revolution_grids():
    out = {}
    for q in (0.8, 0.4):
        t0 = time.perf_counter()
        grid = FrameGrid(revolution_potentials(q, 8), 32, 32)
        out[q] = (grid, time.perf_counter() - t0)
    return out


def test_criterion_3_loop_group_invariants(normalized_grids, revolution_grids):
    chains = [c for g in normalized_grids[1] for row in g.frames for c in row]
    chains += [c for g, _ in revolution_grids.values() for row in g.frames for c in row]
    lams = [0.5, 1.0, 2.0, -1.5] + [np.exp(1j * t) for t in (0.4, 1.3, 2.2, 3.9)]
    real = twist = 0.0
    for c in chains:
        for lam in lams:
            real = max(real, reality_residual(c, lam))
            twist = max(twist, twist_residual(c, lam))
    ok = real <= 1e-11 and twist <= 1e-12
    record(3, "loop-group invariants", ok, f"{len(chains)} frames, reality {real:.2e} (<=1e-11), twisting {twist:.2e} (<=1e-12)")


def test_criterion_4_oracle_cross_validation(normalized_grids):
    pots, grids, t_build = normalized_grids
    t0 = time.perf_counter()
    frame = vert = 0.0
    for pot, grid in zip(pots, grids):
        oracle = HirotaOracle(pot, 6, 6)
        for lam in (0.5, 1.0, 2.0):
            F = oracle.frames(lam)
            for n in range(7):
                for m in range(7):
                    frame = max(frame, float(np.max(np.abs(grid.evaluate(n, m, lam) - F[n, m]))))
            diff = mesh_from_frames(grid, lam).vertices - oracle.mesh(lam).vertices
            vert = max(vert, float(np.max(np.abs(diff))))
    elapsed = time.perf_counter() - t0 + t_build
    ok = frame <= 1e-9 and vert <= 1e-8 and elapsed < 30
    record(4, "oracle cross-validation", ok, f"frames {frame:.2e} (<=1e-9), vertices {vert:.2e} (<=1e-8), {elapsed:.2f}s (<30s)")


@pytest.mark.parametrize("q", [0.8, 0.4])
def test_criterion_5_discrete_ps_validity(revolution_grids, q):
    grid, t_build = revolution_grids[q]
    t0 = time.perf_counter()
    cop = opp = 0.0
    for lam in (1.0, 1.5):
        r = check_discrete_ps(mesh_from_frames(grid, lam))
        cop, opp = max(cop, r.coplanarity_max), max(opp, r.opposite_edge_max)
    hirota = fit_lattice(grid, 32, 32).hirota_residual_max
    elapsed = time.perf_counter() - t0 + t_build
    ok = cop <= 1e-9 and opp <= 1e-10 and hirota <= 1e-10 and elapsed < 60
    record(
        5,
        f"discrete PS validity q={q}",
        ok,
        f"coplanarity {cop:.2e} (<=1e-9), opposite edge {opp:.2e} (<=1e-10), Hirota {hirota:.2e} (<=1e-10), {elapsed:.2f}s (<60s)",
    )


def bisect_u12(u, u1, u2, p, q):
    k = p * q / 4
    Y = (u1 + u2) / 4
    lo, hi = Y - math.pi / 2, Y + math.pi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if math.sin(mid - Y) - k * math.sin(mid + Y) < 0:
            lo = mid
        else:
            hi = mid
    return 4 * 0.5 * (lo + hi) - u


def test_criterion_6_hirota_vs_bisection():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10_000):
        u, u1, u2 = rng.uniform(-2 * math.pi, 2 * math.pi, 3)
        p, q = rng.uniform(-1.6, 1.6, 2)
        worst = max(worst, abs(hirota_step(u, u1, u2, p, q) - bisect_u12(u, u1, u2, p, q)))
    record(6, "Hirota vs bisection", worst <= 1e-12, f"10^4 inputs |k|<=0.64, max deviation {worst:.2e} (<=1e-12)")


def test_criterion_7_sym_analytics(normalized_grids, revolution_grids):
    rng = np.random.default_rng(SEED)
    chains = [random_interleaved(rng, 10, 10) for _ in range(50)]
    chains += [g.frames[6][6] for g in normalized_grids[1]]
    chains += [g.frames[32][32] for g, _ in revolution_grids.values()]
    deriv = 0.0
    for c in chains:
        for lam in (0.5, 1.0, 1.5, 2.0):
            _, dF = c.evaluate_with_derivative(lam)
            h = 1e-5
            fd = (8 * (c.evaluate(lam + h) - c.evaluate(lam - h)) - (c.evaluate(lam + 2 * h) - c.evaluate(lam - 2 * h))) / (12 * h)
            deriv = max(deriv, float(np.max(np.abs(dF - fd))) / max(1.0, float(np.max(np.abs(dF)))))
    frames = [c for g in normalized_grids[1] for row in g.frames for c in row]
    frames += [c for g, _ in revolution_grids.values() for row in g.frames for c in row]
    sym = 0.0
    for c in frames:
        for lam in (1.0, 1.5):
            F, dF = c.evaluate_with_derivative(lam)
            X = lam * dF @ sl2_inverse(F)
            sym = max(sym, su2_defect(X) / max(1.0, float(np.max(np.abs(X)))))
    ok = deriv <= 1e-7 and sym <= 1e-10
    record(7, "Sym-formula analytics", ok, f"derivative rel. error {deriv:.2e} (<=1e-7), su(2) defect {sym:.2e} (<=1e-10) over {len(frames)} frames")


def test_criterion_8_potential_recovery(normalized_grids):
    pots, grids, _ = normalized_grids
    wrap = lambda x: (x + math.pi) % (2 * math.pi) - math.pi
    worst = 0.0
    for pot, grid in zip(pots, grids):
        fit = fit_lattice(grid, 6, 6, p_sign=np.sign(pot.p), q_sign=np.sign(pot.q))
        alpha, beta = recover_potentials(fit)
        worst = max(worst, float(np.max(np.abs(wrap(alpha - pot.alpha)))), float(np.max(np.abs(wrap(beta - pot.beta)))))
    record(8, "potential recovery", worst <= 1e-9, f"max |alpha, beta error| mod 2pi {worst:.2e} (<=1e-9)")
