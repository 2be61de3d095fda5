"""Extended frames from discrete potentials via one Birkhoff split per lattice point.

Normalized potentials are four one-variable tables: alpha(n), p(n) along the
first lattice direction and beta(m), q(m) along the second. Each step
contributes one elementary factor,

    xi+(n) = e+(0, (i/2) p(n) e^{-i alpha(n)}),   xi-(m) = e-(0, -(i/2) q(m) e^{i beta(m)}),

F+(n) and G-(m) are their running products, D(n) = diag(e^{ik/2}, e^{-ik/2})
with k(n) = 2 sum_{j<n} (-1)^{j+n} alpha(j), and splitting
(F+ D)^{-1} G- = V- V+^{-1} gives the frame F = G- V+ = F+ D V-.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .factors import (
    FactorChain,
    MinusFactor,
    PhaseFactor,
    PlusFactor,
    SplitState,
    birkhoff_split,
)


def _table(values, name) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class NormalizedPotentials:
    alpha: np.ndarray
    beta: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "p", "q"):
            object.__setattr__(self, name, _table(getattr(self, name), name))
        if len(self.alpha) != len(self.p):
            raise ValueError("alpha and p must have the same length")
        if len(self.beta) != len(self.q):
            raise ValueError("beta and q must have the same length")
        if len(self.alpha) and self.alpha[0] != 0.0:
            raise ValueError(f"alpha(0) must be 0, got {self.alpha[0]!r}")
        for name in ("p", "q"):
            half = np.abs(getattr(self, name)) / 2
            if np.any(half <= 0) or np.any(half >= 1):
                raise ValueError(f"{name} violates 0 < |{name}/2| < 1")

    @property
    def n_steps(self) -> int:
        return len(self.alpha)

    @property
    def m_steps(self) -> int:
        return len(self.beta)

    def check_window(self, N: int, M: int):
        if N > self.n_steps or M > self.m_steps:
            raise ValueError(
                f"potential tables ({self.n_steps}, {self.m_steps}) do not cover window ({N}, {M})"
            )

    @classmethod
    def constant(cls, N, M, p, q, alpha=0.0, beta=0.0):
        """Constant tables; alpha(0) is pinned to 0 whatever ``alpha`` is."""
        al = np.full(N, float(alpha))
        if N:
            al[0] = 0.0
        return cls(al, np.full(M, float(beta)), np.full(N, float(p)), np.full(M, float(q)))

    @classmethod
    def random(cls, rng: np.random.Generator, N: int, M: int, angle=math.pi / 2, pq_range=(0.2, 1.8)):
        """Random tables: angles uniform in [-angle, angle], |p|, |q| uniform in pq_range with random sign."""
        lo, hi = pq_range
        alpha = rng.uniform(-angle, angle, N)
        if N:
            alpha[0] = 0.0
        beta = rng.uniform(-angle, angle, M)
        p = rng.choice([-1.0, 1.0], N) * rng.uniform(lo, hi, N)
        q = rng.choice([-1.0, 1.0], M) * rng.uniform(lo, hi, M)
        return cls(alpha, beta, p, q)


def xi_plus(pot: NormalizedPotentials, n: int) -> PlusFactor:
    return PlusFactor(0.0, 0.5j * pot.p[n] * np.exp(-1j * pot.alpha[n]))


def xi_minus(pot: NormalizedPotentials, m: int) -> MinusFactor:
    return MinusFactor(0.0, -0.5j * pot.q[m] * np.exp(1j * pot.beta[m]))


def _check_index(i, name):
    if i < 0:
        raise ValueError(f"{name} must be >= 0 (windows are forward-only), got {i}")


def solve_frame_plus(pot: NormalizedPotentials, n: int) -> FactorChain:
    """F+(n) = xi+(0) xi+(1) ... xi+(n-1); the identity at n = 0."""
    _check_index(n, "n")
    return FactorChain(xi_plus(pot, j) for j in range(n))


def solve_frame_minus(pot: NormalizedPotentials, m: int) -> FactorChain:
    _check_index(m, "m")
    return FactorChain(xi_minus(pot, j) for j in range(m))


def phase_k(pot: NormalizedPotentials, n: int) -> PhaseFactor:
    """D(n) as a phase factor: delta = k(n)/2, k(n) = 2 sum_{j<n} (-1)^{j+n} alpha(j)."""
    _check_index(n, "n")
    signs = (-1.0) ** (np.arange(n) + n)
    k = 2.0 * float(np.dot(signs, pot.alpha[:n]))
    return PhaseFactor(k / 2.0)


def _plus_side(pot, n):
    return solve_frame_plus(pot, n) + FactorChain([phase_k(pot, n)])


def extended_frame_assemblies(pot: NormalizedPotentials, n: int, m: int):
    """Both assemblies (G- V+, F+ D V-) of the frame at (n, m), from a fresh split."""
    fd = _plus_side(pot, n)
    g = solve_frame_minus(pot, m)
    v_minus, v_plus_inv = birkhoff_split(fd.inverse() + g)
    return g + v_plus_inv.inverse(), fd + v_minus


def extended_frame(pot: NormalizedPotentials, n: int, m: int) -> FactorChain:
    return extended_frame_assemblies(pot, n, m)[0]


@dataclass(frozen=True)
class GeneralizedPotentials:
    """Step chains eta_n(n) (no m-dependence) and eta_m(m) (no n-dependence)."""

    eta_n: Callable[[int], FactorChain]
    eta_m: Callable[[int], FactorChain]
    label: str = "generalized"

    def frame_n(self, n: int) -> FactorChain:
        _check_index(n, "n")
        return _concat(self.eta_n(j) for j in range(n))

    def frame_m(self, m: int) -> FactorChain:
        _check_index(m, "m")
        return _concat(self.eta_m(j) for j in range(m))


def _concat(chains) -> FactorChain:
    out = FactorChain()
    for c in chains:
        out = out + c
    return out


def sandwich(left: FactorChain, core, right: FactorChain) -> FactorChain:
    """P^l xi P^r as a single chain."""
    return left + FactorChain([core]) + right


def revolution_potentials(q: float, ell: int) -> GeneralizedPotentials:
    """eta_n = eta_m^{-1} = A+ L A- with L = diag(e^{ic}, e^{-ic}), c = pi / ell."""
    if not 0 < abs(q / 2) < 1:
        raise ValueError("q violates 0 < |q/2| < 1")
    if int(ell) != ell or ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell!r}")
    c = math.pi / ell
    eta = FactorChain([PlusFactor(0.0, 0.5j * q), PhaseFactor(c), MinusFactor(0.0, 0.5j * q)])
    inv = eta.inverse()
    return GeneralizedPotentials(lambda n: eta, lambda m: inv, label=f"revolution(q={q!r}, ell={ell})")


def frame_from_generalized_assemblies(gp: GeneralizedPotentials, n: int, m: int):
    """(F_n V-, G_m V+) from a fresh split of F_n^{-1} G_m."""
    fn = gp.frame_n(n)
    gm = gp.frame_m(m)
    v_minus, v_plus_inv = birkhoff_split(fn.inverse() + gm)
    return fn + v_minus, gm + v_plus_inv.inverse()


def frame_from_generalized(gp: GeneralizedPotentials, n: int, m: int) -> FactorChain:
    return frame_from_generalized_assemblies(gp, n, m)[0]


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("PSFORGE_THREADS", "1")))
    except ValueError:
        return 1


class FrameGrid:
    """Frame chains on the window 0 <= n <= N, 0 <= m <= M.

    ``frames[n][m]`` is the primary assembly and ``alternates[n][m]`` the other
    one (F+ D V- for normalized potentials, G_m V+ for generalized ones).
    Rows are built with an incremental split extended along m.
    """

    def __init__(self, source, N: int, M: int, threads: int | None = None):
        if N < 0 or M < 0:
            raise ValueError("window sizes must be non-negative")
        self.source, self.N, self.M = source, N, M
        if isinstance(source, NormalizedPotentials):
            source.check_window(N, M)
            row = self._normalized_row
        elif isinstance(source, GeneralizedPotentials):
            row = self._generalized_row
        else:
            raise TypeError(f"unsupported potential source {type(source).__name__}")
        threads = threads or default_threads()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(row, range(N + 1)))
        else:
            rows = [row(n) for n in range(N + 1)]
        self.frames = [r[0] for r in rows]
        self.alternates = [r[1] for r in rows]
        self.swaps = sum(r[2] for r in rows)

    def _normalized_row(self, n):
        pot = self.source
        fd = _plus_side(pot, n)
        state = SplitState().extend(fd.inverse())
        g = FactorChain()
        frames, alts = [], []
        for m in range(self.M + 1):
            v_minus, v_plus_inv = state.parts()
            frames.append(g + v_plus_inv.inverse())
            alts.append(fd + v_minus)
            if m < self.M:
                step = FactorChain([xi_minus(pot, m)])
                g = g + step
                state.extend(step)
        return frames, alts, state.swaps

    def _generalized_row(self, n):
        gp = self.source
        fn = gp.frame_n(n)
        state = SplitState().extend(fn.inverse())
        g = FactorChain()
        frames, alts = [], []
        for m in range(self.M + 1):
            v_minus, v_plus_inv = state.parts()
            frames.append(fn + v_minus)
            alts.append(g + v_plus_inv.inverse())
            if m < self.M:
                step = gp.eta_m(m)
                g = g + step
                state.extend(step)
        return frames, alts, state.swaps

    def chain(self, n: int, m: int) -> FactorChain:
        return self.frames[n][m]

    def evaluate(self, n: int, m: int, lam) -> np.ndarray:
        return self.frames[n][m].evaluate(lam)

    def cross_check(self, lams: Sequence) -> np.ndarray:
        """Per-vertex max deviation between the two assemblies over ``lams``."""
        out = np.zeros((self.N + 1, self.M + 1))
        for n in range(self.N + 1):
            for m in range(self.M + 1):
                out[n, m] = max(
                    float(np.max(np.abs(self.frames[n][m].evaluate(l) - self.alternates[n][m].evaluate(l))))
                    for l in lams
                )
        return out
