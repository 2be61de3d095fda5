"""Loop-group elements as exact chains of elementary factors.

Three factor types generate everything the surface construction needs::

    e+(theta, a) = [[e^{i theta}, a lam], [-conj(a) lam, e^{-i theta}]] / sqrt(1 + |a|^2 lam^2)
    e-(kappa, b) = [[e^{i kappa}, b / lam], [-conj(b) / lam, e^{-i kappa}]] / sqrt(1 + |b|^2 / lam^2)
    phase(delta) = diag(e^{i delta}, e^{-i delta})

with |a|, |b| < 1. A chain is their ordered product. Plus factors extend
holomorphically to the unit disk, minus factors to its exterior, so a chain
written as (minus factors with kappa = 0) * (plus factors) is a Birkhoff
decomposition whose minus part is the identity at lam = infinity.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal, Union

import numpy as np

from ._backend import kernels
from .algebra import SIGMA3, max_abs, sl2_inverse

PLUS, MINUS, PHASE = 0, 1, 2

Normalization = Literal["zero_kappa", "zero_theta"]
Side = Literal["left", "right"]


def _check_modulus(name, z):
    if not abs(z) < 1.0:
        raise ValueError(f"|{name}| = {abs(z)!r} violates the modulus bound |{name}| < 1")


def _check_finite(name, x):
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")


@dataclass(frozen=True)
class PlusFactor:
    theta: float
    a: complex

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "a", complex(self.a))
        _check_finite("theta", self.theta)
        _check_modulus("a", self.a)


@dataclass(frozen=True)
class MinusFactor:
    kappa: float
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "b", complex(self.b))
        _check_finite("kappa", self.kappa)
        _check_modulus("b", self.b)


@dataclass(frozen=True)
class PhaseFactor:
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        _check_finite("delta", self.delta)


Factor = Union[PlusFactor, MinusFactor, PhaseFactor]


def _pack(f: Factor):
    if isinstance(f, PlusFactor):
        return PLUS, f.theta, f.a
    if isinstance(f, MinusFactor):
        return MINUS, f.kappa, f.b
    if isinstance(f, PhaseFactor):
        return PHASE, f.delta, 0j
    raise TypeError(f"not a loop factor: {f!r}")


def _unpack(kind, ang, coef) -> Factor:
    if kind == PLUS:
        return PlusFactor(ang, coef)
    if kind == MINUS:
        return MinusFactor(ang, coef)
    return PhaseFactor(ang)


class FactorChain:
    """Immutable ordered product of factors, stored as packed arrays."""

    __slots__ = ("kinds", "angles", "coefs", "_factors")

    def __init__(self, factors: Iterable[Factor] = ()):
        packed = [_pack(f) for f in factors]
        self.kinds = np.array([p[0] for p in packed], dtype=np.int8)
        self.angles = np.array([p[1] for p in packed], dtype=np.float64)
        self.coefs = np.array([p[2] for p in packed], dtype=np.complex128)
        self._factors = None
        self._freeze()

    def _freeze(self):
        for arr in (self.kinds, self.angles, self.coefs):
            arr.flags.writeable = False

    @classmethod
    def from_arrays(cls, kinds, angles, coefs) -> "FactorChain":
        self = cls.__new__(cls)
        self.kinds = np.ascontiguousarray(kinds, dtype=np.int8)
        self.angles = np.ascontiguousarray(angles, dtype=np.float64)
        self.coefs = np.ascontiguousarray(coefs, dtype=np.complex128)
        self._factors = None
        self._freeze()
        return self

    @property
    def factors(self) -> tuple:
        if self._factors is None:
            self._factors = tuple(
                _unpack(k, t, c)
                for k, t, c in zip(self.kinds.tolist(), self.angles.tolist(), self.coefs.tolist())
            )
        return self._factors

    def __len__(self):
        return len(self.kinds)

    def __iter__(self) -> Iterator[Factor]:
        return iter(self.factors)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return FactorChain.from_arrays(self.kinds[i], self.angles[i], self.coefs[i])
        return self.factors[i]

    def __add__(self, other: "FactorChain") -> "FactorChain":
        if not isinstance(other, FactorChain):
            return NotImplemented
        return FactorChain.from_arrays(
            np.concatenate([self.kinds, other.kinds]),
            np.concatenate([self.angles, other.angles]),
            np.concatenate([self.coefs, other.coefs]),
        )

    def __mul__(self, k: int) -> "FactorChain":
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return FactorChain.from_arrays(
            np.tile(self.kinds, k), np.tile(self.angles, k), np.tile(self.coefs, k)
        )

    def __eq__(self, other):
        if not isinstance(other, FactorChain):
            return NotImplemented
        return (
            np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.angles, other.angles)
            and np.array_equal(self.coefs, other.coefs)
        )

    __hash__ = None

    def __repr__(self):
        return f"FactorChain({list(self.factors)!r})"

    def count(self, kind: int) -> int:
        return int(np.count_nonzero(self.kinds == kind))

    def inverse(self) -> "FactorChain":
        return FactorChain.from_arrays(self.kinds[::-1], -self.angles[::-1], -self.coefs[::-1])

    def evaluate(self, lam) -> np.ndarray:
        return kernels.eval_chain(self.kinds, self.angles, self.coefs, lam)

    def evaluate_with_derivative(self, lam):
        return kernels.eval_chain_deriv(self.kinds, self.angles, self.coefs, lam)

    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.coefs))) if len(self) else 0.0


def as_chain(x) -> FactorChain:
    if isinstance(x, FactorChain):
        return x
    if isinstance(x, (PlusFactor, MinusFactor, PhaseFactor)):
        return FactorChain([x])
    return FactorChain(x)


def eval_factor(f: Factor, lam) -> np.ndarray:
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    k, t, c = _pack(f)
    e = kernels.factor_entries(k, t, c, lam)
    return np.array([[e[0], e[1]], [e[2], e[3]]], dtype=complex)


def eval_chain(c, lam) -> np.ndarray:
    return as_chain(c).evaluate(lam)


def lambda_derivative_chain(c, lam) -> np.ndarray:
    """d/dlam of the chain's evaluation (exact product rule, linear in length)."""
    return as_chain(c).evaluate_with_derivative(lam)[1]


def swap_plus_minus(p: PlusFactor, m: MinusFactor, normalization: Normalization = "zero_kappa"):
    """Rewrite e+ e- as e-~ e+~; returns (MinusFactor, PlusFactor).

    The moduli are preserved: |a~| = |a| and |b~| = |b|.
    """
    if normalization not in ("zero_kappa", "zero_theta"):
        raise ValueError(f"unknown normalization {normalization!r}")
    assert abs(p.a) < 1 and abs(m.b) < 1
    kt, bt, tt, at = kernels.swap(p.theta, p.a, m.kappa, m.b, normalization == "zero_kappa")
    return MinusFactor(kt, bt), PlusFactor(tt, at)


def invert_factor(f: Factor) -> Factor:
    if isinstance(f, PlusFactor):
        return PlusFactor(-f.theta, -f.a)
    if isinstance(f, MinusFactor):
        return MinusFactor(-f.kappa, -f.b)
    if isinstance(f, PhaseFactor):
        return PhaseFactor(-f.delta)
    raise TypeError(f"not a loop factor: {f!r}")


def absorb_phase(ph: PhaseFactor, f: Union[PlusFactor, MinusFactor], side: Side) -> Factor:
    """Fold diag(e^{i delta}, e^{-i delta}) into a plus or minus factor.

    left:  phase * e(t, c) = e(t + delta, c e^{i delta})
    right: e(t, c) * phase = e(t + delta, c e^{-i delta})
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    d = ph.delta
    rot = cmath.exp(1j * d if side == "left" else -1j * d)
    if isinstance(f, PlusFactor):
        return PlusFactor(f.theta + d, f.a * rot)
    if isinstance(f, MinusFactor):
        return MinusFactor(f.kappa + d, f.b * rot)
    raise TypeError(f"cannot absorb a phase into {f!r}")


def _parts_from_arrays(minus_b, plus_theta, plus_a, phase):
    nm, npl = len(minus_b), len(plus_theta)
    v_minus = FactorChain.from_arrays(
        np.full(nm, MINUS, dtype=np.int8), np.zeros(nm), minus_b
    )
    kinds = np.full(npl, PLUS, dtype=np.int8)
    angles, coefs = plus_theta, plus_a
    if phase != 0.0:
        kinds = np.append(kinds, np.int8(PHASE))
        angles = np.append(angles, phase)
        coefs = np.append(coefs, 0j)
    return v_minus, FactorChain.from_arrays(kinds, angles, coefs)


def birkhoff_split(c) -> tuple[FactorChain, FactorChain]:
    """Split a chain as (v_minus, v_plus) with chain = v_minus * v_plus.

    v_minus holds only kappa = 0 minus factors, so it is the identity at
    lam = infinity; v_plus holds plus factors and, only when it has no plus
    factor to absorb it, one trailing phase.
    """
    c = as_chain(c)
    if not c.max_modulus() < 1.0:
        raise ValueError("chain contains a factor with modulus >= 1")
    minus_b, plus_theta, plus_a, phase, _ = kernels.split_batch(c.kinds, c.angles, c.coefs)
    return _parts_from_arrays(minus_b, plus_theta, plus_a, phase)


class SplitState:
    """Birkhoff split maintained under appending factors on the right.

    Appending a minus factor costs one swap per plus factor currently held,
    instead of redoing the whole split. Not safe to share between threads.
    """

    def __init__(self):
        self._minus = np.empty(8, dtype=np.complex128)
        self._theta = np.empty(8, dtype=np.float64)
        self._a = np.empty(8, dtype=np.complex128)
        self.n_minus = 0
        self.n_plus = 0
        self.phase = 0.0
        self.swaps = 0

    def copy(self) -> "SplitState":
        other = SplitState.__new__(SplitState)
        other._minus = self._minus.copy()
        other._theta = self._theta.copy()
        other._a = self._a.copy()
        other.n_minus, other.n_plus = self.n_minus, self.n_plus
        other.phase, other.swaps = self.phase, self.swaps
        return other

    @staticmethod
    def _grow(arr, n):
        if n < len(arr):
            return arr
        out = np.empty(2 * len(arr), dtype=arr.dtype)
        out[: len(arr)] = arr
        return out

    def append_packed(self, kind, ang, coef):
        if kind == PHASE:
            self.phase += ang
            return self
        if not abs(coef) < 1.0:
            raise ValueError(f"factor modulus {abs(coef)!r} >= 1")
        if self.phase:
            ang += self.phase
            coef *= cmath.exp(1j * self.phase)
            self.phase = 0.0
        if kind == PLUS:
            self._theta = self._grow(self._theta, self.n_plus)
            self._a = self._grow(self._a, self.n_plus)
            self._theta[self.n_plus] = ang
            self._a[self.n_plus] = coef
            self.n_plus += 1
            return self
        b, self.phase = kernels.push_minus(self._theta, self._a, self.n_plus, ang, coef)
        self.swaps += self.n_plus
        self._minus = self._grow(self._minus, self.n_minus)
        self._minus[self.n_minus] = b
        self.n_minus += 1
        return self

    def append(self, f: Factor) -> "SplitState":
        return self.append_packed(*_pack(f))

    def extend(self, chain) -> "SplitState":
        chain = as_chain(chain)
        for k, t, c in zip(chain.kinds.tolist(), chain.angles.tolist(), chain.coefs.tolist()):
            self.append_packed(k, t, c)
        return self

    def minus_part(self) -> FactorChain:
        n = self.n_minus
        return FactorChain.from_arrays(
            np.full(n, MINUS, dtype=np.int8), np.zeros(n), self._minus[:n].copy()
        )

    def parts(self) -> tuple[FactorChain, FactorChain]:
        theta = self._theta[: self.n_plus].copy()
        a = self._a[: self.n_plus].copy()
        phase = self.phase
        if phase and self.n_plus:
            theta[-1] += phase
            a[-1] *= cmath.exp(-1j * phase)
            phase = 0.0
        return _parts_from_arrays(self._minus[: self.n_minus].copy(), theta, a, phase)


def init_split() -> SplitState:
    return SplitState()


def append_and_split(state: SplitState, f: Factor) -> SplitState:
    return state.append(f)


def current_parts(state: SplitState) -> tuple[FactorChain, FactorChain]:
    return state.parts()


def reality_residual(c, lam, relative: bool = True) -> float:
    """Deviation from g(lam) = conj(g(conj lam))^{-T}, plus |det g - 1|.

    At real lam this is unitarity. Off the real axis g is not unitary and its
    entries grow with chain length, so by default the residual is divided by
    max(1, ||g(lam)|| ||g(conj lam)||), which is 1 whenever g is unitary.
    """
    c = as_chain(c)
    lam = complex(lam)
    g = c.evaluate(lam)
    h = c.evaluate(lam.conjugate())
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    res = max(max_abs(g - sl2_inverse(h.conj()).T), abs(det - 1.0))
    if relative:
        res /= max(1.0, max_abs(g) * max_abs(h))
    return res


def twist_residual(c, lam) -> float:
    """Deviation from sigma3 g(lam) sigma3 = g(-lam)."""
    c = as_chain(c)
    return max_abs(SIGMA3 @ c.evaluate(lam) @ SIGMA3 - c.evaluate(-complex(lam)))
