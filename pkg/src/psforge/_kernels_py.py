"""Pure-Python kernels over packed factor chains.

A packed chain is three parallel arrays: ``kinds`` (PLUS/MINUS/PHASE codes),
``angles`` (theta, kappa or delta) and ``coefs`` (a, b, or 0 for phases).
The compiled ``_kernels`` module exposes exactly the same functions.
"""
import cmath
import math

import numpy as np

PLUS, MINUS, PHASE = 0, 1, 2


def _cis(t):
    return complex(math.cos(t), math.sin(t))


def _normalizer(kind, c, lam):
    if kind == PLUS:
        s2 = 1.0 + (c.real * c.real + c.imag * c.imag) * lam * lam
    else:
        s2 = 1.0 + (c.real * c.real + c.imag * c.imag) / (lam * lam)
    s2 = complex(s2)
    if s2.imag == 0.0 and s2.real <= 0.0:
        raise ValueError(f"normalizer argument {s2} on the square-root branch cut")
    return s2, cmath.sqrt(s2)


def factor_entries(kind, ang, c, lam):
    """Matrix entries (m11, m12, m21, m22) of one factor at ``lam``."""
    if kind == PHASE:
        e = _cis(ang)
        return e, 0j, 0j, e.conjugate()
    e = _cis(ang)
    _, s = _normalizer(kind, c, lam)
    off = c * lam if kind == PLUS else c / lam
    return e / s, off / s, -(c.conjugate() * (lam if kind == PLUS else 1.0 / lam)) / s, e.conjugate() / s


def factor_entries_deriv(kind, ang, c, lam):
    """Entries of a factor and of its lambda-derivative."""
    E = factor_entries(kind, ang, c, lam)
    if kind == PHASE:
        return E, (0j, 0j, 0j, 0j)
    m2 = c.real * c.real + c.imag * c.imag
    s2, s = _normalizer(kind, c, lam)
    if kind == PLUS:
        dn12, dn21 = c, -c.conjugate()
        logd = m2 * lam / s2
    else:
        dn12, dn21 = -c / (lam * lam), c.conjugate() / (lam * lam)
        logd = -m2 / (lam * lam * lam) / s2
    dE = (
        -logd * E[0],
        dn12 / s - logd * E[1],
        dn21 / s - logd * E[2],
        -logd * E[3],
    )
    return E, dE


def _mul(A, B):
    return (
        A[0] * B[0] + A[1] * B[2],
        A[0] * B[1] + A[1] * B[3],
        A[2] * B[0] + A[3] * B[2],
        A[2] * B[1] + A[3] * B[3],
    )


def _as_matrix(t):
    return np.array([[t[0], t[1]], [t[2], t[3]]], dtype=complex)


def eval_chain(kinds, angles, coefs, lam):
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    P = (1 + 0j, 0j, 0j, 1 + 0j)
    for k, t, c in zip(kinds.tolist(), angles.tolist(), coefs.tolist()):
        P = _mul(P, factor_entries(k, t, c, lam))
    return _as_matrix(P)


def eval_chain_deriv(kinds, angles, coefs, lam):
    """Value and lambda-derivative of the ordered product, in one forward sweep."""
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    P = (1 + 0j, 0j, 0j, 1 + 0j)
    dP = (0j, 0j, 0j, 0j)
    for k, t, c in zip(kinds.tolist(), angles.tolist(), coefs.tolist()):
        if k == PHASE:
            E = factor_entries(k, t, c, lam)
            P, dP = _mul(P, E), _mul(dP, E)
            continue
        E, dE = factor_entries_deriv(k, t, c, lam)
        dP = tuple(x + y for x, y in zip(_mul(dP, E), _mul(P, dE)))
        P = _mul(P, E)
    return _as_matrix(P), _as_matrix(dP)


def swap(theta, a, kappa, b, zero_kappa=True):
    """e+(theta, a) e-(kappa, b) = e-(kappa~, b~) e+(theta~, a~).

    Returns (kappa~, b~, theta~, a~). The new phases satisfy
    theta~ + kappa~ = theta + kappa + 2 arg(1 - a conj(b) e^{-i(theta+kappa)}),
    with kappa~ = 0 (zero_kappa) or theta~ = 0.
    """
    phi = theta + kappa
    w = 1.0 - a * b.conjugate() * _cis(-phi)
    total = phi + 2.0 * math.atan2(w.imag, w.real)
    if zero_kappa:
        kt, tt = 0.0, total
    else:
        kt, tt = total, 0.0
    return kt, b * _cis(theta + tt), tt, a * _cis(-(kappa + kt))


def push_minus(plus_theta, plus_a, nplus, kappa, b):
    """Move e-(kappa, b) leftward through the first ``nplus`` plus factors.

    The plus arrays are updated in place. Returns ``(b_out, phase)``: the
    coefficient of the resulting kappa = 0 minus factor and a residual phase
    that is nonzero only when there was no plus factor to swap through.
    """
    if nplus == 0:
        return b * _cis(kappa), kappa
    th = plus_theta[:nplus].tolist()
    aa = plus_a[:nplus].tolist()
    for i in range(nplus - 1, -1, -1):
        kappa, b, th[i], aa[i] = swap(th[i], aa[i], kappa, b, True)
    plus_theta[:nplus] = th
    plus_a[:nplus] = aa
    return b, 0.0


def split_batch(kinds, angles, coefs):
    """Birkhoff split of a packed chain by adjacent-pair transposition passes.

    Returns ``(minus_b, plus_theta, plus_a, phase, nswaps)``: the chain equals
    prod e-(0, minus_b) * prod e+(plus_theta, plus_a) * diag(e^{i phase}, e^{-i phase}).
    The phase is nonzero only when there are no plus factors.
    """
    items = []
    carry = 0.0
    for k, t, c in zip(kinds.tolist(), angles.tolist(), coefs.tolist()):
        if k == PHASE:
            carry += t
            continue
        if carry:
            t, c = t + carry, c * _cis(carry)
            carry = 0.0
        items.append([k, t, c])
    trailing = carry

    nswaps = 0
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(items) - 1:
            if items[i][0] == PLUS and items[i + 1][0] == MINUS:
                kt, bt, tt, at = swap(items[i][1], items[i][2], items[i + 1][1], items[i + 1][2], True)
                items[i] = [MINUS, kt, bt]
                items[i + 1] = [PLUS, tt, at]
                nswaps += 1
                changed = True
                i += 2
            else:
                i += 1

    carry = 0.0
    minus_b = []
    j = 0
    while j < len(items) and items[j][0] == MINUS:
        k = items[j][1] + carry
        c = items[j][2] * _cis(carry)
        minus_b.append(c * _cis(k))
        carry = k
        j += 1
    plus = items[j:]
    if plus:
        if carry:
            plus[0][1] += carry
            plus[0][2] *= _cis(carry)
        if trailing:
            plus[-1][1] += trailing
            plus[-1][2] *= _cis(-trailing)
            trailing = 0.0
    else:
        trailing += carry
    return (
        np.array(minus_b, dtype=complex),
        np.array([p[1] for p in plus], dtype=float),
        np.array([p[2] for p in plus], dtype=complex),
        trailing,
        nswaps,
    )
