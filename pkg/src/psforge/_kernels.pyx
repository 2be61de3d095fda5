# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels over packed factor chains; mirrors ``_kernels_py``."""
import numpy as np

from libc.math cimport atan2, cos, sin

cdef extern from "<complex.h>" nogil:
    double complex csqrt(double complex)

PLUS, MINUS, PHASE = 0, 1, 2
DEF _PLUS = 0
DEF _MINUS = 1
DEF _PHASE = 2


cdef inline double complex _cis(double t) noexcept nogil:
    return cos(t) + sin(t) * 1j


cdef inline double complex _conj(double complex z) noexcept nogil:
    return z.real - z.imag * 1j


cdef struct M2:
    double complex a, b, c, d


cdef inline M2 _mul(M2 x, M2 y) noexcept nogil:
    cdef M2 r
    r.a = x.a * y.a + x.b * y.c
    r.b = x.a * y.b + x.b * y.d
    r.c = x.c * y.a + x.d * y.c
    r.d = x.c * y.b + x.d * y.d
    return r


cdef inline M2 _add(M2 x, M2 y) noexcept nogil:
    cdef M2 r
    r.a = x.a + y.a
    r.b = x.b + y.b
    r.c = x.c + y.c
    r.d = x.d + y.d
    return r


cdef inline int _factor(signed char kind, double ang, double complex c, double complex lam,
                        bint want_deriv, M2* E, M2* dE) noexcept nogil:
    """Fill E (and dE); returns 1 when the normalizer hits the branch cut."""
    cdef double complex e = _cis(ang)
    cdef double m2, lr
    cdef double complex s2, s, logd, lam2
    if kind == _PHASE:
        E.a = e
        E.b = 0
        E.c = 0
        E.d = _conj(e)
        if want_deriv:
            dE.a = 0
            dE.b = 0
            dE.c = 0
            dE.d = 0
        return 0
    m2 = c.real * c.real + c.imag * c.imag
    lam2 = lam * lam
    if kind == _PLUS:
        s2 = 1.0 + m2 * lam2
    else:
        s2 = 1.0 + m2 / lam2
    if s2.imag == 0.0 and s2.real <= 0.0:
        return 1
    s = csqrt(s2)
    E.a = e / s
    E.d = _conj(e) / s
    if kind == _PLUS:
        E.b = c * lam / s
        E.c = -_conj(c) * lam / s
    else:
        E.b = c / lam / s
        E.c = -_conj(c) / lam / s
    if want_deriv:
        if kind == _PLUS:
            logd = m2 * lam / s2
            dE.b = c / s - logd * E.b
            dE.c = -_conj(c) / s - logd * E.c
        else:
            logd = -m2 / (lam2 * lam) / s2
            dE.b = -c / lam2 / s - logd * E.b
            dE.c = _conj(c) / lam2 / s - logd * E.c
        dE.a = -logd * E.a
        dE.d = -logd * E.d
    return 0


cdef object _to_array(M2 m):
    return np.array([[m.a, m.b], [m.c, m.d]], dtype=complex)


def factor_entries(int kind, double ang, double complex c, double complex lam):
    cdef M2 E, dE
    if _factor(<signed char>kind, ang, c, lam, False, &E, &dE):
        raise ValueError("normalizer argument on the square-root branch cut")
    return E.a, E.b, E.c, E.d


def eval_chain(const signed char[::1] kinds, const double[::1] angles,
               const double complex[::1] coefs, lam):
    cdef double complex z = complex(lam)
    if z == 0:
        raise ValueError("lambda must be nonzero")
    cdef Py_ssize_t i, n = kinds.shape[0]
    cdef M2 P, E, dE
    cdef int bad = 0
    P.a = 1
    P.b = 0
    P.c = 0
    P.d = 1
    with nogil:
        for i in range(n):
            if _factor(kinds[i], angles[i], coefs[i], z, False, &E, &dE):
                bad = 1
                break
            P = _mul(P, E)
    if bad:
        raise ValueError("normalizer argument on the square-root branch cut")
    return _to_array(P)


def eval_chain_deriv(const signed char[::1] kinds, const double[::1] angles,
                     const double complex[::1] coefs, lam):
    cdef double complex z = complex(lam)
    if z == 0:
        raise ValueError("lambda must be nonzero")
    cdef Py_ssize_t i, n = kinds.shape[0]
    cdef M2 P, dP, E, dE
    cdef int bad = 0
    P.a = 1
    P.b = 0
    P.c = 0
    P.d = 1
    dP.a = 0
    dP.b = 0
    dP.c = 0
    dP.d = 0
    with nogil:
        for i in range(n):
            if _factor(kinds[i], angles[i], coefs[i], z, True, &E, &dE):
                bad = 1
                break
            dP = _add(_mul(dP, E), _mul(P, dE))
            P = _mul(P, E)
    if bad:
        raise ValueError("normalizer argument on the square-root branch cut")
    return _to_array(P), _to_array(dP)


cdef inline void _swap(double th, double complex a, double ka, double complex b, bint zero_kappa,
                       double* kt, double complex* bt, double* tt, double complex* at) noexcept nogil:
    cdef double phi = th + ka
    cdef double complex w = 1.0 - a * _conj(b) * _cis(-phi)
    cdef double total = phi + 2.0 * atan2(w.imag, w.real)
    if zero_kappa:
        kt[0] = 0.0
        tt[0] = total
    else:
        kt[0] = total
        tt[0] = 0.0
    bt[0] = b * _cis(th + tt[0])
    at[0] = a * _cis(-(ka + kt[0]))


def swap(double theta, double complex a, double kappa, double complex b, bint zero_kappa=True):
    cdef double kt, tt
    cdef double complex bt, at
    _swap(theta, a, kappa, b, zero_kappa, &kt, &bt, &tt, &at)
    return kt, bt, tt, at


def push_minus(double[::1] plus_theta, double complex[::1] plus_a, Py_ssize_t nplus,
               double kappa, double complex b):
    cdef Py_ssize_t i
    cdef double kt, tt
    cdef double complex bt, at
    if nplus == 0:
        return b * _cis(kappa), kappa
    with nogil:
        for i in range(nplus - 1, -1, -1):
            _swap(plus_theta[i], plus_a[i], kappa, b, True, &kt, &bt, &tt, &at)
            plus_theta[i] = tt
            plus_a[i] = at
            kappa = kt
            b = bt
    return b, 0.0


def split_batch(const signed char[::1] kinds, const double[::1] angles,
                const double complex[::1] coefs):
    cdef Py_ssize_t n = kinds.shape[0]
    cdef Py_ssize_t i, j, L = 0, nswaps = 0
    cdef double carry = 0.0, trailing, kv
    cdef double kt, tt
    cdef double complex bt, at, cv
    cdef bint changed = True
    k_arr = np.empty(n, dtype=np.int8)
    t_arr = np.empty(n, dtype=np.float64)
    c_arr = np.empty(n, dtype=np.complex128)
    cdef signed char[::1] kk = k_arr
    cdef double[::1] tv = t_arr
    cdef double complex[::1] cc = c_arr

    with nogil:
        for i in range(n):
            if kinds[i] == _PHASE:
                carry += angles[i]
                continue
            kk[L] = kinds[i]
            tv[L] = angles[i] + carry
            cc[L] = coefs[i] * _cis(carry)
            carry = 0.0
            L += 1
        trailing = carry

        while changed:
            changed = False
            i = 0
            while i < L - 1:
                if kk[i] == _PLUS and kk[i + 1] == _MINUS:
                    _swap(tv[i], cc[i], tv[i + 1], cc[i + 1], True, &kt, &bt, &tt, &at)
                    kk[i] = _MINUS
                    tv[i] = kt
                    cc[i] = bt
                    kk[i + 1] = _PLUS
                    tv[i + 1] = tt
                    cc[i + 1] = at
                    nswaps += 1
                    changed = True
                    i += 2
                else:
                    i += 1

        carry = 0.0
        j = 0
        while j < L and kk[j] == _MINUS:
            kv = tv[j] + carry
            cv = cc[j] * _cis(carry)
            cc[j] = cv * _cis(kv)
            carry = kv
            j += 1
        if j < L:
            if carry != 0.0:
                tv[j] += carry
                cc[j] = cc[j] * _cis(carry)
            if trailing != 0.0:
                tv[L - 1] += trailing
                cc[L - 1] = cc[L - 1] * _cis(-trailing)
                trailing = 0.0
        else:
            trailing += carry

    return (
        c_arr[:j].copy(),
        t_arr[j:L].copy(),
        c_arr[j:L].copy(),
        trailing,
        nswaps,
    )
