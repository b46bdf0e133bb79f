"""Exact gamma / polygamma data over the constant field.

Provides Taylor and Laurent expansions of Gamma(a + eps) with exact
coefficients: zeta values at even arguments are rationalized through
Bernoulli numbers (zeta(2k) = rational * pi^(2k)), odd ones stay as
formal generators.  Polygamma values at integer and half-integer points
are produced from the base values

    psi(1)      = -euler
    psi^(t)(1)  = (-1)^(t+1) t! zeta(t+1)
    psi(1/2)    = -euler - 2 log2
    psi^(t)(1/2)= (-1)^(t+1) t! (2^(t+1) - 1) zeta(t+1)

shifted with psi^(t)(x+1) = psi^(t)(x) + (-1)^t t! x^(-t-1), which is
valid down through negative half-integers (no poles are crossed).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .exactfield import EULER, LOG2, QQ, ConstExpr, ONE


@lru_cache(maxsize=None)
def bernoulli(n: int):
    """Exact Bernoulli number B_n (B_1 = -1/2 convention)."""
    if n == 0:
        return QQ(1)
    # sum_{j=0}^{n} C(n+1, j) B_j = 0
    s = QQ(0)
    c = 1  # C(n+1, j)
    for j in range(n):
        s += c * bernoulli(j)
        c = c * (n + 1 - j) // (j + 1)
    return -s / (n + 1)


@lru_cache(maxsize=None)
def zeta_const(r: int) -> ConstExpr:
    """zeta(r) for integer r >= 2 as an exact field element."""
    if r < 2:
        raise ValueError("zeta_const needs r >= 2")
    if r % 2 == 1:
        return ConstExpr.zeta(r)
    k = r // 2
    fact = 1
    for i in range(2, r + 1):
        fact *= i
    rat = QQ((-1) ** (k + 1)) * bernoulli(r) * QQ(2) ** (r - 1) / fact
    return ConstExpr.pi_pow(r) * ConstExpr.from_rational(rat)


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    f = 1
    for i in range(2, n + 1):
        f *= i
    return f


@lru_cache(maxsize=None)
def psi_value(t: int, a: Fraction) -> ConstExpr:
    """psi^(t)(a) for a a positive integer or any half-odd integer."""
    a = Fraction(a)
    if a.denominator == 1:
        if a <= 0:
            raise ValueError("psi has poles at nonpositive integers")
        base = Fraction(1)
    elif a.denominator == 2:
        base = Fraction(1, 2)
    else:
        raise ValueError("argument must be integer or half-integer")
    if a == Fraction(1):
        if t == 0:
            return ConstExpr.gen(EULER, 1) * (-1)  # -euler
        return ConstExpr.from_rational((-1) ** (t + 1) * _factorial(t)) * zeta_const(t + 1)
    if a == Fraction(1, 2):
        if t == 0:
            return -ConstExpr.gen(EULER, 1) - ConstExpr.from_rational(2) * ConstExpr.gen(LOG2, 1)
        rat = (-1) ** (t + 1) * _factorial(t) * (2 ** (t + 1) - 1)
        return ConstExpr.from_rational(rat) * zeta_const(t + 1)
    if a > base:
        # psi^(t)(x+1) = psi^(t)(x) + (-1)^t t! x^(-t-1)
        x = a - 1
        step = ConstExpr.from_rational(QQ((-1) ** t * _factorial(t)) / QQ(x.numerator, x.denominator) ** (t + 1))
        return psi_value(t, x) + step
    # going down: psi^(t)(x) = psi^(t)(x+1) - (-1)^t t! x^(-t-1)
    step = ConstExpr.from_rational(QQ((-1) ** t * _factorial(t)) / QQ(a.numerator, a.denominator) ** (t + 1))
    return psi_value(t, a + 1) - step


@lru_cache(maxsize=None)
def gamma_value(a: Fraction) -> ConstExpr:
    """Gamma(a) for a a positive integer or any half-odd integer."""
    a = Fraction(a)
    if a.denominator == 1:
        if a <= 0:
            raise ValueError("Gamma pole at nonpositive integer")
        return ConstExpr.from_rational(_factorial(int(a) - 1))
    if a.denominator != 2:
        raise ValueError("argument must be integer or half-integer")
    if a == Fraction(1, 2):
        return ConstExpr.pi_pow(Fraction(1, 2))
    if a > Fraction(1, 2):
        x = a - 1
        return gamma_value(x) * ConstExpr.from_rational(QQ(x.numerator, x.denominator))
    return gamma_value(a + 1) * ConstExpr.from_rational(QQ(a.denominator, a.numerator))


def _exp_series(h: list) -> list:
    """exp of a polynomial in eps with h[0] == 0, as a coefficient list."""
    n = len(h)
    out = [ONE] + [ConstExpr({}) for _ in range(n - 1)]
    # E' = h' E  =>  r*E_r = sum_{j=1..r} j*h_j*E_{r-j}
    for r in range(1, n):
        acc = ConstExpr({})
        for j in range(1, r + 1):
            if j < n and h[j]:
                acc = acc + ConstExpr.from_rational(j) * h[j] * out[r - j]
        out[r] = acc * ConstExpr.from_rational(Fraction(1, r))
    return out


@lru_cache(maxsize=None)
def gamma_series(a: Fraction, order: int) -> tuple:
    """Taylor coefficients (g_0 .. g_order) of Gamma(a + eps), for a not a
    nonpositive integer.  Uses Gamma(a+eps) = Gamma(a) exp(sum psi^(r-1)(a) eps^r / r!)."""
    a = Fraction(a)
    h = [ConstExpr({})]
    for r in range(1, order + 1):
        h.append(psi_value(r - 1, a) * ConstExpr.from_rational(Fraction(1, _factorial(r))))
    e = _exp_series(h)
    g0 = gamma_value(a)
    return tuple(g0 * c for c in e)


@lru_cache(maxsize=None)
def gamma_laurent(q: int, order: int) -> tuple:
    """Laurent data for Gamma(1 - q + eps) at a nonpositive integer, q >= 1.

    Returns (c_minus1, (c_0, ..., c_order)) with
    Gamma(1-q+eps) = c_minus1/eps + c_0 + c_1 eps + ...
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    sign = QQ((-1) ** (q - 1))
    cm1 = ConstExpr.from_rational(sign / _factorial(q - 1))
    # Gamma(1-q+eps) = Gamma(1+eps) * (-1)^(q-1) / (eps (q-1)!) * prod_{j<q} (1 - eps/j)^(-1)
    # log Gamma(1+eps) = -euler eps + sum_{r>=2} (-1)^r zeta(r) eps^r / r
    # -log prod (1 - eps/j) = sum_{r>=1} H^(r)_{q-1} eps^r / r
    h = [ConstExpr({})]
    for r in range(1, order + 2):
        c = ConstExpr({})
        if r == 1:
            c = c - ConstExpr.gen(EULER, 1)  # -euler
        else:
            c = c + zeta_const(r) * ConstExpr.from_rational(Fraction((-1) ** r, r))
        hr = QQ(0)
        for j in range(1, q):
            hr += QQ(1) / QQ(j) ** r
        c = c + ConstExpr.from_rational(hr / r)
        h.append(c)
    e = _exp_series(h)
    cs = tuple(cm1 * e[r + 1] for r in range(order + 1))
    return cm1, cs


@lru_cache(maxsize=None)
def loggamma1p_coeff(r: int) -> ConstExpr:
    """Coefficient of x^r in log Gamma(1 + x)."""
    if r == 0:
        return ConstExpr({})
    if r == 1:
        return -ConstExpr.gen(EULER, 1)
    return zeta_const(r) * ConstExpr.from_rational(Fraction((-1) ** r, r))
