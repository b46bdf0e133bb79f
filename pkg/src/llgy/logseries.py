"""Truncated graded series with rational exponents and log-polynomial
coefficients, and the analytic maps between the expansion regimes.

A GradedSeries is a finite sum, in one formal variable, of terms

    x^(e/2) * sum_j  a_{e,j} * L^j        (a_{e,j} in the constant field)

where L is the logarithm symbol attached to the variable (log B for 1/B
series, log z for z series, and so on).  Exponents live on the
half-integer grid and are stored doubled.  Every series carries a
truncation bound: for an ascending series exponents >= trunc are
unknown, for a descending one (expansions around infinity in z)
exponents <= trunc are unknown.  Binary operations propagate the bound
pessimistically.

The module also provides:

* expand_at_edge: re-expansion of a bulk-regime building block
  pref * B^b * (x^2-B^2)^a * (x/B)^p * l^k,  l = log((x-B)/(x+B)),
  around the endpoint, x = B + z/2, as a double series in z and 1/B
  with log(z/(4B)) as the log symbol; powers of w = z/(4B) carry the
  cross terms.

* laplace_s_to_z / laplace_z_to_s: the term-wise transform
  s^beta log^i s  ->  d^i/dbeta^i [Gamma(beta+1) z^(-beta-1)].
  At nonpositive integer arguments of Gamma the finite part of the
  Laurent expansion in the shift is taken; this raises the log degree
  by one and is the exact convention under which the edge and bulk
  expansions agree cell by cell.

* revert / substitute: functional inversion u(t) of a coupling series
  t(u) with square-root or linear leading behavior, and substitution of
  such an inverse into any series with integer exponents, tracking the
  induced polynomials in the new log symbol.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .exactfield import (MONO_ONE, PI, LOG2, LOGPI, QQ, ConstExpr, ZERO, ONE,
                         mono_mul)
from . import polygamma as pg

INF2 = 1 << 62  # truncation sentinel for exact (polynomial) series


def _fr2(e) -> int:
    """Exponent -> doubled-int representation."""
    f = Fraction(e)
    if f.denominator == 1:
        return 2 * f.numerator
    if f.denominator == 2:
        return f.numerator
    raise ValueError("exponents must be half-integers, got %s" % e)


def _fr(e2: int) -> Fraction:
    return Fraction(e2, 2)


class LogPoly:
    """Polynomial in the log symbol over the constant field."""

    __slots__ = ("c",)

    def __init__(self, c: Optional[dict] = None):
        self.c = {j: v for j, v in (c or {}).items() if v}

    @classmethod
    def const(cls, v) -> "LogPoly":
        v = v if isinstance(v, ConstExpr) else ConstExpr.from_rational(v)
        return cls({0: v})

    def is_zero(self) -> bool:
        return not self.c

    def degree(self) -> int:
        return max(self.c) if self.c else -1

    def __add__(self, o: "LogPoly") -> "LogPoly":
        d = dict(self.c)
        for j, v in o.c.items():
            nv = d.get(j)
            nv = v if nv is None else nv + v
            if nv:
                d[j] = nv
            else:
                d.pop(j, None)
        out = LogPoly.__new__(LogPoly)
        out.c = d
        return out

    def __neg__(self) -> "LogPoly":
        out = LogPoly.__new__(LogPoly)
        out.c = {j: -v for j, v in self.c.items()}
        return out

    def __sub__(self, o: "LogPoly") -> "LogPoly":
        return self + (-o)

    def __mul__(self, o: "LogPoly") -> "LogPoly":
        d: dict = {}
        for j1, v1 in self.c.items():
            for j2, v2 in o.c.items():
                j = j1 + j2
                v = v1 * v2
                nv = d.get(j)
                nv = v if nv is None else nv + v
                if nv:
                    d[j] = nv
                else:
                    d.pop(j, None)
        out = LogPoly.__new__(LogPoly)
        out.c = d
        return out

    def scale(self, v: ConstExpr) -> "LogPoly":
        if not v:
            return LogPoly()
        out = LogPoly.__new__(LogPoly)
        out.c = {j: c * v for j, c in self.c.items()}
        return out

    def shift_log(self, const: ConstExpr) -> "LogPoly":
        """Substitute L -> L + const."""
        out: dict = {}
        for j, v in self.c.items():
            # (L + c)^j
            binom = 1
            cp = ONE
            for r in range(j, -1, -1):
                term = v * ConstExpr.from_rational(binom) * cp
                if term:
                    nv = out.get(r)
                    nv = term if nv is None else nv + term
                    if nv:
                        out[r] = nv
                    else:
                        out.pop(r, None)
                cp = cp * const
                binom = binom * r // (j - r + 1) if r else binom
        return LogPoly(out)

    def eval_at(self, log_value: ConstExpr) -> ConstExpr:
        acc = ZERO
        p = ONE
        for j in range(self.degree() + 1):
            v = self.c.get(j)
            if v:
                acc = acc + v * p
            p = p * log_value
        return acc

    def eval_numeric(self, log_value, bits: int):
        acc = 0
        for j, v in self.c.items():
            acc += v.eval_numeric(bits) * log_value ** j
        return acc

    def __eq__(self, o):
        return isinstance(o, LogPoly) and self.c == o.c

    def __repr__(self):
        if not self.c:
            return "LogPoly(0)"
        return "LogPoly(" + "; ".join("L^%d: %s" % (j, v.text())
                                      for j, v in sorted(self.c.items())) + ")"


def _lp_shift_pow(j: int, const: ConstExpr) -> LogPoly:
    """(L + const)^j as a LogPoly."""
    return LogPoly({j: ONE}).shift_log(const)


class GradedSeries:
    """Truncated series; see the module docstring."""

    __slots__ = ("var", "t", "trunc2", "descending")

    def __init__(self, var: str, terms: Optional[dict] = None,
                 trunc=None, descending: bool = False):
        self.var = var
        self.descending = descending
        self.trunc2 = (INF2 if not descending else -INF2) if trunc is None \
            else _fr2(trunc)
        self.t: dict = {}
        if terms:
            for e, lp in terms.items():
                e2 = _fr2(e)
                if not self._known(e2):
                    continue
                if isinstance(lp, ConstExpr):
                    lp = LogPoly({0: lp})
                elif isinstance(lp, dict):
                    lp = LogPoly({j: v if isinstance(v, ConstExpr)
                                  else ConstExpr.from_rational(v)
                                  for j, v in lp.items()})
                if not lp.is_zero():
                    self.t[e2] = lp

    def _known(self, e2: int) -> bool:
        return e2 > self.trunc2 if self.descending else e2 < self.trunc2

    @classmethod
    def _raw(cls, var, t, trunc2, descending=False) -> "GradedSeries":
        s = cls.__new__(cls)
        s.var, s.t, s.trunc2, s.descending = var, t, trunc2, descending
        return s

    @classmethod
    def monomial(cls, var, exp, coeff=1, trunc=None, logpow: int = 0,
                 descending: bool = False) -> "GradedSeries":
        c = coeff if isinstance(coeff, ConstExpr) else ConstExpr.from_rational(coeff)
        return cls(var, {Fraction(exp): LogPoly({logpow: c})}, trunc, descending)

    # ---- inspection ----

    def coeff(self, exp, logpow: int = 0) -> ConstExpr:
        lp = self.t.get(_fr2(exp))
        return lp.c.get(logpow, ZERO) if lp else ZERO

    def logpoly(self, exp) -> LogPoly:
        return self.t.get(_fr2(exp), LogPoly())

    def exponents(self):
        return sorted(_fr(e2) for e2 in self.t)

    def lead2(self) -> int:
        if not self.t:
            return self.trunc2
        return max(self.t) if self.descending else min(self.t)

    def is_zero(self) -> bool:
        return not self.t

    def max_logdeg(self) -> int:
        return max((lp.degree() for lp in self.t.values()), default=-1)

    def assert_compatible(self, o: "GradedSeries"):
        if self.var != o.var or self.descending != o.descending:
            raise ValueError("series variable mismatch: %s/%s" % (self.var, o.var))

    # ---- ring operations ----

    def _combine_trunc(self, o: "GradedSeries") -> int:
        return max(self.trunc2, o.trunc2) if self.descending \
            else min(self.trunc2, o.trunc2)

    def __add__(self, o: "GradedSeries") -> "GradedSeries":
        self.assert_compatible(o)
        tr = self._combine_trunc(o)
        t = {}
        for e2, lp in self.t.items():
            if (e2 > tr) if self.descending else (e2 < tr):
                t[e2] = lp
        for e2, lp in o.t.items():
            if not ((e2 > tr) if self.descending else (e2 < tr)):
                continue
            cur = t.get(e2)
            s = lp if cur is None else cur + lp
            if s.is_zero():
                t.pop(e2, None)
            else:
                t[e2] = s
        return GradedSeries._raw(self.var, t, tr, self.descending)

    def __neg__(self) -> "GradedSeries":
        return GradedSeries._raw(self.var, {e2: -lp for e2, lp in self.t.items()},
                                 self.trunc2, self.descending)

    def __sub__(self, o: "GradedSeries") -> "GradedSeries":
        return self + (-o)

    def __mul__(self, o: "GradedSeries") -> "GradedSeries":
        self.assert_compatible(o)
        desc = self.descending
        if not self.t or not o.t:
            tr = self._mul_trunc(o)
            return GradedSeries._raw(self.var, {}, tr, desc)
        tr = self._mul_trunc(o)
        # flat accumulation: (e2, j, mono) -> rational
        acc: dict = {}
        for e1, lp1 in self.t.items():
            for e2_, lp2 in o.t.items():
                e = e1 + e2_
                if (e <= tr) if desc else (e >= tr):
                    continue
                for j1, v1 in lp1.c.items():
                    for j2, v2 in lp2.c.items():
                        j = j1 + j2
                        for m1, q1 in v1.terms():
                            for m2, q2 in v2.terms():
                                key = (e, j, mono_mul(m1, m2))
                                q = q1 * q2
                                nq = acc.get(key)
                                nq = q if nq is None else nq + q
                                if nq:
                                    acc[key] = nq
                                else:
                                    del acc[key]
        t: dict = {}
        for (e, j, mono), q in acc.items():
            lp = t.get(e)
            if lp is None:
                lp = t[e] = {}
            ce = lp.get(j)
            if ce is None:
                lp[j] = {mono: q}
            else:
                ce[mono] = q
        out = {}
        for e, byj in t.items():
            lp = LogPoly({j: ConstExpr._raw(d) for j, d in byj.items()})
            if not lp.is_zero():
                out[e] = lp
        return GradedSeries._raw(self.var, out, tr, desc)

    def _mul_trunc(self, o: "GradedSeries") -> int:
        a_lead = self.lead2()
        b_lead = o.lead2()
        if self.descending:
            tr = max(self.trunc2 + b_lead, o.trunc2 + a_lead)
            return max(tr, -INF2)
        tr = min(self.trunc2 + b_lead, o.trunc2 + a_lead)
        return min(tr, INF2)

    def scale(self, c) -> "GradedSeries":
        c = c if isinstance(c, ConstExpr) else ConstExpr.from_rational(c)
        if not c:
            return GradedSeries._raw(self.var, {}, self.trunc2, self.descending)
        return GradedSeries._raw(self.var, {e2: lp.scale(c) for e2, lp in self.t.items()},
                                 self.trunc2, self.descending)

    def scale_logpoly(self, lp: LogPoly) -> "GradedSeries":
        t = {}
        for e2, mine in self.t.items():
            p = mine * lp
            if not p.is_zero():
                t[e2] = p
        return GradedSeries._raw(self.var, t, self.trunc2, self.descending)

    def shift_exp(self, de) -> "GradedSeries":
        d2 = _fr2(de)
        tr = self.trunc2 if abs(self.trunc2) >= INF2 else self.trunc2 + d2
        return GradedSeries._raw(self.var, {e2 + d2: lp for e2, lp in self.t.items()},
                                 tr, self.descending)

    def truncate(self, order) -> "GradedSeries":
        tr2 = _fr2(order)
        if self.descending:
            tr2 = max(tr2, self.trunc2)
            t = {e2: lp for e2, lp in self.t.items() if e2 > tr2}
        else:
            tr2 = min(tr2, self.trunc2)
            t = {e2: lp for e2, lp in self.t.items() if e2 < tr2}
        return GradedSeries._raw(self.var, t, tr2, self.descending)

    def pow_int(self, n: int) -> "GradedSeries":
        if n < 0:
            return self.inverse().pow_int(-n)
        r = GradedSeries._raw(self.var, {0: LogPoly({0: ONE})}, INF2 if not self.descending else -INF2,
                              self.descending)
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b if n > 1 else b
            n >>= 1
        return r

    def _split_unit(self):
        """For series 1 + h with h strictly above the leading slot."""
        lp0 = self.t.get(0)
        if lp0 is None or lp0.c.get(0) != ONE or lp0.degree() != 0:
            raise ValueError("series must have unit leading term 1")
        h = {e2: lp for e2, lp in self.t.items() if e2 != 0}
        if any(e2 < 0 for e2 in h) and not self.descending:
            raise ValueError("negative exponents in the tail")
        return GradedSeries._raw(self.var, h, self.trunc2, self.descending)

    def binom_pow(self, alpha) -> "GradedSeries":
        """(1 + h)^alpha for rational alpha; self must equal 1 + h."""
        alpha = Fraction(alpha)
        h = self._split_unit()
        if h.is_zero():
            return GradedSeries._raw(self.var, {0: LogPoly({0: ONE})},
                                     self.trunc2, self.descending)
        out = GradedSeries._raw(self.var, {0: LogPoly({0: ONE})},
                                self.trunc2, self.descending)
        hp = None
        coef = Fraction(1)
        lead = abs(h.lead2())
        rmax = (abs(self.trunc2) // max(lead, 1)) + 1 if abs(self.trunc2) < INF2 \
            else (0 if h.is_zero() else 10 ** 6)
        r = 0
        while True:
            r += 1
            if r > rmax:
                break
            coef = coef * (alpha - (r - 1)) / r
            hp = h if hp is None else hp * h
            if hp.is_zero():
                break
            if coef:
                out = out + hp.scale(ConstExpr.from_rational(coef))
        return out

    def log1p(self) -> "GradedSeries":
        """log(1 + h) for self = 1 + h."""
        h = self._split_unit()
        out = GradedSeries._raw(self.var, {}, self.trunc2, self.descending)
        hp = None
        lead = abs(h.lead2()) if not h.is_zero() else 1
        rmax = (abs(self.trunc2) // max(lead, 1)) + 1 if abs(self.trunc2) < INF2 else 10 ** 6
        for r in range(1, rmax + 1):
            hp = h if hp is None else hp * h
            if hp.is_zero():
                break
            out = out + hp.scale(ConstExpr.from_rational(Fraction((-1) ** (r + 1), r)))
        return out

    def exp_tail(self) -> "GradedSeries":
        """exp(h) for a series h with strictly positive leading exponent."""
        if not self.t:
            return GradedSeries._raw(self.var, {0: LogPoly({0: ONE})},
                                     self.trunc2, self.descending)
        if self.lead2() <= 0 and not self.descending:
            raise ValueError("exp_tail needs a strictly positive leading exponent")
        out = GradedSeries._raw(self.var, {0: LogPoly({0: ONE})},
                                self.trunc2, self.descending)
        hp = GradedSeries._raw(self.var, {0: LogPoly({0: ONE})},
                               self.trunc2, self.descending)
        lead = abs(self.lead2())
        rmax = (abs(self.trunc2) // max(lead, 1)) + 1 if abs(self.trunc2) < INF2 else 10 ** 6
        f = QQ(1)
        for r in range(1, rmax + 1):
            hp = hp * self
            if hp.is_zero():
                break
            f = f / r
            out = out + hp.scale(ConstExpr.from_rational(f))
        return out

    def inverse(self) -> "GradedSeries":
        """1/self when the leading coefficient is a log-free monomial."""
        lead2 = self.lead2()
        lp = self.t.get(lead2)
        if lp is None or lp.degree() != 0:
            raise ValueError("inverse needs a log-free leading coefficient")
        c = lp.c[0]
        cinv = c.inv_monomial()
        unit = self.shift_exp(_fr(-lead2)).scale(cinv)
        inv_unit = unit.binom_pow(-1)
        return inv_unit.shift_exp(_fr(-lead2)).scale(cinv)

    # ---- numerics and output ----

    def eval_numeric(self, x, logx, bits: int):
        with_val = 0
        for e2, lp in self.t.items():
            with_val += lp.eval_numeric(logx, bits) * x ** (Fraction(e2, 2))
        return with_val

    def dump(self) -> str:
        """One line per (exponent, log power): 'exponent | log-power | coeff'."""
        lines = []
        order = sorted(self.t, reverse=self.descending)
        for e2 in order:
            es = str(e2 // 2) if e2 % 2 == 0 else "%d/2" % e2
            for j in sorted(self.t[e2].c):
                lines.append("%s | %d | %s" % (es, j, self.t[e2].c[j].text()))
        return "\n".join(lines)

    def __repr__(self):
        es = self.dump().replace("\n", ", ")
        tr = "inf" if abs(self.trunc2) >= INF2 else str(Fraction(self.trunc2, 2))
        return "GradedSeries(%s%s; trunc=%s; %s)" % (
            self.var, " desc" if self.descending else "", tr, es or "0")


def one(var: str, trunc=None, descending=False) -> GradedSeries:
    return GradedSeries.monomial(var, 0, 1, trunc, descending=descending)


# ---------------------------------------------------------------------------
# edge re-expansion of bulk building blocks
# ---------------------------------------------------------------------------

_onepw_cache: dict = {}   # e2 -> list of [w^i] (1+w)^(e2/2)
_lam_pow_cache: list = [[QQ(1)]]  # lam^e coefficient lists, lam = log(1+w)


def _onepw(e2: int, length: int) -> list:
    cur = _onepw_cache.get(e2)
    if cur is None or len(cur) < length:
        a = Fraction(e2, 2)
        cur = [QQ(1)]
        for i in range(length - 1):
            cur.append(cur[-1] * QQ((a - i).numerator, (a - i).denominator) / (i + 1))
        _onepw_cache[e2] = cur
    return cur


def _lam_pow(e: int, length: int) -> list:
    while len(_lam_pow_cache) <= e or len(_lam_pow_cache[e]) < length:
        if len(_lam_pow_cache[0]) < length:
            lam1 = [QQ(0)] + [QQ((-1) ** (i + 1), i) for i in range(1, length)]
            base = [QQ(1)] + [QQ(0)] * (length - 1)
            _lam_pow_cache.clear()
            _lam_pow_cache.append(base)
            _lam_pow_cache.append(lam1)
        prev = _lam_pow_cache[-1]
        lam1 = _lam_pow_cache[1]
        nxt = [QQ(0)] * length
        for i, a in enumerate(prev):
            if a:
                for j2 in range(1, length - i):
                    if lam1[j2]:
                        nxt[i + j2] += a * lam1[j2]
        _lam_pow_cache.append(nxt)
    return _lam_pow_cache[e]


_mu_cache: dict = {}


def mu_coeff(e2: int, p: int, lam_e: int, d: int):
    """[w^d] of (1+2w)^p (1+w)^(e2/2) log(1+w)^lam_e, exact rational."""
    key = (e2, p, lam_e)
    cur = _mu_cache.get(key)
    if cur is None or len(cur) <= d:
        length = max(d + 1, 48)
        base = _onepw(e2, length)
        lam = _lam_pow(lam_e, length) if lam_e else None
        if lam is not None:
            conv = [QQ(0)] * length
            for i in range(lam_e, length):
                if lam[i]:
                    for j2 in range(length - i):
                        if base[j2]:
                            conv[i + j2] += lam[i] * base[j2]
        else:
            conv = list(base)
        if p:
            for _ in range(p):
                nxt = list(conv)
                for i in range(length - 1):
                    if conv[i]:
                        nxt[i + 1] += 2 * conv[i]
                conv = nxt
        _mu_cache[key] = cur = conv
    return cur[d]


def edge_slice_coeffs(e2: int, p: int, k: int, d: int) -> list:
    """Coefficients (j, rational) of l0^j in [w^d] of
    (1+2w)^p (1+w)^(e2/2) (l0 - log(1+w))^k, where l0 = log(z/(4B))."""
    out = []
    binom = 1
    for j in range(k, -1, -1):
        q = binom * ((-1) ** (k - j)) * mu_coeff(e2, p, k - j, d)
        if q:
            out.append((j, q))
        binom = binom * j // (k - j + 1) if j else binom
    return out


def expand_at_edge(prefactor: ConstExpr, a, b_pow, p: int, k: int,
                   w_order: int) -> dict:
    """Expand pref * B^b_pow * (x^2-B^2)^a * (x/B)^p * l^k at x = B + z/2.

    Returns a map (z_exp, B_exp) -> LogPoly in l0 = log(z/(4B)), with
    cross powers of w = z/(4B) included through w^(w_order)."""
    a = Fraction(a)
    b_pow = Fraction(b_pow)
    e2 = _fr2(a)
    out: dict = {}
    quarter = QQ(1, 4)
    for d in range(w_order + 1):
        scale = quarter ** d
        lp: dict = {}
        for j, q in edge_slice_coeffs(e2, p, k, d):
            lp[j] = ConstExpr.from_rational(q * scale) * prefactor
        lp = LogPoly(lp)
        if lp.is_zero():
            continue
        ze = a + d
        be = a - d + b_pow
        cur = out.get((ze, be))
        out[(ze, be)] = lp if cur is None else cur + lp
    return {key: lp for key, lp in out.items() if not lp.is_zero()}


# ---------------------------------------------------------------------------
# Laplace maps
# ---------------------------------------------------------------------------

def laplace_term(alpha2: int, i: int):
    """Image of s^(alpha) log^i s, alpha = alpha2/2, under the transform.

    Returns (zexp2, [(logz_power, ConstExpr coefficient), ...]) so that the
    image is z^(zexp2/2) * sum coeff * log^t z."""
    zexp2 = -alpha2 - 2
    out = []
    if alpha2 % 2 == 0 and alpha2 <= -2:
        q = (-alpha2) // 2  # s^(-q); Gamma(1-q+eps) has a pole
        cm1, cs = pg.gamma_laurent(q, i)
        fact_i = 1
        for r in range(2, i + 1):
            fact_i *= r
        # i! * [ cm1 (-L)^(i+1)/(i+1)! + sum_t c_{i-t} (-L)^t / t! ]
        f = Fraction(fact_i)
        c = cm1 * ConstExpr.from_rational(f * Fraction((-1) ** (i + 1)) / _fact(i + 1))
        out.append((i + 1, c))
        for t in range(i + 1):
            c = cs[i - t] * ConstExpr.from_rational(f * Fraction((-1) ** t) / _fact(t))
            if c:
                out.append((t, c))
    else:
        a = Fraction(alpha2, 2) + 1
        g = pg.gamma_series(a, i)
        fact_i = _fact(i)
        for t in range(i + 1):
            c = g[i - t] * ConstExpr.from_rational(Fraction(fact_i * (-1) ** t) / _fact(t))
            if c:
                out.append((t, c))
    return zexp2, out


def _fact(n: int) -> int:
    f = 1
    for r in range(2, n + 1):
        f *= r
    return f


def laplace_s_to_z(a: GradedSeries) -> GradedSeries:
    """Term-wise transform of a series around s = 0 into one around z = inf."""
    if a.var != "s" or a.descending:
        raise ValueError("expected an ascending series in s")
    t: dict = {}
    for e2, lp in a.t.items():
        for i, v in lp.c.items():
            zexp2, img = laplace_term(e2, i)
            dst = t.get(zexp2)
            if dst is None:
                dst = t[zexp2] = {}
            for jz, c in img:
                cc = c * v
                if not cc:
                    continue
                nv = dst.get(jz)
                nv = cc if nv is None else nv + cc
                if nv:
                    dst[jz] = nv
                else:
                    dst.pop(jz, None)
    out = {e2: LogPoly(d) for e2, d in t.items() if d}
    tr2 = -a.trunc2 - 2 if abs(a.trunc2) < INF2 else -INF2
    return GradedSeries._raw("z", {e2: lp for e2, lp in out.items() if e2 > tr2},
                             tr2, True)


def laplace_z_to_s(a: GradedSeries) -> GradedSeries:
    """Inverse of laplace_s_to_z on its image."""
    if a.var != "z" or not a.descending:
        raise ValueError("expected a descending series in z")
    t: dict = {}
    for ze2 in a.t:
        alpha2 = -ze2 - 2
        rem = dict(a.t[ze2].c)
        got: dict = {}
        pole = (alpha2 % 2 == 0 and alpha2 <= -2)
        guard = 0
        while rem:
            guard += 1
            if guard > 400:
                raise ValueError("no preimage for z-column %s" % Fraction(ze2, 2))
            J = max(rem)
            i = J - 1 if pole else J
            if i < 0:
                raise ValueError("z-side constant cell has no preimage at z^%s"
                                 % Fraction(ze2, 2))
            _, img = laplace_term(alpha2, i)
            top = None
            for jz, c in img:
                if jz == J:
                    top = c
            coef = rem[J] * top.inv_monomial()
            cur = got.get(i)
            got[i] = coef if cur is None else cur + coef
            for jz, c in img:
                v = c * coef
                if not v:
                    continue
                nv = rem.get(jz)
                nv = -v if nv is None else nv - v
                if nv:
                    rem[jz] = nv
                else:
                    rem.pop(jz, None)
        lp = LogPoly(got)
        if not lp.is_zero():
            t[alpha2] = lp
    tr2 = -a.trunc2 - 2 if abs(a.trunc2) < INF2 else INF2
    return GradedSeries._raw("s", t, tr2, False)


# ---------------------------------------------------------------------------
# reversion and substitution
# ---------------------------------------------------------------------------

def log_of_monomial(c: ConstExpr) -> ConstExpr:
    """log of a positive monomial +/- 2^a pi^(b/2), as an exact field element."""
    if len(c._t) != 1:
        raise ValueError("log of non-monomial")
    (mono, q), = c._t.items()
    if q <= 0:
        raise ValueError("log of nonpositive value")
    out = ZERO
    pi_half = 0
    for gid, e in mono:
        if gid != PI:
            raise ValueError("log only for 2-power rationals times pi powers")
        pi_half = e
    num, den = q.numerator, q.denominator
    a = 0
    while num % 2 == 0:
        num //= 2
        a += 1
    while den % 2 == 0:
        den //= 2
        a -= 1
    if num != 1 or den != 1:
        raise ValueError("log only for 2-power rationals times pi powers")
    if a:
        out = out + ConstExpr.gen(LOG2, 1) * a
    if pi_half:
        out = out + ConstExpr.gen(LOGPI, 1) * ConstExpr.from_rational(Fraction(pi_half, 2))
    return out


def log_parts(s: GradedSeries):
    """Decompose log(s) = (d, logc, lam):  d * L_t + logc + lam(t),
    where s = c t^d (1 + delta) and lam = log(1 + delta)."""
    lead2 = s.lead2()
    lp = s.t.get(lead2)
    if lp is None or lp.degree() != 0:
        raise ValueError("leading coefficient must be log-free")
    c = lp.c[0]
    unit = s.shift_exp(_fr(-lead2)).scale(c.inv_monomial())
    lam = unit.log1p()
    return Fraction(lead2, 2), log_of_monomial(c), lam


def substitute(outer: GradedSeries, inner: GradedSeries) -> GradedSeries:
    """Replace the variable of `outer` (integer exponents only) by the series
    `inner`; the log symbol of `outer` becomes the induced polynomial in the
    log symbol of `inner`."""
    for e2 in outer.t:
        if e2 % 2:
            raise ValueError("substitution needs integer exponents")
    d, logc, lam = log_parts(inner)
    d2 = _fr2(d)
    lead2 = inner.lead2()
    clead = inner.t[lead2].c[0]
    # truncation of the image
    if abs(outer.trunc2) < INF2:
        tr2 = outer.trunc2 // 2 * lead2
        if abs(inner.trunc2) < INF2:
            tr2 = min(tr2, inner.trunc2)
    else:
        tr2 = inner.trunc2
    maxj = outer.max_logdeg()
    # powers of log(inner): (d L_t + logc + lam)^j
    lam_pows = [one(inner.var, _fr(tr2))]
    for _ in range(maxj):
        lam_pows.append((lam_pows[-1] * lam).truncate(_fr(tr2)))
    dlt = LogPoly({1: ConstExpr.from_rational(d), 0: logc})
    logu_pow = [one(inner.var, _fr(tr2))]
    for j in range(1, maxj + 1):
        # (A + lam)^j = sum_r C(j,r) A^(j-r) lam^r, A = d L + logc
        acc = GradedSeries._raw(inner.var, {}, tr2, False)
        binom = 1
        ap = [LogPoly({0: ONE})]
        for r in range(1, j + 1):
            ap.append(ap[-1] * dlt)
        for r in range(j + 1):
            piece = lam_pows[r].scale_logpoly(ap[j - r]).scale(binom)
            acc = acc + piece
            binom = binom * (j - r) // (r + 1)
        logu_pow.append(acc)
    # powers of inner
    es = sorted(e // 2 for e in outer.t)
    result = GradedSeries._raw(inner.var, {}, tr2, False)
    unit = inner.shift_exp(_fr(-lead2)).scale(clead.inv_monomial()).truncate(_fr(tr2 - 0))
    upow: dict = {0: one(inner.var, _fr(tr2))}

    def unit_pow(e: int) -> GradedSeries:
        if e in upow:
            return upow[e]
        if e > 0:
            upow[e] = (unit_pow(e - 1) * unit).truncate(_fr(tr2))
        else:
            inv = unit.binom_pow(-1)
            upow[e] = (unit_pow(e + 1) * inv).truncate(_fr(tr2))
        return upow[e]

    for e in es:
        lp = outer.t[2 * e]
        # inner^e = clead^e t^(d2*e/2...) adjust via monomial parts
        cpow = clead if e == 1 else (clead.inv_monomial() if e == -1 else None)
        if cpow is None:
            cpow = ONE
            base = clead if e > 0 else clead.inv_monomial()
            for _ in range(abs(e)):
                cpow = cpow * base
        piece = unit_pow(e).shift_exp(Fraction(lead2 * e, 2)).scale(cpow)
        # multiply by the log polynomial with L -> log(inner)
        acc = GradedSeries._raw(inner.var, {}, tr2, False)
        for j, v in lp.c.items():
            acc = acc + logu_pow[j].scale(v)
        result = result + (piece * acc).truncate(_fr(tr2))
    return result


def revert(gamma: GradedSeries, branch: int, target_var: str) -> GradedSeries:
    """Invert a coupling series.

    gamma: ascending series in some variable u (integer exponents, log-u
    polynomials) with leading term c u^branch and log-free c.
    Returns u as a series in t = gamma^(1/branch) (variable `target_var`),
    with polynomials in log t; substituting back recovers gamma = t^branch.
    """
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    lead2 = gamma.lead2()
    if lead2 != 2 * branch:
        raise ValueError("leading exponent must equal the branch order")
    lp = gamma.t.get(lead2)
    if lp is None or lp.degree() != 0:
        raise ValueError("leading coefficient must be log-free")
    c = lp.c[0]
    if branch == 2:
        croot = _monomial_sqrt(c)
    else:
        croot = c
    crinv = croot.inv_monomial()
    # gamma = c u^branch (1 + h(u));  u = (t/croot) (1+h(u))^(-1/branch)
    h = gamma.shift_exp(_fr(-lead2)).scale(c.inv_monomial())  # 1 + h
    if abs(gamma.trunc2) < INF2:
        tr2 = gamma.trunc2 - lead2 + 2
    else:
        tr2 = INF2
    order = max((tr2 - 2) // 2 + 1, 1) if tr2 < INF2 else 8
    u = GradedSeries(target_var, {1: LogPoly({0: crinv})}, _fr(tr2))
    for _ in range(order + 2):
        comp = substitute(h, u)
        u_new = comp.binom_pow(Fraction(-1, branch)).shift_exp(1).scale(crinv)
        u_new = u_new.truncate(_fr(tr2))
        if u_new.t == u.t:
            u = u_new
            break
        u = u_new
    return u


def _monomial_sqrt(c: ConstExpr) -> ConstExpr:
    (mono, q), = c._t.items()
    if q <= 0:
        raise ValueError("square root of nonpositive monomial")
    num, den = int(q.numerator), int(q.denominator)
    rn = _isqrt_exact(num)
    rd = _isqrt_exact(den)
    m = []
    for gid, e in mono:
        if gid == PI:
            m.append((gid, e // 2) if e % 2 == 0 else None)
            if e % 2:
                raise ValueError("pi power not a perfect square")
        else:
            if e % 2:
                raise ValueError("generator power not a perfect square")
            m.append((gid, e // 2))
    return ConstExpr._raw({tuple(m): QQ(rn, rd)})


def _isqrt_exact(n: int) -> int:
    import math
    r = math.isqrt(n)
    if r * r != n:
        raise ValueError("%d is not a perfect square" % n)
    return r
