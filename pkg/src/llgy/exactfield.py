"""Exact arithmetic in the constant field of the series engine.

Everything the pipeline produces lives in the commutative ring

    Q[pi^(1/2), pi^(-1/2), zeta(3), zeta(5), ..., euler, log2, logpi]

with rational coefficients of arbitrary size.  Elements are stored as a
map from monomials (sorted tuples of (generator id, exponent)) to exact
rationals, so equality is structural: two values are equal iff their
normalized representations coincide.

Generator ids are small integers: odd zeta indices map to themselves
(zeta(3) -> 3), and pi / euler / log2 / logpi use negative sentinels.
The pi exponent is stored doubled so that half-integer powers of pi
(i.e. sqrt(pi)) are representable; they occur in intermediate Laplace
images, while final physical coefficients always carry integer powers.

Products of zeta values are kept as formal monomials; no reduction into
multiple zeta values is attempted.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

import mpmath

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    QQ = Fraction

# generator ids
PI = -4       # stored exponent is doubled: (PI, 1) means pi^(1/2)
EULER = -3
LOG2 = -2
LOGPI = -1
# zeta(n) for odd n >= 3 has gid n

_NAMES = {PI: "pi", EULER: "euler", LOG2: "log2", LOGPI: "logpi"}

Mono = tuple  # tuple of (gid, exp) pairs, sorted by gid
MONO_ONE: Mono = ()

Scalar = Union[int, Fraction, "ConstExpr"]


def gen_name(gid: int) -> str:
    if gid in _NAMES:
        return _NAMES[gid]
    if gid >= 3 and gid % 2 == 1:
        return "zeta%d" % gid
    raise ValueError("unknown generator id %r" % (gid,))


def gen_from_name(name: str) -> int:
    for gid, nm in _NAMES.items():
        if nm == name:
            return gid
    if name.startswith("zeta"):
        n = int(name[4:])
        if n >= 3 and n % 2 == 1:
            return n
    raise ValueError("unknown generator %r" % name)


_mono_mul_cache: dict = {}


def mono_mul(a: Mono, b: Mono) -> Mono:
    """Product of two monomials (exponents add; zeros cancel)."""
    if not a:
        return b
    if not b:
        return a
    key = (a, b)
    r = _mono_mul_cache.get(key)
    if r is not None:
        return r
    d = dict(a)
    for gid, e in b:
        ne = d.get(gid, 0) + e
        if ne:
            d[gid] = ne
        else:
            del d[gid]
    r = tuple(sorted(d.items()))
    _mono_mul_cache[key] = r
    return r


def mono_inv(a: Mono) -> Mono:
    return tuple((gid, -e) for gid, e in a)


class ConstExpr:
    """Immutable element of the constant field."""

    __slots__ = ("_t", "_h")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for mono, q in terms.items():
                q = QQ(q)
                if q:
                    t[mono] = q
        self._t = t
        self._h = None

    @classmethod
    def _raw(cls, t: dict) -> "ConstExpr":
        # trusted constructor: t already normalized (no zeros, mpq values)
        self = cls.__new__(cls)
        self._t = t
        self._h = None
        return self

    # ---- constructors ----

    @classmethod
    def from_rational(cls, p, q=1) -> "ConstExpr":
        v = QQ(p, q) if q != 1 else QQ(p)
        return cls._raw({MONO_ONE: v} if v else {})

    @classmethod
    def pi_pow(cls, e) -> "ConstExpr":
        """pi^e for integer or half-integer e."""
        fe = Fraction(e)
        if fe.denominator not in (1, 2):
            raise ValueError("pi exponent must be a half-integer")
        d = int(fe * 2)
        if d == 0:
            return ONE
        return cls._raw({((PI, d),): QQ(1)})

    @classmethod
    def zeta(cls, n: int) -> "ConstExpr":
        if n < 3 or n % 2 == 0:
            raise ValueError("only odd zeta indices >= 3 are generators")
        return cls._raw({((n, 1),): QQ(1)})

    @classmethod
    def gen(cls, gid: int, e: int = 1) -> "ConstExpr":
        if gid == PI:
            return cls.pi_pow(e)
        return cls._raw({((gid, e),): QQ(1)}) if e else ONE

    # ---- basic queries ----

    def terms(self):
        return self._t.items()

    def is_zero(self) -> bool:
        return not self._t

    def is_rational(self) -> bool:
        return not self._t or (len(self._t) == 1 and MONO_ONE in self._t)

    def rational_value(self):
        if not self._t:
            return QQ(0)
        if not self.is_rational():
            raise ValueError("not a rational: %s" % self.text())
        return self._t[MONO_ONE]

    def free_of(self, gens: Iterable) -> bool:
        gids = {g if isinstance(g, int) else gen_from_name(g) for g in gens}
        for mono in self._t:
            for gid, _ in mono:
                if gid in gids:
                    return False
        return True

    def has_half_pi_power(self) -> bool:
        for mono in self._t:
            for gid, e in mono:
                if gid == PI and e % 2:
                    return True
        return False

    # ---- ring operations ----

    def _coerce(x) -> "ConstExpr":
        if isinstance(x, ConstExpr):
            return x
        if isinstance(x, (int, Fraction)) or type(x) is type(QQ(1)):
            return ConstExpr.from_rational(x)
        return NotImplemented

    def __add__(self, other):
        o = ConstExpr._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if not self._t:
            return o
        if not o._t:
            return self
        t = dict(self._t)
        for mono, q in o._t.items():
            nq = t.get(mono)
            if nq is None:
                t[mono] = q
            else:
                nq = nq + q
                if nq:
                    t[mono] = nq
                else:
                    del t[mono]
        return ConstExpr._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return ConstExpr._raw({m: -q for m, q in self._t.items()})

    def __sub__(self, other):
        o = ConstExpr._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = ConstExpr._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = ConstExpr._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if not self._t or not o._t:
            return ZERO
        # fast path: scaling by a rational
        if o.is_rational():
            q0 = o._t.get(MONO_ONE, QQ(0))
            return ConstExpr._raw({m: q * q0 for m, q in self._t.items()})
        if self.is_rational():
            q0 = self._t.get(MONO_ONE, QQ(0))
            return ConstExpr._raw({m: q * q0 for m, q in o._t.items()})
        t: dict = {}
        for m1, q1 in self._t.items():
            for m2, q2 in o._t.items():
                m = mono_mul(m1, m2)
                q = q1 * q2
                nq = t.get(m)
                if nq is None:
                    t[m] = q
                else:
                    nq = nq + q
                    if nq:
                        t[m] = nq
                    else:
                        del t[m]
        return ConstExpr._raw(t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        r = ONE
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    def inv_monomial(self) -> "ConstExpr":
        """Exact inverse, defined for single-term elements only."""
        if len(self._t) != 1:
            raise ValueError("inverse only for monomial expressions")
        (mono, q), = self._t.items()
        return ConstExpr._raw({mono_inv(mono): 1 / q})

    def __eq__(self, other):
        o = ConstExpr._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._t == o._t

    def __hash__(self):
        if self._h is None:
            self._h = hash(tuple(sorted(self._t.items())))
        return self._h

    def __bool__(self):
        return bool(self._t)

    # ---- numeric evaluation ----

    def eval_numeric(self, precision_bits: int = 128) -> mpmath.mpf:
        """Evaluate with every generator computed to at least the requested
        precision; the result carries an error of at most a few ulp."""
        if precision_bits < 64:
            raise ValueError("precision_bits must be >= 64")
        work = precision_bits + 16 + max(0, len(self._t).bit_length() * 2)
        with mpmath.workprec(work):
            acc = mpmath.mpf(0)
            for mono, q in self._t.items():
                v = mpmath.mpf(int(q.numerator)) / mpmath.mpf(int(q.denominator))
                for gid, e in mono:
                    v *= _gen_value(gid, work, e)
                acc += v
            out = +acc  # snapshot at working precision
        with mpmath.workprec(precision_bits):
            return +out

    # ---- canonical text ----

    def text(self) -> str:
        """Canonical serialization; grammar documented in the README."""
        if not self._t:
            return "0"
        parts = []
        for mono in sorted(self._t):
            q = self._t[mono]
            parts.append((mono, q))
        out = []
        for i, (mono, q) in enumerate(parts):
            neg = q < 0
            mag = -q if neg else q
            s = _coef_text(mag)
            for gid, e in mono:
                s += "*" + _factor_text(gid, e)
            if i == 0:
                out.append(("-" if neg else "") + s)
            else:
                out.append((" - " if neg else " + ") + s)
        return "".join(out)

    def __repr__(self):
        return "ConstExpr(%s)" % self.text()


def _coef_text(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)


def _factor_text(gid: int, e: int) -> str:
    name = gen_name(gid)
    if gid == PI:
        if e % 2 == 0:
            k = e // 2
            return name if k == 1 else "%s^%d" % (name, k)
        return "%s^(%d/2)" % (name, e)
    return name if e == 1 else "%s^%d" % (name, e)


ZERO = ConstExpr._raw({})
ONE = ConstExpr._raw({MONO_ONE: QQ(1)})


def parse(text: str) -> ConstExpr:
    """Parse the canonical text form back into a ConstExpr."""
    text = text.strip()
    if text == "0":
        return ZERO
    terms: dict = {}
    # split into signed terms; the grammar puts spaces around infix +/- only
    chunks = text.replace(" - ", " +-").split(" + ")
    flat = []
    for c in chunks:
        flat.extend(c.split(" +"))
    for raw in flat:
        raw = raw.strip()
        if not raw:
            continue
        factors = raw.split("*")
        q = QQ(factors[0])
        mono_d: dict = {}
        for f in factors[1:]:
            if "^" in f:
                name, _, ex = f.partition("^")
                if ex.startswith("(") and ex.endswith("/2)"):
                    e = int(ex[1:-3])  # doubled pi exponent
                    if name != "pi":
                        raise ValueError("half powers only for pi: %r" % f)
                else:
                    e = int(ex)
                    if name == "pi":
                        e *= 2
            else:
                name = f
                e = 2 if f == "pi" else 1
            gid = gen_from_name(name)
            mono_d[gid] = mono_d.get(gid, 0) + e
        mono = tuple(sorted((g, e) for g, e in mono_d.items() if e))
        nq = terms.get(mono, QQ(0)) + q
        if nq:
            terms[mono] = nq
        elif mono in terms:
            del terms[mono]
    return ConstExpr._raw(terms)


_gen_cache: dict = {}


def _gen_value(gid: int, prec: int, e: int) -> mpmath.mpf:
    key = (gid, prec)
    base = _gen_cache.get(key)
    if base is None:
        with mpmath.workprec(prec):
            if gid == PI:
                base = mpmath.sqrt(mpmath.pi)  # pi exponents are doubled
            elif gid == EULER:
                base = +mpmath.euler
            elif gid == LOG2:
                base = mpmath.log(2)
            elif gid == LOGPI:
                base = mpmath.log(mpmath.pi)
            else:
                base = mpmath.zeta(gid)
        _gen_cache[key] = base
    return base ** e


# spec-facing aliases

def add(a: ConstExpr, b: ConstExpr) -> ConstExpr:
    return a + b


def mul(a: ConstExpr, b: ConstExpr) -> ConstExpr:
    return a * b


def eval_numeric(a: ConstExpr, precision_bits: int) -> mpmath.mpf:
    return a.eval_numeric(precision_bits)


def assert_free_of(a: ConstExpr, gens: Iterable) -> bool:
    return a.free_of(gens)
