"""Real numbers of the form q0 + q1*b1 + ... + qk*bk over declared constants.

The constants b1..bk are fixed irrationals (square roots, pi, e, or a
user-supplied decimal expansion).  Coefficients are Fractions, so sums and
rational multiples are exact.  Numerical values come from interval
arithmetic in mpmath, which keeps every comparison sound.
"""
from __future__ import annotations

import math
import re
import threading
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath.ctx_iv import MPIntervalContext

from .errors import AmbiguousZero, IntegerRelationWarning, OutOfSpan

DEFAULT_PRECISION = 106
MAX_PRECISION = 424
_GUARD_BITS = 16

_local = threading.local()


def _ivctx(prec: int) -> MPIntervalContext:
    # one interval context per thread; mpmath contexts carry mutable precision
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _local.ctx = MPIntervalContext()
    ctx.prec = prec
    return ctx


def mpf_to_fraction(x) -> Fraction:
    if not isinstance(x, mpmath.mpf):
        x = mpmath.mpf(x)
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise ValueError("cannot convert a non-finite mpf")
    man = -int(man) if sign else int(man)
    if exp >= 0:
        return Fraction(man << exp)
    return Fraction(man, 1 << -exp)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("non-finite value")
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class Interval:
    """Closed interval with exact binary endpoints (mpmath mpf)."""

    lo: mpmath.mpf
    hi: mpmath.mpf

    def contains(self, value) -> bool:
        v = as_fraction(value)
        return mpf_to_fraction(self.lo) <= v <= mpf_to_fraction(self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def floats(self) -> tuple[float, float]:
        """Endpoints rounded outward to doubles."""
        lo, hi = float(self.lo), float(self.hi)
        if mpmath.mpf(lo) > self.lo:
            lo = math.nextafter(lo, -math.inf)
        if mpmath.mpf(hi) < self.hi:
            hi = math.nextafter(hi, math.inf)
        return lo, hi

    def compare(self, bound) -> int | None:
        """-1 if below bound, +1 if above, 0 if equal to it, None if undecided."""
        b = as_fraction(bound)
        lo, hi = mpf_to_fraction(self.lo), mpf_to_fraction(self.hi)
        if hi < b:
            return -1
        if lo > b:
            return 1
        if lo == hi == b:
            return 0
        return None


@dataclass(frozen=True)
class Constant:
    name: str
    kind: str  # "sqrt", "pi", "e" or "decimal"
    arg: int | None = None
    decimal: str | None = None

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z_]\w*", self.name):
            raise ValueError(f"bad constant name {self.name!r}")
        if self.kind == "sqrt":
            if self.arg is None or int(self.arg) <= 0:
                raise ValueError("sqrt constant needs a positive integer arg")
            if math.isqrt(int(self.arg)) ** 2 == int(self.arg):
                raise ValueError(f"sqrt({self.arg}) is rational")
        elif self.kind == "decimal":
            if self.decimal is None or Fraction(self.decimal) == 0:
                raise ValueError("decimal constant must be a nonzero decimal string")
        elif self.kind not in ("pi", "e"):
            raise ValueError(f"unknown constant kind {self.kind!r}")

    def interval(self, prec: int):
        ctx = _ivctx(prec)
        if self.kind == "sqrt":
            return ctx.sqrt(ctx.mpf(int(self.arg)))
        if self.kind == "pi":
            return +ctx.pi
        if self.kind == "e":
            return +ctx.e
        q = Fraction(self.decimal)
        return ctx.mpf(q.numerator) / q.denominator

    def value(self, dps: int = 50):
        with mpmath.workdps(dps):
            if self.kind == "sqrt":
                return mpmath.sqrt(int(self.arg))
            if self.kind == "pi":
                return +mpmath.pi
            if self.kind == "e":
                return +mpmath.e
            return mpmath.mpf(Fraction(self.decimal).numerator) / Fraction(self.decimal).denominator

    def to_json(self) -> dict:
        if self.kind == "sqrt":
            return {"name": self.name, "builtin": "sqrt", "arg": int(self.arg)}
        if self.kind in ("pi", "e"):
            return {"name": self.name, "builtin": self.kind}
        return {"name": self.name, "decimal": self.decimal}

    @staticmethod
    def from_json(obj: dict) -> "Constant":
        if "builtin" in obj:
            kind = obj["builtin"]
            arg = obj.get("arg")
            return Constant(obj["name"], kind, int(arg) if arg is not None else None)
        return Constant(obj["name"], "decimal", decimal=str(obj["decimal"]))


def sqrt_const(k: int, name: str | None = None) -> Constant:
    return Constant(name or f"sqrt{k}", "sqrt", k)


PI = Constant("pi", "pi")
E = Constant("e", "e")


class ConstantBasis:
    """An ordered list of irrational constants, assumed Q-linearly independent with 1.

    Independence is a user contract.  On construction we run PSLQ looking for
    a small integer relation and warn if one turns up.
    """

    def __init__(self, constants: Sequence[Constant] = (), check_relations: bool = True):
        self.constants = tuple(constants)
        names = [c.name for c in self.constants]
        if len(set(names)) != len(names):
            raise ValueError("constant names must be unique")
        if "1" in names:
            raise ValueError("'1' is reserved")
        self._index = {n: i + 1 for i, n in enumerate(names)}
        self._floats = [1.0] + [float(c.value(30)) for c in self.constants]
        self._intervals: dict[int, list] = {}
        if check_relations and self.constants:
            self._warn_on_relation()

    def __len__(self):
        return len(self.constants)

    def __eq__(self, other):
        return isinstance(other, ConstantBasis) and self.constants == other.constants

    def __hash__(self):
        return hash(self.constants)

    def __repr__(self):
        return f"ConstantBasis({[c.name for c in self.constants]})"

    @property
    def names(self) -> list[str]:
        return ["1"] + [c.name for c in self.constants]

    def index(self, name: str) -> int:
        if name == "1":
            return 0
        return self._index[name]

    @property
    def floats(self) -> list[float]:
        """Double approximations of (1, b1, ..., bk); relative error <= 2^-53."""
        return list(self._floats)

    def intervals(self, prec: int) -> list:
        cached = self._intervals.get(prec)
        if cached is None:
            ctx = _ivctx(prec)
            cached = [ctx.mpf(1)] + [c.interval(prec) for c in self.constants]
            self._intervals[prec] = cached
        return cached

    def squares(self) -> dict[int, int]:
        """Basis positions holding sqrt(k), mapped to k (used to reduce formal products)."""
        return {i + 1: int(c.arg) for i, c in enumerate(self.constants) if c.kind == "sqrt"}

    def _warn_on_relation(self):
        dps = max(50, 8 * (len(self.constants) + 1))
        with mpmath.workdps(dps):
            vals = [mpmath.mpf(1)] + [c.value(dps) for c in self.constants]
            rel = mpmath.pslq(vals, maxcoeff=10**6, maxsteps=20000)
        if rel is not None:
            warnings.warn(
                f"constants {self.names} appear to satisfy the integer relation {rel}",
                IntegerRelationWarning,
                stacklevel=3,
            )

    def extended(self, extra: Iterable[Constant]) -> "ConstantBasis":
        cs = list(self.constants)
        for c in extra:
            if c not in cs:
                cs.append(c)
        return ConstantBasis(cs)

    def to_json(self) -> dict:
        return {"constants": [c.to_json() for c in self.constants]}

    @staticmethod
    def from_json(obj: dict) -> "ConstantBasis":
        return ConstantBasis([Constant.from_json(c) for c in obj.get("constants", [])])


RATIONAL = ConstantBasis(())


class ExactScalar:
    """q[0] + sum_i q[i]*b_i with Fraction coefficients over a ConstantBasis."""

    __slots__ = ("basis", "q")

    def __init__(self, q: Sequence, basis: ConstantBasis = RATIONAL):
        q = tuple(as_fraction(c) for c in q)
        if len(q) < 1 + len(basis):
            q = q + (Fraction(0),) * (1 + len(basis) - len(q))
        if len(q) != 1 + len(basis):
            raise ValueError("coefficient vector does not match the basis")
        self.q = q
        self.basis = basis

    @classmethod
    def rational(cls, value, basis: ConstantBasis = RATIONAL) -> "ExactScalar":
        return cls([as_fraction(value)], basis)

    @classmethod
    def constant(cls, name: str, basis: ConstantBasis, coeff=1) -> "ExactScalar":
        q = [Fraction(0)] * (1 + len(basis))
        q[basis.index(name)] = as_fraction(coeff)
        return cls(q, basis)

    def _coerce(self, other) -> "ExactScalar":
        if isinstance(other, ExactScalar):
            if other.basis != self.basis:
                if other.is_rational():
                    return ExactScalar.rational(other.q[0], self.basis)
                if self.is_rational():
                    return other  # handled by caller swapping
                raise OutOfSpan("scalars over different bases")
            return other
        return ExactScalar.rational(as_fraction(other), self.basis)

    def _unify(self, other):
        o = self._coerce(other)
        if o.basis != self.basis:
            return ExactScalar.rational(self.q[0], o.basis), o
        return self, o

    def __add__(self, other):
        a, b = self._unify(other)
        return ExactScalar([x + y for x, y in zip(a.q, b.q)], a.basis)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar([-x for x in self.q], self.basis)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, ExactScalar):
            if other.is_rational():
                c = other.q[0]
            elif self.is_rational():
                return other * self.q[0]
            else:
                raise OutOfSpan("product of two irrational scalars leaves the declared span")
        else:
            c = as_fraction(other)
        return ExactScalar([x * c for x in self.q], self.basis)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ExactScalar):
            if not other.is_rational():
                raise OutOfSpan("division by an irrational scalar")
            other = other.q[0]
        c = as_fraction(other)
        return ExactScalar([x / c for x in self.q], self.basis)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (OutOfSpan, TypeError, ValueError):
            return NotImplemented
        if o.basis != self.basis:
            return self.is_rational() and o.is_rational() and self.q[0] == o.q[0]
        return self.q == o.q

    def __hash__(self):
        if self.is_rational():
            return hash(self.q[0])
        return hash((self.q, self.basis))

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.q[1:])

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.q)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("scalar is irrational")
        return self.q[0]

    def eval(self, precision: int = DEFAULT_PRECISION) -> Interval:
        """Enclosing interval; width about 2^(-precision) times the magnitude."""
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        ctx = _ivctx(precision + _GUARD_BITS)
        vals = self.basis.intervals(precision + _GUARD_BITS)
        acc = ctx.mpf(0)
        for c, v in zip(self.q, vals):
            if c:
                acc = acc + (ctx.mpf(c.numerator) / c.denominator) * v
        lo, hi = acc._mpi_
        return Interval(mpmath.mp.make_mpf(lo), mpmath.mp.make_mpf(hi))

    def __float__(self):
        if self.is_rational():
            return float(self.q[0])
        iv = self.eval(80)
        return float((mpf_to_fraction(iv.lo) + mpf_to_fraction(iv.hi)) / 2)

    def sign(self) -> int:
        return certified_sign(FormalPoly.from_scalar(self))

    def compare(self, bound) -> int:
        """Exact sign of self - bound (bound rational)."""
        return (self - as_fraction(bound)).sign()

    def __repr__(self):
        return f"ExactScalar({self.format()!r})"

    def format(self) -> str:
        return format_scalar(self)

    def to_json(self) -> dict:
        return {"q": [f"{c.numerator}/{c.denominator}" for c in self.q], "basis": self.basis.names}

    @staticmethod
    def from_json(obj: dict, basis: ConstantBasis) -> "ExactScalar":
        q = [Fraction(0)] * (1 + len(basis))
        for c, name in zip(obj["q"], obj["basis"]):
            q[basis.index(name)] += Fraction(c)
        return ExactScalar(q, basis)


def _fmt_q(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_scalar(x: ExactScalar) -> str:
    parts = []
    if x.q[0] != 0 or x.is_zero():
        parts.append(_fmt_q(x.q[0]))
    for c, name in zip(x.q[1:], x.basis.names[1:]):
        if c != 0:
            parts.append(f"{_fmt_q(c)}*{name}")
    out = parts[0]
    for p in parts[1:]:
        out += p if p.startswith("-") else "+" + p
    return out


_TERM = re.compile(
    r"\s*([+-])?\s*(?:"
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:\s*/\s*\d+)?)(?:\s*\*\s*(?P<name1>[A-Za-z_]\w*))?"
    r"|(?P<name2>[A-Za-z_]\w*))\s*"
)


def parse_scalar(text: str, basis: ConstantBasis = RATIONAL) -> ExactScalar:
    """Parse strings such as '-1+1*sqrt2', '3/2', '-sqrt3', '0.5*pi'."""
    s = text.strip()
    if not s:
        raise ValueError("empty scalar")
    q = [Fraction(0)] * (1 + len(basis))
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse {text!r} at position {pos}")
        sign = m.group(1)
        if sign is None and not first:
            raise ValueError(f"missing operator in {text!r}")
        coeff = Fraction(1)
        if m.group("num") is not None:
            coeff = Fraction(m.group("num").replace(" ", ""))
        name = m.group("name1") or m.group("name2") or "1"
        if sign == "-":
            coeff = -coeff
        try:
            q[basis.index(name)] += coeff
        except KeyError:
            raise ValueError(f"unknown constant {name!r} in {text!r}") from None
        pos = m.end()
        first = False
    return ExactScalar(q, basis)


def to_scalar(x, basis: ConstantBasis = RATIONAL) -> ExactScalar:
    if isinstance(x, ExactScalar):
        if x.basis != basis:
            if x.is_rational():
                return ExactScalar.rational(x.q[0], basis)
            if all(n in basis.names for n in x.basis.names):
                q = [Fraction(0)] * (1 + len(basis))
                for c, n in zip(x.q, x.basis.names):
                    q[basis.index(n)] += c
                return ExactScalar(q, basis)
            raise OutOfSpan("scalar basis not contained in target basis")
        return x
    if isinstance(x, str):
        return parse_scalar(x, basis)
    return ExactScalar.rational(as_fraction(x), basis)


class FormalPoly:
    """Polynomial in the basis constants with rational coefficients.

    Used for determinants and other products of scalars.  Squares of
    sqrt(k) constants are rewritten to k; no other relation is applied, so a
    formally nonzero polynomial may still vanish numerically, which is why
    zero tests go through certified_sign.
    """

    __slots__ = ("basis", "terms")

    def __init__(self, terms: dict, basis: ConstantBasis):
        self.basis = basis
        self.terms = {k: v for k, v in terms.items() if v != 0}

    @classmethod
    def from_scalar(cls, x: ExactScalar) -> "FormalPoly":
        k = len(x.basis)
        terms = {}
        for i, c in enumerate(x.q):
            if c:
                mono = [0] * k
                if i:
                    mono[i - 1] = 1
                terms[tuple(mono)] = c
        return cls(terms, x.basis)

    @classmethod
    def const(cls, c, basis: ConstantBasis) -> "FormalPoly":
        return cls({(0,) * len(basis): as_fraction(c)}, basis)

    def __add__(self, other: "FormalPoly") -> "FormalPoly":
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return FormalPoly(t, self.basis)

    def __neg__(self):
        return FormalPoly({k: -v for k, v in self.terms.items()}, self.basis)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "FormalPoly") -> "FormalPoly":
        sq = self.basis.squares()
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                mono = [a + b for a, b in zip(k1, k2)]
                coeff = v1 * v2
                for pos, val in sq.items():
                    e = mono[pos - 1]
                    if e >= 2:
                        coeff *= val ** (e // 2)
                        mono[pos - 1] = e % 2
                key = tuple(mono)
                out[key] = out.get(key, 0) + coeff
        return FormalPoly(out, self.basis)

    def is_formally_zero(self) -> bool:
        return not self.terms

    def as_scalar(self) -> ExactScalar:
        """Back to an ExactScalar if the polynomial has degree <= 1."""
        q = [Fraction(0)] * (1 + len(self.basis))
        for mono, c in self.terms.items():
            s = sum(mono)
            if s == 0:
                q[0] += c
            elif s == 1:
                q[1 + mono.index(1)] += c
            else:
                raise OutOfSpan("polynomial has degree above one")
        return ExactScalar(q, self.basis)

    def eval(self, precision: int):
        ctx = _ivctx(precision + _GUARD_BITS)
        vals = self.basis.intervals(precision + _GUARD_BITS)[1:]
        acc = ctx.mpf(0)
        for mono, c in self.terms.items():
            t = ctx.mpf(c.numerator) / c.denominator
            for v, e in zip(vals, mono):
                if e:
                    t = t * v**e
            acc = acc + t
        lo, hi = acc._mpi_
        return Interval(mpmath.mp.make_mpf(lo), mpmath.mp.make_mpf(hi))

    def approx(self) -> float:
        iv = self.eval(DEFAULT_PRECISION)
        return float((iv.lo + iv.hi) / 2)


def certified_sign(p: FormalPoly) -> int:
    """Sign of the real value of p.

    Zero is reported only for formally zero polynomials.  Otherwise the value
    is enclosed at 106, 212 and 424 bits; if 0 is still inside, AmbiguousZero.
    """
    if p.is_formally_zero():
        return 0
    prec = DEFAULT_PRECISION
    while prec <= MAX_PRECISION:
        c = p.eval(prec).compare(0)
        if c is not None and c != 0:
            return c
        if c == 0:
            return 0
        prec *= 2
    raise AmbiguousZero("could not separate value from zero at 424 bits")


def formal_dot(xs: Sequence[ExactScalar], ys: Sequence[ExactScalar]) -> FormalPoly:
    basis = xs[0].basis if xs else RATIONAL
    acc = FormalPoly({}, basis)
    for x, y in zip(xs, ys):
        acc = acc + FormalPoly.from_scalar(x) * FormalPoly.from_scalar(y)
    return acc


def formal_det(rows: Sequence[Sequence[ExactScalar]]) -> FormalPoly:
    """Determinant by cofactor expansion over formal polynomials (small matrices)."""
    n = len(rows)
    basis = rows[0][0].basis
    polys = [[FormalPoly.from_scalar(x) for x in r] for r in rows]

    def rec(rows_left: tuple, cols_left: tuple) -> FormalPoly:
        if not rows_left:
            return FormalPoly.const(1, basis)
        r = rows_left[0]
        acc = FormalPoly({}, basis)
        for j, c in enumerate(cols_left):
            entry = polys[r][c]
            if entry.is_formally_zero():
                continue
            minor = rec(rows_left[1:], cols_left[:j] + cols_left[j + 1 :])
            term = entry * minor
            acc = acc + (term if j % 2 == 0 else -term)
        return acc

    return rec(tuple(range(n)), tuple(range(n)))
