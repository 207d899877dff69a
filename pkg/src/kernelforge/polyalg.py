"""Exact multivariate polynomials over the rationals.

Coefficients are :class:`fractions.Fraction`; exponents are stored as
tuples aligned with a sorted tuple of variable names.  Instances are
immutable once built and every operation returns a new polynomial.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Union

import numpy as np

Rational = Fraction
Scalar = Union[int, Fraction]

# bits reserved per exponent when packing exponent vectors for multiplication
_FIELD = 20
_MASK = (1 << _FIELD) - 1


def rational(value) -> Fraction:
    """Coerce ints, Fractions, floats (exactly) and ``"a/b"`` strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, _RationalABC):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise TypeError(f"cannot convert {value!r} to a rational")


class MultiPoly:
    """Sparse polynomial: exponent tuple -> nonzero Fraction coefficient."""

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Scalar] | None = None,
                 variables: Iterable[str] = ()):
        variables = tuple(variables)
        if list(variables) != sorted(set(variables)):
            order = sorted(set(variables))
            perm = [variables.index(v) for v in order]
            src = terms or {}
            terms = {}
            for e, c in src.items():
                key = tuple(e[k] for k in perm)
                terms[key] = terms.get(key, 0) + c
            variables = tuple(order)
        clean = {}
        n = len(variables)
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != n:
                raise ValueError(f"exponent {e} does not match variables {variables}")
            if any(k < 0 for k in e):
                raise ValueError("negative exponent")
            c = rational(c)
            if c:
                clean[e] = c
        self.variables = variables
        self.terms = clean
        self._hash = None

    # construction helpers

    @classmethod
    def _raw(cls, terms: dict, variables: tuple) -> "MultiPoly":
        # trusted fast path: terms already normalized
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, value, variables: Iterable[str] = ()) -> "MultiPoly":
        variables = tuple(sorted(set(variables)))
        value = rational(value)
        terms = {(0,) * len(variables): value} if value else {}
        return cls._raw(terms, variables)

    @classmethod
    def var(cls, name: str) -> "MultiPoly":
        return cls._raw({(1,): Fraction(1)}, (name,))

    @classmethod
    def univariate(cls, name: str, coeffs: Iterable) -> "MultiPoly":
        """Build ``sum(coeffs[k] * name**k)``."""
        terms = {}
        for k, c in enumerate(coeffs):
            c = rational(c)
            if c:
                terms[(k,)] = c
        return cls._raw(terms, (name,))

    # structure

    def with_variables(self, variables: Iterable[str]) -> "MultiPoly":
        """Re-express over a superset of the current variables."""
        variables = tuple(sorted(set(variables)))
        if variables == self.variables:
            return self
        missing = set(self.variables) - set(variables)
        if missing:
            raise ValueError(f"variables {sorted(missing)} would be dropped")
        idx = [variables.index(v) for v in self.variables]
        n = len(variables)
        terms = {}
        for e, c in self.terms.items():
            key = [0] * n
            for k, pos in enumerate(idx):
                key[pos] = e[k]
            terms[tuple(key)] = c
        return MultiPoly._raw(terms, variables)

    def trim(self) -> "MultiPoly":
        """Drop variables that no term uses."""
        used = [k for k in range(len(self.variables))
                if any(e[k] for e in self.terms)]
        if len(used) == len(self.variables):
            return self
        variables = tuple(self.variables[k] for k in used)
        terms = {tuple(e[k] for k in used): c for e, c in self.terms.items()}
        return MultiPoly._raw(terms, variables)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def free_symbols(self) -> tuple[str, ...]:
        return self.trim().variables

    def degree(self, var: str | None = None) -> int:
        """Total degree, or degree in ``var``; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        if var not in self.variables:
            return 0
        k = self.variables.index(var)
        return max(e[k] for e in self.terms)

    def coefficient_map(self, variables: Iterable[str]) -> dict[tuple, "MultiPoly"]:
        """Group terms by their exponents in ``variables``.

        Returns a map from exponent tuple (in the order given) to the
        polynomial cofactor in the remaining variables.
        """
        variables = tuple(variables)
        pos = [self.variables.index(v) if v in self.variables else None
               for v in variables]
        rest = tuple(v for v in self.variables if v not in variables)
        rest_pos = [self.variables.index(v) for v in rest]
        groups: dict[tuple, dict] = {}
        for e, c in self.terms.items():
            key = tuple(e[p] if p is not None else 0 for p in pos)
            groups.setdefault(key, {})[tuple(e[p] for p in rest_pos)] = c
        return {k: MultiPoly._raw(t, rest) for k, t in groups.items()}

    def univariate_coeffs(self, var: str) -> list["MultiPoly"]:
        """Coefficients of ``var**k`` for k = 0..deg, as polynomials."""
        groups = self.coefficient_map((var,))
        deg = max((k[0] for k in groups), default=-1)
        rest = tuple(v for v in self.variables if v != var)
        return [groups.get((k,), MultiPoly._raw({}, rest)) for k in range(deg + 1)]

    # arithmetic

    def _align(self, other: "MultiPoly") -> tuple["MultiPoly", "MultiPoly"]:
        if self.variables == other.variables:
            return self, other
        union = tuple(sorted(set(self.variables) | set(other.variables)))
        return self.with_variables(union), other.with_variables(union)

    @staticmethod
    def _coerce(other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return other
        return MultiPoly.const(other)

    def __add__(self, other) -> "MultiPoly":
        a, b = self._align(self._coerce(other))
        terms = dict(a.terms)
        for e, c in b.terms.items():
            v = terms.get(e)
            if v is None:
                terms[e] = c
            else:
                v += c
                if v:
                    terms[e] = v
                else:
                    del terms[e]
        return MultiPoly._raw(terms, a.variables)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw({e: -c for e, c in self.terms.items()}, self.variables)

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def scale(self, factor) -> "MultiPoly":
        factor = rational(factor)
        if not factor:
            return MultiPoly._raw({}, self.variables)
        return MultiPoly._raw({e: c * factor for e, c in self.terms.items()},
                              self.variables)

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        a, b = self._align(other)
        if not a.terms or not b.terms:
            return MultiPoly._raw({}, a.variables)
        n = len(a.variables)
        if n == 0:
            return MultiPoly._raw({(): a.terms[()] * b.terms[()]}, ())
        # integer numerators over a common denominator, packed exponent keys
        pa, da = _packed_integer_terms(a.terms, n)
        pb, db = _packed_integer_terms(b.terms, n)
        acc: dict[int, int] = {}
        get = acc.get
        for ka, ca in pa:
            for kb, cb in pb:
                k = ka + kb
                acc[k] = get(k, 0) + ca * cb
        den = da * db
        terms = {}
        for k, num in acc.items():
            if num:
                terms[_unpack(k, n)] = Fraction(num, den)
        return MultiPoly._raw(terms, a.variables)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "MultiPoly":
        return self.scale(1 / rational(other))

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = MultiPoly.const(1, self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            try:
                other = MultiPoly.const(other)
            except TypeError:
                return NotImplemented
        a, b = self.trim(), other.trim()
        return a.variables == b.variables and a.terms == b.terms

    def __hash__(self) -> int:
        if self._hash is None:
            t = self.trim()
            self._hash = hash((t.variables, frozenset(t.terms.items())))
        return self._hash

    # calculus

    def _index(self, var: str) -> int:
        try:
            return self.variables.index(var)
        except ValueError:
            raise KeyError(f"unknown variable {var!r}") from None

    def diff(self, var: str) -> "MultiPoly":
        k = self._index(var)
        terms = {}
        for e, c in self.terms.items():
            if e[k]:
                ne = e[:k] + (e[k] - 1,) + e[k + 1:]
                terms[ne] = c * e[k]
        return MultiPoly._raw(terms, self.variables)

    def integrate(self, var: str, lo, hi) -> "MultiPoly":
        """Definite integral over ``var`` in [lo, hi]; ``var`` is removed."""
        k = self._index(var)
        lo, hi = rational(lo), rational(hi)
        rest = self.variables[:k] + self.variables[k + 1:]
        terms: dict[tuple, Fraction] = {}
        powers: dict[int, Fraction] = {}
        for e, c in self.terms.items():
            m = e[k] + 1
            w = powers.get(m)
            if w is None:
                w = powers[m] = (hi ** m - lo ** m) / m
            if not w:
                continue
            key = e[:k] + e[k + 1:]
            terms[key] = terms.get(key, 0) + c * w
        return MultiPoly(terms, rest)

    def substitute(self, var: str, expr) -> "MultiPoly":
        """Replace ``var`` by a polynomial or rational value."""
        k = self._index(var)
        expr = self._coerce(expr)
        if expr.is_constant():
            value = expr.constant_value()
            rest = self.variables[:k] + self.variables[k + 1:]
            terms: dict[tuple, Fraction] = {}
            for e, c in self.terms.items():
                key = e[:k] + e[k + 1:]
                terms[key] = terms.get(key, 0) + c * value ** e[k]
            return MultiPoly(terms, rest)
        # Horner in var over the cofactor polynomials
        coeffs = self.univariate_coeffs(var)
        result = MultiPoly.const(0)
        for cof in reversed(coeffs):
            result = result * expr + cof
        return result

    def subs(self, mapping: Mapping[str, object]) -> "MultiPoly":
        result = self
        for var, val in mapping.items():
            if var in result.variables:
                result = result.substitute(var, val)
        return result

    def evaluate(self, mapping: Mapping[str, object]) -> Fraction:
        """Exact value at rational point; every variable must be assigned."""
        result = self.subs({v: rational(mapping[v]) for v in self.variables
                            if v in mapping})
        if not result.is_constant():
            raise KeyError(f"unassigned variables {result.free_symbols()}")
        return result.constant_value()

    def evalf(self, mapping: Mapping[str, float]) -> float:
        x = [float(mapping[v]) for v in self.variables]
        total = 0.0
        for e, c in self.terms.items():
            term = float(c)
            for xv, k in zip(x, e):
                if k:
                    term *= xv ** k
            total += term
        return total

    # presentation

    def common_denominator(self) -> int:
        return lcm(*(c.denominator for c in self.terms.values())) if self.terms else 1

    def __repr__(self) -> str:
        return f"MultiPoly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (sum(e), e)):
            c = self.terms[e]
            mono = "*".join(v if k == 1 else f"{v}^{k}"
                            for v, k in zip(self.variables, e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _packed_integer_terms(terms: dict, n: int) -> tuple[list, int]:
    den = lcm(*(c.denominator for c in terms.values()))
    out = []
    for e, c in terms.items():
        key = 0
        for k in e:
            if k > _MASK >> 1:
                raise OverflowError("exponent too large")
            key = (key << _FIELD) | k
        out.append((key, c.numerator * (den // c.denominator)))
    return out, den


def _unpack(key: int, n: int) -> tuple:
    e = [0] * n
    for i in range(n - 1, -1, -1):
        e[i] = key & _MASK
        key >>= _FIELD
    return tuple(e)


# functional spellings of the operations

def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def poly_diff(p: MultiPoly, var: str) -> MultiPoly:
    return p.diff(var)


def poly_integrate(p: MultiPoly, var: str, lo, hi) -> MultiPoly:
    return p.integrate(var, lo, hi)


def poly_substitute(p: MultiPoly, var: str, expr) -> MultiPoly:
    return p.substitute(var, expr)


def symbols(*names: str) -> tuple[MultiPoly, ...]:
    return tuple(MultiPoly.var(n) for n in names)


class CompiledPoly:
    """Float evaluator for a polynomial at many points at once."""

    def __init__(self, p: MultiPoly, variables: Iterable[str]):
        variables = tuple(variables)
        extra = set(p.trim().variables) - set(variables)
        if extra:
            raise KeyError(f"polynomial uses unlisted variables {sorted(extra)}")
        p = p.trim()
        idx = [variables.index(v) for v in p.variables]
        self.variables = variables
        exps = np.zeros((len(p.terms), len(variables)), dtype=np.int64)
        coef = np.zeros(len(p.terms))
        for row, (e, c) in enumerate(p.terms.items()):
            for k, pos in enumerate(idx):
                exps[row, pos] = e[k]
            coef[row] = float(c)
        self.exps = exps
        self.coef = coef

    def __call__(self, points) -> np.ndarray:
        """``points`` has shape (..., nvars); returns shape (...)."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != len(self.variables):
            raise ValueError("point dimension mismatch")
        if not len(self.coef):
            return np.zeros(pts.shape[:-1])
        mono = np.prod(pts[..., None, :] ** self.exps, axis=-1)
        return mono @ self.coef
