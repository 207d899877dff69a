"""Piecewise-polynomial interpolation kernels and their constraint systems.

A kernel of radius ``r`` and degree ``p`` is

    psi(x) = sum_j c[i][j] * (|x| - i)**j,   i = floor(|x| + delta)

with ``delta = 0`` for integer radii (even kernels, breakpoints at the
integers) and ``delta = 1/2`` for half-integer radii (odd kernels,
breakpoints at the half-integers).  The coefficient matrix is found by
exact Gaussian elimination over the linear conditions below; whatever the
conditions leave undetermined becomes a free coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .polyalg import MultiPoly, rational

X = "x"


class OverconstrainedError(ValueError):
    """The constraint set admits no kernel."""


def coeff_name(i: int, j: int) -> str:
    return f"c_{i}_{j}"


def parse_coeff_name(name: str) -> tuple[int, int]:
    _, i, j = name.split("_")
    return int(i), int(j)


@dataclass(frozen=True)
class KernelSpec:
    r: Fraction
    p: int
    smooth: bool = False

    def __post_init__(self):
        r = rational(self.r)
        object.__setattr__(self, "r", r)
        if r <= 0 or (2 * r).denominator != 1:
            raise ValueError(f"radius must be a positive integer or half-integer, got {r}")
        if self.p < 1:
            raise ValueError("degree must be at least 1")

    @property
    def parity(self) -> str:
        return "even" if self.r.denominator == 1 else "odd"

    @property
    def delta(self) -> Fraction:
        return Fraction(0) if self.r.denominator == 1 else Fraction(1, 2)

    @property
    def n_pieces(self) -> int:
        return math.ceil(self.r - 1 + self.delta) + 1

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(coeff_name(i, j) for i in range(self.n_pieces)
                     for j in range(self.p + 1))

    @property
    def label(self) -> str:
        r = str(self.r).replace("/", "_")
        return f"K_{r}_{self.p}" + ("_S" if self.smooth else "")

    def __str__(self) -> str:
        return f"K({self.r}, {self.p})" + ("S" if self.smooth else "")

    def piece_interval(self, i: int) -> tuple[Fraction, Fraction]:
        """Range of |x| covered by piece ``i``."""
        lo = max(Fraction(0), i - self.delta)
        hi = min(self.r, i + 1 - self.delta)
        return lo, hi


def parse_spec(label: str) -> KernelSpec:
    """Inverse of :attr:`KernelSpec.label`, e.g. ``K_5_2_3`` or ``K_3_4_S``."""
    parts = label.split("_")
    if parts[0] != "K":
        raise ValueError(f"not a kernel label: {label!r}")
    smooth = parts[-1] == "S"
    if smooth:
        parts = parts[:-1]
    if len(parts) == 3:
        r = Fraction(int(parts[1]))
    elif len(parts) == 4:
        r = Fraction(int(parts[1]), int(parts[2]))
    else:
        raise ValueError(f"not a kernel label: {label!r}")
    return KernelSpec(r, int(parts[-1]), smooth)


# ---------------------------------------------------------------------------
# linear systems


@dataclass
class LinearSystem:
    """Rows of ``sum(coef[name] * name) == rhs`` over the spec's unknowns."""

    spec: KernelSpec
    names: tuple[str, ...]
    rows: list[dict[str, Fraction]] = field(default_factory=list)
    rhs: list[Fraction] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def add(self, poly: MultiPoly, rhs, label: str) -> None:
        """Add ``poly == rhs`` where ``poly`` is affine in the unknowns."""
        row: dict[str, Fraction] = {}
        const = Fraction(0)
        for e, c in poly.terms.items():
            used = [v for v, k in zip(poly.variables, e) if k]
            if not used:
                const += c
            elif len(used) == 1 and sum(e) == 1:
                row[used[0]] = row.get(used[0], 0) + c
            else:
                raise ValueError(f"non-linear constraint {label}: {poly}")
        rhs = rational(rhs) - const
        if row or rhs:
            self.rows.append(row)
            self.rhs.append(rhs)
            self.labels.append(label)

    def matrix(self) -> tuple[list[list[Fraction]], list[Fraction]]:
        A = [[row.get(n, Fraction(0)) for n in self.names] for row in self.rows]
        return A, list(self.rhs)

    def residuals(self, values: Mapping[str, object]) -> list:
        out = []
        for row, b in zip(self.rows, self.rhs):
            out.append(sum(c * values[n] for n, c in row.items()) - b)
        return out


def piece_poly(spec: KernelSpec, i: int, absx: MultiPoly,
               coeffs=None) -> MultiPoly:
    """Piece ``i`` as a polynomial in whatever ``absx`` is written in."""
    shifted = absx - i
    total = MultiPoly.const(0)
    power = MultiPoly.const(1)
    for j in range(spec.p + 1):
        c = MultiPoly.var(coeff_name(i, j)) if coeffs is None else coeffs[i][j]
        total = total + power * c
        power = power * shifted
    return total


def _derivative_at(spec: KernelSpec, i: int, u: Fraction, coeffs=None) -> MultiPoly:
    """d/d|x| of piece ``i`` where ``|x| - i == u``."""
    total = MultiPoly.const(0)
    for j in range(1, spec.p + 1):
        c = MultiPoly.var(coeff_name(i, j)) if coeffs is None else coeffs[i][j]
        total = total + c * (j * u ** (j - 1))
    return total


def _value_at(spec: KernelSpec, i: int, u: Fraction, coeffs=None) -> MultiPoly:
    total = MultiPoly.const(0)
    for j in range(spec.p + 1):
        c = MultiPoly.var(coeff_name(i, j)) if coeffs is None else coeffs[i][j]
        total = total + c * (u ** j)
    return total


def fundamental_interval(spec: KernelSpec) -> tuple[Fraction, Fraction]:
    return (Fraction(0), Fraction(1)) if spec.parity == "even" else (Fraction(0), Fraction(1, 2))


def shifted_copies(spec: KernelSpec) -> list[tuple[int, int, int]]:
    """(k, sign, piece) for each psi(x - k) alive on the fundamental interval.

    On that interval ``|x - k| == sign * (x - k)`` and the argument stays in
    a single piece.
    """
    lo, hi = fundamental_interval(spec)
    mid = (lo + hi) / 2
    out = []
    k_max = math.ceil(spec.r) + 1
    for k in range(-k_max, k_max + 1):
        arg = mid - k
        if abs(arg) >= spec.r:
            continue
        sign = 1 if arg > 0 else -1
        piece = math.floor(abs(arg) + spec.delta)
        out.append((k, sign, piece))
    return out


def _reproduction_sums(spec: KernelSpec, coeffs=None) -> tuple[MultiPoly, MultiPoly]:
    x = MultiPoly.var(X)
    unity = MultiPoly.const(0)
    linear = MultiPoly.const(0)
    for k, sign, piece in shifted_copies(spec):
        term = piece_poly(spec, piece, (x - k) * sign, coeffs)
        unity = unity + term
        linear = linear + term * k
    return unity, linear


def build_constraints(spec: KernelSpec) -> LinearSystem:
    """Interpolation, continuity, partition of unity, linear reproduction,
    and (for smooth specs) C1 continuity."""
    system = LinearSystem(spec, spec.names)
    n = spec.n_pieces
    for i in range(n):
        system.add(MultiPoly.var(coeff_name(i, 0)), 1 if i == 0 else 0, f"interp[{i}]")
    # value matching at the junctions and zero at the support edge
    for i in range(n):
        right = _value_at(spec, i, spec.piece_interval(i)[1] - i)
        if i + 1 < n:
            left = _value_at(spec, i + 1, spec.piece_interval(i + 1)[0] - (i + 1))
            system.add(right - left, 0, f"C0[{i},{i + 1}]")
        else:
            system.add(right, 0, f"C0[{i},edge]")
    unity, linear = _reproduction_sums(spec)
    x = MultiPoly.var(X)
    for k, cof in enumerate(unity.univariate_coeffs(X)):
        system.add(cof, 1 if k == 0 else 0, f"unity[x^{k}]")
    for k, cof in enumerate((linear - x).univariate_coeffs(X)):
        system.add(cof, 0, f"linear[x^{k}]")
    if spec.smooth:
        for i in range(n):
            right = _derivative_at(spec, i, spec.piece_interval(i)[1] - i)
            if i + 1 < n:
                left = _derivative_at(spec, i + 1, spec.piece_interval(i + 1)[0] - (i + 1))
                system.add(right - left, 0, f"C1[{i},{i + 1}]")
            else:
                system.add(right, 0, f"C1[{i},edge]")
        system.add(MultiPoly.var(coeff_name(0, 1)), 0, "C1[origin]")
    return system


# ---------------------------------------------------------------------------
# exact elimination


def _default_priority(names: Sequence[str]) -> list[str]:
    # eliminate high (i, j) first so that low-index coefficients stay free
    return sorted(names, key=parse_coeff_name, reverse=True)


def _rref(A: list[list[Fraction]], b: list[Fraction], order: Sequence[int]):
    """Row-reduce ``[A | b]`` visiting columns in ``order``."""
    rows = [list(r) + [v] for r, v in zip(A, b)]
    pivots: list[int] = []
    r = 0
    for col in order:
        pivot = next((k for k in range(r, len(rows)) if rows[k][col]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][col]:
                f = rows[k][col]
                rows[k] = [a - f * c for a, c in zip(rows[k], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    consistent = all(row[-1] == 0 for row in rows[r:])
    return rows[:r], pivots, consistent


@dataclass(frozen=True)
class GeneralSolution:
    """Every kernel satisfying the system: ``particular + sum(t_k * basis_k)``.

    ``basis[k]`` is the direction attached to free coefficient
    ``free_names[k]``; vectors are indexed like ``names``.
    """

    spec: KernelSpec
    names: tuple[str, ...]
    particular: tuple[Fraction, ...]
    basis: tuple[tuple[Fraction, ...], ...]
    free_names: tuple[str, ...]

    @property
    def n_free(self) -> int:
        return len(self.free_names)

    @property
    def is_unique(self) -> bool:
        return not self.free_names

    def expression(self, name: str) -> list[Fraction]:
        """``[constant, coef of free_0, coef of free_1, ...]`` for ``name``."""
        k = self.names.index(name)
        return [self.particular[k]] + [vec[k] for vec in self.basis]

    def dependent_names(self) -> list[str]:
        return [n for n in self.names if n not in self.free_names
                and parse_coeff_name(n)[1] != 0]

    def table(self, names: Iterable[str] | None = None) -> list[list[Fraction]]:
        """Rows ``[const, coefs...]`` in the layout the derivation prints."""
        names = self.dependent_names() if names is None else list(names)
        return [self.expression(n) for n in names]

    def symbolic_coeffs(self) -> list[list[MultiPoly]]:
        spec = self.spec
        free = [MultiPoly.var(n) for n in self.free_names]
        out = []
        for i in range(spec.n_pieces):
            row = []
            for j in range(spec.p + 1):
                e = self.expression(coeff_name(i, j))
                poly = MultiPoly.const(e[0])
                for c, v in zip(e[1:], free):
                    if c:
                        poly = poly + v * c
                row.append(poly)
            out.append(row)
        return out

    def symbolic_kernel(self) -> "PiecewiseKernel":
        return PiecewiseKernel(self.spec, self.symbolic_coeffs())


def solve_general(system: LinearSystem,
                  free_names: Sequence[str] | None = None) -> GeneralSolution:
    """Exact general solution of a constraint system.

    ``free_names`` forces a particular parameterization; otherwise the
    lowest-indexed coefficients are kept free.  Raises
    :class:`OverconstrainedError` for an inconsistent system.
    """
    names = system.names
    A, b = system.matrix()
    if free_names is None:
        order = [names.index(n) for n in _default_priority(names)]
    else:
        unknown = set(free_names) - set(names)
        if unknown:
            raise KeyError(f"unknown coefficient names {sorted(unknown)}")
        dependents = [n for n in _default_priority(names) if n not in free_names]
        order = [names.index(n) for n in dependents] + \
                [names.index(n) for n in free_names]
    rows, pivots, consistent = _rref(A, b, order)
    if not consistent:
        raise OverconstrainedError(f"{system.spec}: constraints are inconsistent")
    free_idx = [k for k in range(len(names)) if k not in pivots]
    if free_names is not None:
        want = sorted(names.index(n) for n in free_names)
        if sorted(free_idx) != want:
            raise ValueError(
                f"{system.spec}: {list(free_names)} is not a valid set of free "
                f"coefficients (needs {len(free_idx)} free, got pivots on "
                f"{[names[k] for k in want if k in pivots]})")
        free_idx = [names.index(n) for n in free_names]
    n = len(names)
    particular = [Fraction(0)] * n
    basis = [[Fraction(0)] * n for _ in free_idx]
    for t, f in enumerate(free_idx):
        basis[t][f] = Fraction(1)
    for row, col in zip(rows, pivots):
        particular[col] = row[-1]
        for t, f in enumerate(free_idx):
            basis[t][col] = -row[f]
    return GeneralSolution(
        spec=system.spec,
        names=names,
        particular=tuple(particular),
        basis=tuple(tuple(v) for v in basis),
        free_names=tuple(names[k] for k in free_idx),
    )


def reparameterize(gs: GeneralSolution, free_names: Sequence[str]) -> GeneralSolution:
    """Same solution set expressed with a different choice of free coefficients."""
    return solve_general(build_constraints(gs.spec), free_names)


def general_solution(spec: KernelSpec, free_names: Sequence[str] | None = None) -> GeneralSolution:
    return solve_general(build_constraints(spec), free_names)


def free_variable_count(spec: KernelSpec) -> int | None:
    """Entry of the free-variable grid; ``None`` marks an overconstrained spec."""
    try:
        return general_solution(spec).n_free
    except OverconstrainedError:
        return None


# ---------------------------------------------------------------------------
# concrete kernels


class PiecewiseKernel:
    """Even piecewise-polynomial kernel, possibly with symbolic coefficients.

    ``coeffs[i][j]`` multiplies ``(|x| - i)**j`` on piece ``i``.  The spec's
    ``p`` is the column count minus one and ``r`` the support radius; the
    smoothness flag is informational only.
    """

    def __init__(self, spec: KernelSpec, coeffs, name: str | None = None,
                 exact: bool | None = None):
        rows = []
        for row in coeffs:
            if len(row) != spec.p + 1:
                raise ValueError("coefficient row length must be p + 1")
            rows.append([c if isinstance(c, MultiPoly) else MultiPoly.const(rational(c))
                         for c in row])
        if len(rows) != spec.n_pieces:
            raise ValueError(f"{spec} needs {spec.n_pieces} pieces, got {len(rows)}")
        self.spec = spec
        self.coeffs = rows
        self.name = name or spec.label
        self.exact = exact

    @property
    def r(self) -> Fraction:
        return self.spec.r

    @property
    def delta(self) -> Fraction:
        return self.spec.delta

    @cached_property
    def free_symbols(self) -> tuple[str, ...]:
        found = set()
        for row in self.coeffs:
            for c in row:
                found.update(c.free_symbols())
        return tuple(sorted(found))

    @property
    def is_symbolic(self) -> bool:
        return bool(self.free_symbols)

    def rational_coeffs(self) -> list[list[Fraction]]:
        if self.is_symbolic:
            raise ValueError(f"{self.name} has free coefficients {self.free_symbols}")
        return [[c.constant_value() for c in row] for row in self.coeffs]

    @cached_property
    def float_coeffs(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.rational_coeffs()])

    def __call__(self, x):
        return kernel_eval(self, x)

    def derivative(self, x):
        """psi'(x) (one-sided at breakpoints)."""
        c = self.float_coeffs
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        idx = np.floor(ax + float(self.delta)).astype(int)
        inside = ax < float(self.r)
        idx = np.clip(idx, 0, len(c) - 1)
        u = ax - idx
        dc = c[:, 1:] * np.arange(1, c.shape[1])
        out = np.zeros_like(u)
        for j in range(dc.shape[1] - 1, -1, -1):
            out = out * u + dc[idx, j]
        return np.where(inside, out * np.sign(x), 0.0)

    def exact_value(self, x) -> Fraction:
        x = rational(x)
        ax = abs(x)
        if ax >= self.r:
            return Fraction(0)
        i = math.floor(ax + self.delta)
        u = ax - i
        return sum((c * u ** j for j, c in enumerate(self.rational_coeffs()[i])), Fraction(0))

    def substitute(self, values: Mapping[str, object]) -> "PiecewiseKernel":
        vals = {k: rational(v) for k, v in values.items()}
        exact = all(not isinstance(v, float) for v in values.values())
        coeffs = [[c.subs(vals) for c in row] for row in self.coeffs]
        return PiecewiseKernel(self.spec, coeffs, self.name, exact)

    def __repr__(self) -> str:
        return f"PiecewiseKernel({self.name})"


def instantiate(gs: GeneralSolution, values: Mapping[str, object] | None = None,
                name: str | None = None) -> PiecewiseKernel:
    values = dict(values or {})
    missing = [n for n in gs.free_names if n not in values]
    if missing:
        raise KeyError(f"missing values for free coefficients {missing}")
    exact = all(not isinstance(values[n], (float, np.floating)) for n in gs.free_names)
    t = [rational(values[n]) for n in gs.free_names]
    coeffs = []
    for i in range(gs.spec.n_pieces):
        row = []
        for j in range(gs.spec.p + 1):
            e = gs.expression(coeff_name(i, j))
            row.append(e[0] + sum((c * v for c, v in zip(e[1:], t)), Fraction(0)))
        coeffs.append(row)
    return PiecewiseKernel(gs.spec, coeffs, name or gs.spec.label, exact)


def kernel_eval(k: PiecewiseKernel, x):
    """psi(x) for scalar or array ``x``."""
    c = k.float_coeffs
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    idx = np.clip(np.floor(ax + float(k.delta)).astype(int), 0, len(c) - 1)
    u = ax - idx
    out = np.zeros_like(u)
    for j in range(c.shape[1] - 1, -1, -1):
        out = out * u + c[idx, j]
    out = np.where(ax < float(k.r), out, 0.0)
    return float(out) if scalar else out


def constraint_residuals(k: PiecewiseKernel, smooth: bool | None = None) -> dict[str, object]:
    """Residual of every constraint equation for a concrete kernel."""
    spec = k.spec if smooth is None else KernelSpec(k.spec.r, k.spec.p, smooth)
    system = build_constraints(spec)
    values = {}
    for i, row in enumerate(k.rational_coeffs()):
        for j, c in enumerate(row):
            values[coeff_name(i, j)] = c
    return dict(zip(system.labels, system.residuals(values)))


def reproduction_polys(k: PiecewiseKernel) -> tuple[MultiPoly, MultiPoly]:
    """``sum_k psi(x-k)`` and ``sum_k k psi(x-k)`` on the fundamental interval."""
    return _reproduction_sums(k.spec, k.coeffs)


# ---------------------------------------------------------------------------
# JSON


def _fmt(c: Fraction, exact: bool) -> str:
    if exact:
        return str(c)
    return repr(float(c))


def kernel_to_json(k: PiecewiseKernel) -> dict:
    coeffs = k.rational_coeffs()
    exact = bool(k.exact) if k.exact is not None else all(
        c.denominator < 10 ** 6 for row in coeffs for c in row)
    doc = {
        "name": k.name,
        "r": str(k.r),
        "p": k.spec.p,
        "smooth": k.spec.smooth,
        "exact": exact,
        "coeffs": [[_fmt(c, exact) for c in row[1:]] for row in coeffs],
    }
    c0 = [row[0] for row in coeffs]
    if c0 != [Fraction(int(i == 0)) for i in range(len(c0))]:
        doc["c0"] = [_fmt(c, exact) for c in c0]
    return doc


def kernel_from_json(doc: Mapping) -> PiecewiseKernel:
    spec = KernelSpec(Fraction(str(doc["r"])), int(doc["p"]), bool(doc.get("smooth", False)))
    c0 = doc.get("c0") or [int(i == 0) for i in range(spec.n_pieces)]
    rows = []
    for i, row in enumerate(doc["coeffs"]):
        vals = [rational(c0[i])]
        for c in row:
            s = str(c)
            vals.append(Fraction(s) if ("/" in s or "." not in s and "e" not in s.lower())
                        else Fraction(float(s)))
        rows.append(vals)
    return PiecewiseKernel(spec, rows, doc.get("name"), doc.get("exact"))
