"""Staircasing measures for a rasterized 45-degree edge.

The edge image is ``d(i, j)``, a function of ``i - j`` only, and the
interpolant ``u`` is periodic under the shift (1, 1).  The measures
integrate over one period: the strip of unit squares
``[m - delta, m + 1 - delta] x [-delta, 1 - delta]``.  On each square every
shifted kernel copy is a single polynomial piece, so for piecewise-polynomial
kernels the integrals are computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .kernelspace import PiecewiseKernel
from .polyalg import MultiPoly, rational

S, T, THETA = "s", "t", "theta"


def edge_samples(theta, i: int, j: int):
    """Pixel value of the rasterized edge at (i, j); ``theta`` may be symbolic."""
    n = i - j
    if n < -1:
        return Fraction(0) if not isinstance(theta, MultiPoly) else MultiPoly.const(0)
    if n > 0:
        return Fraction(1) if not isinstance(theta, MultiPoly) else MultiPoly.const(1)
    if n == -1:
        return theta * theta * Fraction(1, 2)
    one_minus = 1 - theta
    return 1 - one_minus * one_minus * Fraction(1, 2)


def _edge_value(theta, n: int):
    return edge_samples(theta, n, 0)


@dataclass
class Objective:
    poly: MultiPoly
    metric: str
    theta: Fraction | None = None

    @property
    def free_names(self) -> tuple[str, ...]:
        return self.poly.free_symbols()

    @property
    def is_constant(self) -> bool:
        return self.poly.is_constant()

    def value(self, values=None) -> float:
        if self.is_constant:
            return float(self.poly.constant_value())
        return self.poly.evalf(values)


# ---------------------------------------------------------------------------
# exact path


def _offsets(r: Fraction, delta: Fraction) -> list[int]:
    # a such that psi(s + a) is not identically zero for s in [-delta, 1 - delta]
    lo = math.floor(-r - 1 + delta) + 1
    hi = math.ceil(r + delta) - 1
    return [a for a in range(lo, hi + 1) if a - delta < r and a + 1 - delta > -r]


def shifted_pieces(k: PiecewiseKernel, var: str = S) -> dict[int, MultiPoly]:
    """``psi(s + a)`` on ``s in [-delta, 1 - delta]`` for every live offset ``a``."""
    delta, r = k.delta, k.r
    s = MultiPoly.var(var)
    mid = Fraction(1, 2) - delta
    out = {}
    for a in _offsets(r, delta):
        arg = mid + a
        piece = math.floor(abs(arg) + delta)
        if arg == 0:
            # odd kernels: the square straddles the origin, so piece 0 must be even in x
            odd = [k.coeffs[0][j] for j in range(1, k.spec.p + 1, 2)]
            if any(not c.is_zero() for c in odd):
                raise ValueError(f"{k.name}: central piece has odd powers of |x|")
            sign = 1
        else:
            sign = 1 if arg > 0 else -1
        shifted = s * sign + sign * a - piece
        poly = MultiPoly.const(0)
        power = MultiPoly.const(1)
        for j in range(k.spec.p + 1):
            poly = poly + power * k.coeffs[piece][j]
            power = power * shifted
        out[a] = poly
    return out


def _square_range(offsets: list[int], margin: int = 1) -> range:
    width = max(offsets) - min(offsets)
    return range(-1 - width - margin, width + margin + 1)


def build_edge_interpolant(k: PiecewiseKernel, theta, margin: int = 1) -> dict[int, MultiPoly]:
    """``u`` on each square of the strip, in local coordinates ``s``, ``t``.

    Square ``m`` maps ``x = m + s``, ``y = t``.
    """
    theta = theta if isinstance(theta, MultiPoly) else rational(theta)
    ps = shifted_pieces(k, S)
    pt = shifted_pieces(k, T)
    offsets = sorted(ps)
    # Y[n](t) = sum_b d(n + b) psi(t + b)
    ys: dict[int, MultiPoly] = {}

    def y_sum(n: int) -> MultiPoly:
        if n not in ys:
            total = MultiPoly.const(0)
            for b in offsets:
                total = total + pt[b] * _edge_value(theta, n + b)
            ys[n] = total
        return ys[n]

    out = {}
    for m in _square_range(offsets, margin):
        u = MultiPoly.const(0)
        for a in offsets:
            u = u + ps[a] * y_sum(m - a)
        out[m] = u
    return out


def _square_gradients(k: PiecewiseKernel, theta, margin: int = 1):
    theta = theta if isinstance(theta, MultiPoly) else rational(theta)
    ps = shifted_pieces(k, S)
    pt = shifted_pieces(k, T)
    offsets = sorted(ps)
    dps = {a: p.diff(S) if S in p.variables else MultiPoly.const(0) for a, p in ps.items()}
    ys, dys = {}, {}
    for n in range(min(_square_range(offsets, margin)) - max(offsets),
                   max(_square_range(offsets, margin)) - min(offsets) + 1):
        total = MultiPoly.const(0)
        for b in offsets:
            total = total + pt[b] * _edge_value(theta, n + b)
        ys[n] = total
        dys[n] = total.diff(T) if T in total.variables else MultiPoly.const(0)
    for m in _square_range(offsets, margin):
        g = MultiPoly.const(0)
        for a in offsets:
            g = g + dps[a] * ys[m - a] + ps[a] * dys[m - a]
        yield m, g


def _integrate_square(poly: MultiPoly, delta: Fraction) -> MultiPoly:
    lo, hi = -delta, 1 - delta
    if S in poly.variables:
        poly = poly.integrate(S, lo, hi)
    else:
        poly = poly * (hi - lo)
    if T in poly.variables:
        poly = poly.integrate(T, lo, hi)
    else:
        poly = poly * (hi - lo)
    return poly


def eg_squared(k: PiecewiseKernel, theta=Fraction(1, 2), margin: int = 1) -> Objective:
    """Exact E_g^2(theta): squared diagonal derivative integrated over a period."""
    total = MultiPoly.const(0)
    for _, g in _square_gradients(k, theta, margin):
        if g.is_zero():
            continue
        total = total + _integrate_square(g * g, k.delta)
    th = None if isinstance(theta, MultiPoly) else rational(theta)
    return Objective(total, "eg_sq_at_theta", th)


def eg_squared_avg(k: PiecewiseKernel, margin: int = 1) -> Objective:
    """Exact E_g^2 averaged over edge offsets theta in [0, 1]."""
    theta = MultiPoly.var(THETA)
    poly = eg_squared(k, theta, margin).poly
    if THETA in poly.variables:
        poly = poly.integrate(THETA, 0, 1)
    return Objective(poly, "eg_sq_avg", None)


def eg_value(k: PiecewiseKernel, theta=Fraction(1, 2)) -> float:
    """E_g(theta) of a concrete kernel through the exact path."""
    return math.sqrt(eg_squared(k, theta).value())


def ed(k: PiecewiseKernel, theta) -> Objective:
    """Exact E_d(theta): squared deviation from 1/2 along the line y = x + theta."""
    theta = rational(theta)
    delta = k.delta
    tvar = MultiPoly.var("tau")
    # breakpoints of x = tau and y = tau + theta against the square grid
    cuts = {Fraction(0), Fraction(1)}
    for g in range(-2, 4):
        for b in (g - delta, g - delta - theta):
            if 0 < b < 1:
                cuts.add(b)
    cuts = sorted(cuts)
    ps = shifted_pieces(k, S)
    pt = shifted_pieces(k, T)
    offsets = sorted(ps)
    total = MultiPoly.const(0)
    for lo, hi in zip(cuts, cuts[1:]):
        mid = (lo + hi) / 2
        mx = math.floor(mid + delta)
        my = math.floor(mid + theta + delta)
        # u depends on mx - my only; local coordinates relative to each square
        u = MultiPoly.const(0)
        for a in offsets:
            for b in offsets:
                d = _edge_value(theta, mx - my - a + b)
                if d:
                    u = u + ps[a] * pt[b] * d
        line = u.subs({S: tvar - mx, T: tvar + theta - my}) if not u.is_constant() else u
        dev = line - Fraction(1, 2)
        sq = dev * dev
        if "tau" in sq.variables:
            total = total + sq.integrate("tau", lo, hi)
        else:
            total = total + sq * (hi - lo)
    return Objective(total, "ed_at_theta", theta)


# ---------------------------------------------------------------------------
# numeric path


@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 16
    fd_step: float = 1e-5


def _central_difference(kfn: Callable, h: float) -> Callable:
    def deriv(x):
        return (np.asarray(kfn(x + h)) - np.asarray(kfn(x - h))) / (2 * h)
    return deriv


def eg_numeric(kfn: Callable, r_eff: float, theta: float = 0.5,
               quad: QuadratureConfig = QuadratureConfig(),
               dkfn: Callable | None = None, delta: float = 0.0,
               k_max: int | None = None) -> float:
    """E_g(theta) of an arbitrary even kernel by Gauss-Legendre quadrature.

    ``delta`` aligns the unit squares with the kernel's breakpoints (1/2 when
    they sit at half-integers).  The period is covered by square pairs
    ``k = -k_max .. k_max`` (squares ``m = 2k, 2k + 1``), ``k_max`` defaulting
    to ``ceil(r_eff)``.  Kernels that reproduce constants have no gradient
    outside that range; for those that do not (Lanczos, truncated sinc) the
    constant-side ripple makes the value depend on ``k_max``.
    """
    if dkfn is None:
        dkfn = _central_difference(kfn, quad.fd_step)
    if k_max is None:
        k_max = math.ceil(r_eff)
    delta = float(delta)
    nodes, weights = np.polynomial.legendre.leggauss(quad.order)
    s = (nodes + 1) / 2 - delta
    w = weights / 2
    offsets = np.array(_offsets(Fraction(math.ceil(2 * r_eff), 2), Fraction(delta)))
    arg = s[None, :] + offsets[:, None].astype(float)
    P = np.asarray(kfn(arg), dtype=float)
    dP = np.asarray(dkfn(arg), dtype=float)
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(dP))):
        raise ValueError("kernel produced non-finite values")
    v_minus = float(_edge_value(float(theta), -1))
    v_zero = float(_edge_value(float(theta), 0))
    spread = offsets[None, :] - offsets[:, None]  # b - a
    total = []
    for m in range(-2 * k_max, 2 * k_max + 2):
        n = m + spread
        # D[a, b] = d(m - a + b)
        D = np.where(n > 0, 1.0, 0.0) + np.where(n == 0, v_zero, 0.0) + np.where(n == -1, v_minus, 0.0)
        grad = dP.T @ D @ P + P.T @ D @ dP
        total.append(w @ (grad ** 2) @ w)
    return math.sqrt(math.fsum(total))


def eg_reference(k, theta: float = 0.5, quad: QuadratureConfig = QuadratureConfig(),
                 k_max: int | None = None) -> float:
    """Numeric E_g for a zoo kernel (anything with radius/delta/derivative)."""
    dkfn = getattr(k, "derivative", None)
    return eg_numeric(k, float(k.radius), theta, quad, dkfn, float(k.delta), k_max)
