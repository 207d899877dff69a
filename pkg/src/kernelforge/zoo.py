"""Reference interpolation kernels in a uniform wrapper.

Piecewise-polynomial kernels carry exact rational coefficients and can go
through the exact staircasing path; the rest (Lanczos, interpolating
B-splines, truncated sinc) are analytic callables with an effective
radius.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .kernelspace import (KernelSpec, PiecewiseKernel, general_solution,
                          instantiate, kernel_from_json, parse_spec)
from .polyalg import MultiPoly

DEFAULT_BSPLINE_TRUNCATION = 20


@dataclass
class ReferenceKernel:
    name: str
    form: str  # "piecewise" or "analytic"
    interpolating: bool
    radius: float
    delta: float
    piecewise: PiecewiseKernel | None = None
    fn: Callable | None = None
    dfn: Callable | None = None
    spline_degree: int | None = None  # set for interpolating B-splines

    def __call__(self, x):
        if self.piecewise is not None:
            return self.piecewise(x)
        return self.fn(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.piecewise is not None:
            return self.piecewise.derivative(x)
        return self.dfn(np.asarray(x, dtype=float))


def wrap(k: PiecewiseKernel, interpolating: bool = True, name: str | None = None) -> ReferenceKernel:
    return ReferenceKernel(name or k.name, "piecewise", interpolating, float(k.r),
                           float(k.delta), piecewise=k)


# ---------------------------------------------------------------------------
# piecewise-polynomial kernels


def _from_power_basis(r: int, p: int, pieces: list[list[Fraction]], name: str,
                      scale=Fraction(1)) -> PiecewiseKernel:
    """Convert ``sum a_j |x|**j`` per piece into the ``(|x| - i)**j`` basis."""
    spec = KernelSpec(r, p, False)
    u = MultiPoly.var("u")
    rows = []
    for i, coeffs in enumerate(pieces):
        poly = MultiPoly.univariate("x", coeffs).substitute("x", u + i)
        cs = poly.univariate_coeffs("u") if "u" in poly.variables else [poly]
        row = [(cs[j].constant_value() if j < len(cs) else Fraction(0)) * scale
               for j in range(p + 1)]
        rows.append(row)
    return PiecewiseKernel(spec, rows, name, exact=True)


def nearest() -> PiecewiseKernel:
    return PiecewiseKernel(KernelSpec(Fraction(1, 2), 1), [[1, 0]], "nearest", exact=True)


def linear() -> PiecewiseKernel:
    return instantiate(general_solution(KernelSpec(1, 1)), {}, "linear")


def keys_cubic() -> PiecewiseKernel:
    rows = [[1, 0, Fraction(-5, 2), Fraction(3, 2)],
            [0, Fraction(-1, 2), 1, Fraction(-1, 2)]]
    return PiecewiseKernel(KernelSpec(2, 3, True), rows, "keys_cubic", exact=True)


def keys_33() -> PiecewiseKernel:
    m = [[0, -28, 16], [-8, 15, -7], [1, -2, 1]]
    rows = [[int(i == 0)] + [Fraction(v, 12) for v in row] for i, row in enumerate(m)]
    return PiecewiseKernel(KernelSpec(3, 3, True), rows, "keys_33", exact=True)


def lagrange(r: int) -> PiecewiseKernel:
    """Local Lagrange interpolation over ``2r`` nodes as a kernel of degree ``2r - 1``."""
    if int(r) != r or r < 1:
        raise ValueError("Lagrange kernels are continuous only for integer r")
    r = int(r)
    p = 2 * r - 1
    u = MultiPoly.var("u")
    rows = []
    for i in range(r):
        # on [i, i+1) the weight of sample 0 is the basis polynomial of node 0
        # over nodes i-r+1 .. i+r, written in u = x - i
        poly = MultiPoly.const(1)
        for node in range(i - r + 1, i + r + 1):
            if node != 0:
                poly = poly * (u + (i - node)) * Fraction(1, -node)
        cs = poly.univariate_coeffs("u")
        rows.append([cs[j].constant_value() if j < len(cs) else Fraction(0)
                     for j in range(p + 1)])
    return PiecewiseKernel(KernelSpec(r, p), rows, f"lagrange_{r}", exact=True)


def schaum() -> PiecewiseKernel:
    x = MultiPoly.var("x")
    p0 = (1 - x) * (5 + 4 * x - 5 * x * x) * 3
    p1 = (2 - x) * (1 - x) * (12 - 5 * x)
    pieces = [[c.constant_value() for c in p.univariate_coeffs("x")] for p in (p0, p1)]
    return _from_power_basis(2, 3, pieces, "schaum", Fraction(1, 15))


def mitchell_netravali() -> PiecewiseKernel:
    pieces = [[16, 0, -36, 21], [32, -60, 36, -7]]
    return _from_power_basis(2, 3, pieces, "mitchell_netravali", Fraction(1, 18))


def bspline_piecewise(p: int) -> PiecewiseKernel:
    """Centred B-spline of degree 2 or 3 as an exact piecewise kernel."""
    if p == 2:
        rows = [[Fraction(3, 4), 0, -1],
                [Fraction(1, 8), Fraction(-1, 2), Fraction(1, 2)]]
        return PiecewiseKernel(KernelSpec(Fraction(3, 2), 2), rows, "bspline_2", exact=True)
    if p == 3:
        pieces = [[Fraction(2, 3), 0, -1, Fraction(1, 2)],
                  [Fraction(4, 3), -2, 1, Fraction(-1, 6)]]
        return _from_power_basis(2, 3, pieces, "bspline_3")
    raise ValueError("only degrees 2 and 3")


# ---------------------------------------------------------------------------
# analytic kernels


def _dsinc(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    nz = x != 0
    xn = x[nz]
    out[nz] = (np.cos(np.pi * xn) - np.sinc(xn)) / xn
    return out


def lanczos(r: int) -> ReferenceKernel:
    r = int(r)

    def fn(x):
        return np.where(np.abs(x) < r, np.sinc(x) * np.sinc(x / r), 0.0)

    def dfn(x):
        return np.where(np.abs(x) < r,
                        _dsinc(x) * np.sinc(x / r) + np.sinc(x) * _dsinc(x / r) / r, 0.0)

    return ReferenceKernel(f"lanczos_{r}", "analytic", True, float(r), 0.0, fn=fn, dfn=dfn)


def sinc_trunc(radius: int) -> ReferenceKernel:
    radius = int(radius)

    def fn(x):
        return np.where(np.abs(x) < radius, np.sinc(x), 0.0)

    def dfn(x):
        return np.where(np.abs(x) < radius, _dsinc(x), 0.0)

    return ReferenceKernel(f"sinc_{radius}", "analytic", True, float(radius), 0.0, fn=fn, dfn=dfn)


def bspline(x, p: int):
    """Centred B-spline of degree ``p`` (truncated-power formula)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    h = (p + 1) / 2
    for k in range(p + 2):
        out += (-1) ** k * math.comb(p + 1, k) * np.maximum(x + h - k, 0.0) ** p
    out /= math.factorial(p)
    return np.where(np.abs(x) < h, out, 0.0)


def bspline_pole(p: int) -> float:
    if p == 2:
        return 2 * math.sqrt(2) - 3
    if p == 3:
        return math.sqrt(3) - 2
    raise ValueError("only degrees 2 and 3")


def bspline_weights(p: int, truncation: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets ``k`` and weights of the interpolating expansion, ``|k| <= truncation``."""
    z = bspline_pole(p)
    gain = math.sqrt(2) if p == 2 else math.sqrt(3)
    ks = np.arange(-truncation, truncation + 1)
    return ks, gain * z ** np.abs(ks)


def bspline_tail_weight(p: int, truncation: int) -> float:
    """Total absolute weight dropped by truncating the expansion."""
    z = abs(bspline_pole(p))
    gain = math.sqrt(2) if p == 2 else math.sqrt(3)
    return 2 * gain * z ** (truncation + 1) / (1 - z)


def bspline_interp(p: int, truncation: int = DEFAULT_BSPLINE_TRUNCATION) -> ReferenceKernel:
    ks, w = bspline_weights(p, truncation)

    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(w, bspline(x[None, ...] - ks.reshape((-1,) + (1,) * x.ndim), p), axes=1)

    def dfn(x):
        x = np.asarray(x, dtype=float)
        shifted = x[None, ...] - ks.reshape((-1,) + (1,) * x.ndim)
        d = bspline(shifted + 0.5, p - 1) - bspline(shifted - 0.5, p - 1)
        return np.tensordot(w, d, axes=1)

    radius = truncation + (p + 1) / 2
    delta = 0.5 if p % 2 == 0 else 0.0
    return ReferenceKernel(f"bspline_{p}", "analytic", True, radius, delta, fn=fn, dfn=dfn,
                           spline_degree=p)


# ---------------------------------------------------------------------------
# kernels from the optimizer


def rational_approx_k24s() -> PiecewiseKernel:
    m = [[0, -7, 0, 3], [-2, 1, 4, -3]]
    rows = [[int(i == 0)] + [Fraction(v, 4) for v in row] for i, row in enumerate(m)]
    return PiecewiseKernel(KernelSpec(2, 4, True), rows, "K_2_4_S_approx", exact=True)


def optimized_kernel(label: str, metric: str = "eg_half") -> PiecewiseKernel:
    from .optimizer import optimized

    if label == "K_2_4_S_approx":
        return rational_approx_k24s()
    return optimized(parse_spec(label), metric).kernel


# ---------------------------------------------------------------------------
# lookup


def reference_kernel(name: str, *params) -> ReferenceKernel:
    """Build a kernel by name; parameters may also be given as ``name:a:b``."""
    if ":" in name and not params:
        head, *rest = name.split(":")
        if head in ("optimized", "file"):
            return reference_kernel(head, ":".join(rest))
        return reference_kernel(head, *rest)
    key = name.lower().replace("-", "_")
    if key == "nearest":
        return wrap(nearest(), True)
    if key == "linear":
        return wrap(linear())
    if key in ("keys", "keys_cubic"):
        return wrap(keys_cubic())
    if key in ("keys33", "keys_33"):
        return wrap(keys_33())
    if key == "lanczos":
        return lanczos(int(params[0]) if params else 2)
    if key == "lagrange":
        return wrap(lagrange(int(params[0]) if params else 2))
    if key == "schaum":
        return wrap(schaum())
    if key in ("mn", "mitchell_netravali", "mitchell"):
        return wrap(mitchell_netravali(), interpolating=False)
    if key == "bspline":
        p = int(params[0]) if params else 3
        trunc = int(params[1]) if len(params) > 1 else DEFAULT_BSPLINE_TRUNCATION
        return bspline_interp(p, trunc)
    if key in ("sinc", "sinc_trunc"):
        return sinc_trunc(int(params[0]) if params else 20)
    if key == "optimized":
        return wrap(optimized_kernel(str(params[0])))
    if key == "file":
        doc = json.loads(Path(params[0]).read_text())
        return wrap(kernel_from_json(doc.get("kernel", doc)))
    if name.startswith("K_"):
        return wrap(optimized_kernel(name))
    if name.endswith(".json") and Path(name).exists():
        return reference_kernel("file", name)
    raise KeyError(f"unknown kernel {name!r}")


# benchmark rows: display label -> selector
BENCHMARK_KERNELS = {
    "Linear": "linear",
    "K_(3/2,2)": "K_3_2_2",
    "K_(3/2,4)": "K_3_2_4",
    "K_(3/2,4)_S": "K_3_2_4_S",
    "K_(2,2)": "K_2_2",
    "K_(2,3)": "K_2_3",
    "Lg_(2,3)": "lagrange:2",
    "Sc_(2,3)": "schaum",
    "K_(2,3)_S": "K_2_3_S",
    "MN_(2,3)": "mitchell_netravali",
    "K_(2,4)": "K_2_4",
    "K_(2,4)_S": "K_2_4_S",
    "Ls_2": "lanczos:2",
    "K_(5/2,2)": "K_5_2_2",
    "K_(5/2,3)": "K_5_2_3",
    "K_(5/2,3)_S": "K_5_2_3_S",
    "K_(5/2,4)": "K_5_2_4",
    "K_(5/2,4)_S": "K_5_2_4_S",
    "K_(3,2)": "K_3_2",
    "K_(3,3)": "K_3_3",
    "K_(3,3)_S": "K_3_3_S",
    "Ks_(3,3)": "keys33",
    "K_(3,4)": "K_3_4",
    "K_(3,4)_S": "K_3_4_S",
    "Lg_(3,5)": "lagrange:3",
    "Ls_3": "lanczos:3",
    "beta*_2": "bspline:2",
    "beta*_3": "bspline:3",
}


def partition_unity_ripple(k, grid: int = 10001) -> float:
    """max |sum_k psi(x - k) - 1| over one period."""
    x = np.linspace(0.0, 1.0, grid)
    R = int(math.ceil(_radius(k))) + 1
    total = np.zeros_like(x)
    for s in range(-R, R + 1):
        total += np.asarray(k(x - s))
    return float(np.max(np.abs(total - 1.0)))


def _radius(k) -> float:
    if isinstance(k, ReferenceKernel):
        return k.radius
    if isinstance(k, PiecewiseKernel):
        return float(k.r)
    return float(getattr(k, "radius"))


def kernel_sup_distance(a, b, grid: int = 10001) -> float:
    """max |psi_a - psi_b| on a uniform grid over the union of the supports."""
    R = max(_radius(a), _radius(b))
    x = np.linspace(-R, R, grid)
    return float(np.max(np.abs(np.asarray(a(x)) - np.asarray(b(x)))))


def polynomial_reproduction(k: PiecewiseKernel, degree: int) -> MultiPoly:
    """``sum_m m**degree psi(x - m) - x**degree`` on the fundamental interval."""
    from .kernelspace import piece_poly, shifted_copies

    x = MultiPoly.var("x")
    total = MultiPoly.const(0)
    for m, sign, piece in shifted_copies(k.spec):
        total = total + piece_poly(k.spec, piece, (x - m) * sign, k.coeffs) * (Fraction(m) ** degree)
    return total - x ** degree
