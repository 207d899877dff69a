"""Separable resampling by kernel convolution.

Sample ``m`` sits at position ``m``; output sample ``n`` is taken at
``x_src = n / scale + phase``.  Signals are extended past their ends by a
boundary policy, and interpolating B-splines go through an exact recursive
prefilter instead of their truncated explicit kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polyalg import rational
from .zoo import bspline, bspline_pole

BOUNDARIES = ("replicate", "reflect", "zero")
PREFILTER_EPS = 1e-14


def kernel_radius(kernel) -> float:
    for attr in ("radius", "r"):
        if hasattr(kernel, attr):
            return float(getattr(kernel, attr))
    raise TypeError("kernel has no radius")


@dataclass(frozen=True)
class ResamplePlan:
    kernel: object
    scale: Fraction = Fraction(1)
    phase: Fraction = Fraction(0)
    boundary: str = "replicate"
    size: int | None = None  # output length; default keeps the span [0, N - 1]
    prefilter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scale", rational(self.scale))
        object.__setattr__(self, "phase", rational(self.phase))
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")

    def output_length(self, n: int) -> int:
        if self.size is not None:
            return int(self.size)
        return math.floor((n - 1 - self.phase) * self.scale) + 1

    def positions(self, n: int) -> np.ndarray:
        m = self.output_length(n)
        # exact rational positions, then one rounding
        return np.array([float(Fraction(i) / self.scale + self.phase) for i in range(m)])


def extend_index(idx: np.ndarray, n: int, boundary: str) -> tuple[np.ndarray, np.ndarray]:
    """Map indices onto ``0..n-1``; the mask is False where the value is zero."""
    idx = np.asarray(idx)
    if boundary == "replicate":
        return np.clip(idx, 0, n - 1), np.ones(idx.shape, dtype=bool)
    if boundary == "reflect":
        if n == 1:
            return np.zeros_like(idx), np.ones(idx.shape, dtype=bool)
        period = 2 * (n - 1)
        j = np.mod(idx, period)
        return np.where(j >= n, period - j, j), np.ones(idx.shape, dtype=bool)
    if boundary == "zero":
        inside = (idx >= 0) & (idx < n)
        return np.clip(idx, 0, n - 1), inside
    raise ValueError(f"unknown boundary {boundary!r}")


def weight_matrix(kernel, n_in: int, positions: np.ndarray, boundary: str,
                  radius: float | None = None) -> np.ndarray:
    """Dense ``(len(positions), n_in)`` matrix of kernel weights."""
    r = kernel_radius(kernel) if radius is None else radius
    lo = np.ceil(positions - r).astype(int)
    width = int(math.floor(2 * r)) + 2
    taps = lo[:, None] + np.arange(width)[None, :]
    w = np.asarray(kernel(positions[:, None] - taps), dtype=float)
    if not np.all(np.isfinite(w)):
        raise FloatingPointError("kernel produced non-finite weights")
    idx, mask = extend_index(taps, n_in, boundary)
    W = np.zeros((len(positions), n_in))
    rows = np.broadcast_to(np.arange(len(positions))[:, None], taps.shape)
    np.add.at(W, (rows[mask], idx[mask]), w[mask])
    return W


def _pad_mode(boundary: str) -> str:
    return {"replicate": "edge", "reflect": "reflect", "zero": "constant"}[boundary]


def prefilter_horizon(z: float, n: int | None = None) -> int:
    """Terms until ``|z|**k`` drops below the prefilter tolerance, capped at ``n``."""
    h = math.ceil(math.log(PREFILTER_EPS) / math.log(abs(z)))
    return h if n is None else min(n, h)


def _mirror_prefilter(c: np.ndarray, z: float, axis: int) -> np.ndarray:
    c = np.moveaxis(np.array(c, dtype=float), axis, 0)
    n = c.shape[0]
    if n == 1:
        return np.moveaxis(c, 0, axis)
    c = c * ((1 - z) * (1 - 1 / z))
    horizon = prefilter_horizon(z)
    if horizon <= n:
        c[0] = np.tensordot(z ** np.arange(horizon), c[:horizon], axes=1)
    else:
        # short signal: sum the mirrored geometric series in closed form
        k = np.arange(n)
        w = z ** k + np.where((k > 0) & (k < n - 1), z ** (2 * n - 2 - k), 0.0)
        c[0] = np.tensordot(w, c, axes=1) / (1 - z ** (2 * n - 2))
    for k in range(1, n):
        c[k] = c[k] + z * c[k - 1]
    c[n - 1] = (z / (z * z - 1)) * (c[n - 1] + z * c[n - 2])
    for k in range(n - 2, -1, -1):
        c[k] = z * (c[k + 1] - c[k])
    return np.moveaxis(c, 0, axis)


def bspline_prefilter(signal, p: int, boundary: str = "reflect", axis: int = -1) -> np.ndarray:
    """B-spline coefficients ``c`` with ``sum_k c[k] beta_p(m - k) = s[m]``.

    ``reflect`` treats the signal as mirror-symmetric about its end samples
    and is exact there.  Other policies pad the signal by the filter horizon
    first, so the coefficients belong to the extended signal.
    """
    if p not in (2, 3):
        raise ValueError("only degrees 2 and 3")
    s = np.asarray(signal, dtype=float)
    z = bspline_pole(p)
    if boundary == "reflect":
        return _mirror_prefilter(s, z, axis)
    pad = prefilter_horizon(z)
    widths = [(0, 0)] * s.ndim
    widths[axis % s.ndim] = (pad, pad)
    padded = np.pad(s, widths, mode=_pad_mode(boundary))
    c = _mirror_prefilter(padded, z, axis)
    return np.take(c, range(pad, pad + s.shape[axis]), axis=axis)


def _bspline_kernel(p: int):
    def fn(x):
        return bspline(x, p)
    fn.radius = (p + 1) / 2
    return fn


def _apply_axis(data: np.ndarray, plan: ResamplePlan, axis: int) -> np.ndarray:
    n = data.shape[axis]
    pos = plan.positions(n)
    degree = getattr(plan.kernel, "spline_degree", None)
    if degree is not None and plan.prefilter:
        # coefficients on a padded grid so the B-spline never sees the boundary
        pad = prefilter_horizon(bspline_pole(degree)) + degree + 2
        widths = [(0, 0)] * data.ndim
        widths[axis] = (pad, pad)
        ext = np.pad(data, widths, mode=_pad_mode(plan.boundary))
        coeffs = bspline_prefilter(ext, degree, "reflect", axis=axis)
        W = weight_matrix(_bspline_kernel(degree), ext.shape[axis], pos + pad, plan.boundary,
                          radius=(degree + 1) / 2)
        src = coeffs
    else:
        W = weight_matrix(plan.kernel, n, pos, plan.boundary)
        src = data
    out = np.tensordot(W, np.moveaxis(src, axis, 0), axes=1)
    out = np.moveaxis(out, 0, axis)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite output")
    return out


def resample_1d(signal, plan: ResamplePlan) -> np.ndarray:
    s = np.asarray(signal, dtype=float)
    if s.ndim != 1:
        raise ValueError("expected a 1D signal")
    return _apply_axis(s, plan, 0)


def resample_2d(image, plan: ResamplePlan, plan_y: ResamplePlan | None = None,
                order: str = "rows-first") -> np.ndarray:
    """Separable 2D resampling: along rows (x), then along columns (y)."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2D image")
    plan_y = plan if plan_y is None else plan_y
    if order == "rows-first":
        return _apply_axis(_apply_axis(img, plan, 1), plan_y, 0)
    if order == "columns-first":
        return _apply_axis(_apply_axis(img, plan_y, 0), plan, 1)
    raise ValueError(f"unknown order {order!r}")


def resample_direct(image, plan: ResamplePlan) -> np.ndarray:
    """Brute-force double sum ``sum_{m,n} s(m, n) psi(x - m) psi(y - n)``."""
    img = np.asarray(image, dtype=float)
    h, w = img.shape
    xs, ys = plan.positions(w), plan.positions(h)
    r = kernel_radius(plan.kernel)
    out = np.zeros((len(ys), len(xs)))
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            total = 0.0
            for m in range(math.ceil(y - r), math.floor(y + r) + 1):
                wy = float(plan.kernel(np.array(y - m)))
                if wy == 0.0:
                    continue
                mi, ok_y = extend_index(np.array(m), h, plan.boundary)
                if not ok_y:
                    continue
                for n in range(math.ceil(x - r), math.floor(x + r) + 1):
                    ni, ok_x = extend_index(np.array(n), w, plan.boundary)
                    if ok_x:
                        total += img[int(mi), int(ni)] * wy * float(plan.kernel(np.array(x - n)))
            out[i, j] = total
    return out
