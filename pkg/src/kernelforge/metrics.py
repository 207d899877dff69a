"""Zone plate test pattern and image comparison measures."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy import ndimage

from .polyalg import rational
from .resample import ResamplePlan, kernel_radius, prefilter_horizon, resample_2d
from .zoo import bspline_pole

ZONE_F = 6.0
SOURCE_DX = Fraction(1, 30)
TARGET_DX = Fraction(1, 360)

_S12 = math.sqrt(12.0)
SCHARR_X = np.array([[-1.0, 0.0, 1.0], [-_S12, 0.0, _S12], [-1.0, 0.0, 1.0]]) / (2 * (2 + _S12))
SCHARR_Y = SCHARR_X.T


def zone_plate(n: int | None = None, F: float = ZONE_F, dx=SOURCE_DX,
               endpoints: bool = True) -> np.ndarray:
    """``(1 + cos(2 pi F (x^2 + y^2))) / 2`` sampled at ``(i dx, j dx)``.

    With ``endpoints`` the grid covers ``[0, 1]`` inclusive (``1/dx + 1``
    samples per axis); otherwise ``1/dx`` samples starting at 0.
    """
    dx = rational(dx)
    if n is None:
        n = int(1 / dx) + (1 if endpoints else 0)
    x = np.arange(n) * float(dx)
    r2 = x[None, :] ** 2 + x[:, None] ** 2
    return (1 + np.cos(2 * np.pi * F * r2)) / 2


def zone_plate_source(F: float = ZONE_F, dx=SOURCE_DX, endpoints: bool = True,
                      margin: int = 0) -> np.ndarray:
    """Source grid, optionally with ``margin`` extra true samples on every side."""
    dx = rational(dx)
    n = int(1 / dx) + (1 if endpoints else 0)
    x = np.arange(-margin, n + margin) * float(dx)
    r2 = x[None, :] ** 2 + x[:, None] ** 2
    return (1 + np.cos(2 * np.pi * F * r2)) / 2


def zone_plate_experiment(kernel, boundary: str = "analytic", F: float = ZONE_F,
                          endpoints: bool = True, src_dx=SOURCE_DX, dst_dx=TARGET_DX,
                          margin: int | None = None) -> dict:
    """Upscale the zone plate from ``src_dx`` to ``dst_dx`` and compare to truth.

    ``analytic`` feeds the kernel true pattern samples beyond the unit square
    (``margin`` of them, see :func:`default_margin`); the other
    boundary names extend the unit-square samples by that policy instead.
    """
    src_dx, dst_dx = rational(src_dx), rational(dst_dx)
    scale = src_dx / dst_dx
    n_src = int(1 / src_dx) + (1 if endpoints else 0)
    n_dst = int((n_src - 1) * scale) + 1 if endpoints else int(n_src * scale)
    truth = zone_plate(n_dst, F, dst_dx)
    if boundary == "analytic":
        if margin is None:
            margin = default_margin(kernel)
        src = zone_plate_source(F, src_dx, endpoints, margin)
        plan = ResamplePlan(kernel, scale, margin, "replicate", size=n_dst)
    else:
        src = zone_plate_source(F, src_dx, endpoints)
        plan = ResamplePlan(kernel, scale, 0, boundary, size=n_dst)
    out = resample_2d(src, plan)
    crop = int(math.ceil(_radius(kernel)) * scale)
    return {
        "image": out,
        "truth": truth,
        "rmse": rmse(out, truth),
        "rmse_interior": rmse(out, truth, crop),
        "gcs": gcs(truth, out),
        "gcs_interior": gcs(truth, out, crop=1),
        "crop": crop,
        "scale": scale,
    }


def default_margin(kernel) -> int:
    """True samples needed past the unit square for an exact-support result."""
    degree = getattr(kernel, "spline_degree", None)
    if degree is not None:
        # the prefilter reaches as far as its impulse response is significant
        return prefilter_horizon(bspline_pole(degree))
    return int(math.ceil(_radius(kernel))) + 1


def _radius(kernel) -> float:
    radius = kernel_radius(kernel)
    # explicit B-spline expansions are long but are resampled via the prefilter
    degree = getattr(kernel, "spline_degree", None)
    return (degree + 1) / 2 if degree is not None else radius


def _same_shape(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def _crop(a: np.ndarray, crop: int) -> np.ndarray:
    if crop <= 0:
        return a
    if 2 * crop >= min(a.shape):
        raise ValueError("crop removes the whole image")
    return a[crop:-crop, crop:-crop]


def rmse(a, b, crop: int = 0) -> float:
    a, b = _same_shape(a, b)
    d = _crop(a - b, crop)
    return float(np.sqrt(np.mean(d * d)))


def scharr_gradients(img) -> tuple[np.ndarray, np.ndarray]:
    """Scharr ``(gx, gy)`` by 3x3 correlation with replicated borders."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2 or min(img.shape) < 3:
        raise ValueError("image must be 2D and at least 3x3")
    gx = ndimage.correlate(img, SCHARR_X, mode="nearest")
    gy = ndimage.correlate(img, SCHARR_Y, mode="nearest")
    return gx, gy


def gradient_magnitude(img) -> np.ndarray:
    gx, gy = scharr_gradients(img)
    return np.hypot(gx, gy)


def gcs(a, b, crop: int = 0) -> float:
    """Cosine similarity of the Scharr gradient fields of two images."""
    a, b = _same_shape(a, b)
    ax, ay = (_crop(g, crop) for g in scharr_gradients(a))
    bx, by = (_crop(g, crop) for g in scharr_gradients(b))
    na = math.sqrt(float(np.sum(ax * ax + ay * ay)))
    nb = math.sqrt(float(np.sum(bx * bx + by * by)))
    if na == 0 or nb == 0:
        raise ValueError("zero gradient field")
    return float(np.sum(ax * bx + ay * by)) / (na * nb)


def standardize_scores(raw: Mapping[str, float], higher_better: bool,
                       ground_truth_value: float) -> dict[str, float]:
    """Rescale so the worst kernel maps to 0 and the ground truth to 100."""
    if len(raw) < 2:
        raise ValueError("need at least two kernels")
    worst = min(raw.values()) if higher_better else max(raw.values())
    span = ground_truth_value - worst
    if span == 0:
        raise ValueError("degenerate score range")
    return {k: 100.0 * (v - worst) / span for k, v in raw.items()}
