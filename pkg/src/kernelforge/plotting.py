"""Figures written to files: kernel profiles, zone plates, gradient fields."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import gradient_magnitude  # noqa: E402
from .resample import kernel_radius  # noqa: E402

_DPI = 120
# metadata that would otherwise embed a timestamp
_PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = _PNG_META if path.suffix.lower() == ".png" else None
    fig.savefig(path, dpi=_DPI, bbox_inches="tight", metadata=meta)
    plt.close(fig)
    return path


def plot_kernels(kernels: Mapping[str, object], path, samples: int = 1201) -> Path:
    """Overlay kernel profiles on their common support."""
    R = max(kernel_radius(k) if getattr(k, "spline_degree", None) is None
            else (k.spline_degree + 1) / 2 + 2 for k in kernels.values())
    x = np.linspace(-R, R, samples)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for name, k in kernels.items():
        ax.plot(x, np.asarray(k(x), dtype=float), lw=1.2, label=name)
    ax.axhline(0, color="0.6", lw=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("psi(x)")
    ax.set_xlim(-R, R)
    ax.legend(fontsize=8, frameon=False)
    return _save(fig, path)


def plot_image(img: np.ndarray, path, title: str | None = None, cmap: str = "gray") -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(img, cmap=cmap, origin="lower", interpolation="nearest", vmin=0, vmax=1)
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def isoline_segments(field: np.ndarray, levels: Sequence[float]) -> list[tuple[float, int, np.ndarray]]:
    """Contour vertices ``(level, piece, xy)`` of a 2D field."""
    fig, ax = plt.subplots()
    cs = ax.contour(field, levels=sorted(levels))
    out = []
    for level, segs in zip(cs.levels, cs.allsegs):
        for i, seg in enumerate(segs):
            out.append((float(level), i, np.asarray(seg)))
    plt.close(fig)
    return out


def write_isolines_csv(segments, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "piece", "x", "y"])
        for level, piece, xy in segments:
            for x, y in xy:
                w.writerow([f"{level:.6g}", piece, f"{x:.6f}", f"{y:.6f}"])
    return path


def plot_gradient_field(img: np.ndarray, path, levels: Sequence[float] | None = None,
                        title: str | None = None) -> tuple[Path, list]:
    """Gradient magnitude with marked isolines; returns the isoline data too."""
    mag = gradient_magnitude(img)
    if levels is None:
        top = float(mag.max())
        levels = [top * f for f in (0.25, 0.5, 0.75)] if top > 0 else []
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(mag, cmap="viridis", origin="lower", interpolation="nearest")
    segs = []
    if levels:
        ax.contour(mag, levels=sorted(levels), colors="w", linewidths=0.6)
        segs = isoline_segments(mag, levels)
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)
    return _save(fig, path), segs
