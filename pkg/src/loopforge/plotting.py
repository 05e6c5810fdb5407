"""Static figures for CLI reports, rendered off-screen to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_pieces", "plot_ladder", "plot_dilation", "plot_field_slice"]


def _save(fig, path, tag=None):
    meta = {"Software": "loopforge"}
    if tag:
        meta["Description"] = tag
    fig.savefig(path, dpi=110, metadata=meta)
    plt.close(fig)


def plot_pieces(pieces, path, title="", tag=None):
    """Pieces of a surgery decomposition, projected on the first two axes."""
    fig, ax = plt.subplots(figsize=(5, 5))
    cmap = plt.get_cmap("tab20")
    for i, p in enumerate(pieces):
        pts = np.asarray(p.nodes)
        if p.closed:
            pts = np.vstack([pts, pts[:1]])
        ax.plot(pts[:, 0], pts[:, 1], lw=0.9, color=cmap(i % 20))
    ax.set_aspect("equal")
    ax.set_title(title or f"{len(pieces)} pieces")
    _save(fig, path, tag)


def plot_ladder(widths, series: dict, path, xlabel="mollifier width / h", tag=None):
    """Ratios along the mollification ladder, one line per series."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, ys in series.items():
        ax.plot(widths, ys, marker="o", label=name)
    ax.set_xscale("log", base=2)
    ax.invert_xaxis()
    ax.set_xlabel(xlabel)
    ax.set_ylabel("norm ratio")
    ax.legend(fontsize=7)
    _save(fig, path, tag)


def plot_dilation(lams, series: dict, path, tag=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, ys in series.items():
        ax.plot(lams, ys, marker="s", label=name)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("dilation factor")
    ax.set_ylabel("norm ratio")
    ax.legend(fontsize=7)
    _save(fig, path, tag)


def plot_field_slice(grid, path, axis: int = -1, tag=None):
    """|F| on the middle slice of a 3-d grid (or the whole 2-d grid)."""
    mag = grid.magnitude()
    if grid.dim == 3:
        ax_ = axis % 3
        mag = np.take(mag, grid.shape[ax_] // 2, axis=ax_)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(mag.T, origin="lower", cmap="magma")
    fig.colorbar(im, ax=ax)
    _save(fig, path, tag)
