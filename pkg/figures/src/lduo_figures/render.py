"""Deterministic figure rendering for the three artifact families."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lduo-figures"
matplotlib.rcParams["svg.fonttype"] = "path"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import (load_manifest, verified_csv, verified_json,  # noqa: E402
                 verified_jsonl)

_PNG_META = {"Software": "lduo-figures"}
_SVG_META = {"Date": None, "Creator": "lduo-figures"}

#: bath-coordinate panel layout, matching the solver's file tags:
#: left column projections of the two-bath run, right column the
#: isolated baths and the non-additivity residual
PANEL_ORDER = [("uoproj", "two-bath run, oscillator projection"),
               ("uoiso", "isolated oscillator bath"),
               ("ldproj", "two-bath run, overdamped projection"),
               ("ldiso", "isolated overdamped bath"),
               ("full", "two-bath run, all axes"),
               ("residual", "residual: full - overdamped - oscillator")]


@dataclass(frozen=True)
class FigureSpec:
    in_dir: Path
    out_dir: Path
    kind: str  # spectra2d | lattice | bathcoords
    contour_levels: int = 12
    colormap: str = "RdBu_r"
    elements: tuple[str, ...] = ("gg", "ee")  # diagonals by default
    formats: tuple[str, ...] = ("png", "svg")

    def __post_init__(self):
        if self.kind not in ("spectra2d", "lattice", "bathcoords"):
            raise ValueError(f"unknown figure kind {self.kind!r}")


def _save(fig, out_dir: Path, stem: str, formats) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in formats:
        path = out_dir / f"{stem}.{ext}"
        meta = _PNG_META if ext == "png" else _SVG_META
        fig.savefig(path, format=ext, metadata=meta)
        written.append(path)
    plt.close(fig)
    return written


def render_spectra2d(spec: FigureSpec) -> list[Path]:
    manifest = load_manifest(spec.in_dir)
    axes_doc = verified_json(spec.in_dir, "axes.json", manifest)
    tags = [f"T{int(round(t))}" for t in axes_doc["waiting_times_fs"]]
    grids = {tag: verified_csv(spec.in_dir, f"spectrum_{tag}.csv", manifest)
             for tag in tags}
    vmax = max(np.abs(g).max() for g in grids.values())  # shared colour scale
    written = []
    for tag in tags:
        wt = np.array(axes_doc[tag]["omega_tau_cm"])
        we = np.array(axes_doc[tag]["omega_t_cm"])
        fig, ax = plt.subplots(figsize=(5.0, 4.2), dpi=150)
        levels = np.linspace(-vmax, vmax, 2 * spec.contour_levels + 1)
        cs = ax.contourf(we, wt, grids[tag], levels=levels, cmap=spec.colormap)
        ax.contour(we, wt, grids[tag], levels=levels, colors="k",
                   linewidths=0.3)
        lo = max(wt.min(), we.min())
        hi = min(wt.max(), we.max())
        ax.plot([lo, hi], [lo, hi], ls="--", lw=0.8, color="gray")
        i, j = np.unravel_index(np.argmax(grids[tag]), grids[tag].shape)
        ax.plot(we[j], wt[i], "k+", ms=9)
        ax.set_xlabel(r"$\omega_t$ / cm$^{-1}$")
        ax.set_ylabel(r"$\omega_\tau$ / cm$^{-1}$")
        ax.set_title(f"waiting time {tag[1:]} fs")
        fig.colorbar(cs, ax=ax, shrink=0.9)
        fig.tight_layout()
        written += _save(fig, spec.out_dir, f"spectrum_{tag}", spec.formats)
    return written


def render_lattice(spec: FigureSpec) -> list[Path]:
    manifest = load_manifest(spec.in_dir)
    rows = verified_jsonl(spec.in_dir, "lattice.jsonl", manifest)
    entries = np.array([r["index"] for r in rows])
    tiers = np.array([r["tier"] for r in rows])
    d = entries.shape[1]
    if d >= 3:
        fig = plt.figure(figsize=(5.2, 4.6), dpi=150)
        ax = fig.add_subplot(projection="3d")
        sc = ax.scatter(entries[:, 0], entries[:, 1], entries[:, 2],
                        c=tiers, cmap="viridis", s=28)
        ax.set_xlabel("axis 0")
        ax.set_ylabel("axis 1")
        ax.set_zlabel("axis 2")
        if d > 3:
            ax.set_title(f"first 3 of {d} axes")
        fig.colorbar(sc, ax=ax, label="tier", shrink=0.7)
    else:
        fig, ax = plt.subplots(figsize=(4.6, 4.0), dpi=150)
        xs = entries[:, 0]
        ys = entries[:, 1] if d == 2 else np.zeros_like(xs)
        sc = ax.scatter(xs, ys, c=tiers, cmap="viridis", s=40)
        ax.set_xlabel("axis 0")
        ax.set_ylabel("axis 1" if d == 2 else "")
        fig.colorbar(sc, ax=ax, label="tier")
    fig.tight_layout()
    return _save(fig, spec.out_dir, "lattice", spec.formats)


def _load_moment_csv(path: Path):
    cols = {"t_fs": 0, "re_gg": 3, "im_gg": 4, "re_ge": 5, "im_ge": 6,
            "re_eg": 7, "im_eg": 8, "re_ee": 9, "im_ee": 10}
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        assert header[0] == "t_fs"
        for line in fh:
            parts = line.strip().split(",")
            rows.append([float(parts[i]) for i in cols.values()])
    arr = np.array(rows)
    return {name: arr[:, k] for k, name in enumerate(cols)}


def render_bathcoords(spec: FigureSpec, orders=(1, 2)) -> list[Path]:
    from .io import verify

    manifest = load_manifest(spec.in_dir)
    written = []
    for order in orders:
        fig, axes = plt.subplots(3, 2, figsize=(8.4, 8.6), dpi=150,
                                 sharex=True)
        for ax, (tag, title) in zip(axes.ravel(order="F"), PANEL_ORDER):
            name = (f"residual_{order}.csv" if tag == "residual"
                    else f"bathcoords_{tag}_{order}.csv")
            try:
                path = verify(spec.in_dir, name, manifest)
            except FileNotFoundError:
                ax.set_axis_off()
                continue
            data = _load_moment_csv(path)
            for el in spec.elements:
                ax.plot(data["t_fs"], data[f"re_{el}"], lw=1.0,
                        label=f"Re {el}")
                ax.plot(data["t_fs"], data[f"im_{el}"], lw=1.0, ls="--",
                        label=f"Im {el}")
            ax.set_title(title, fontsize=9)
            ax.tick_params(labelsize=8)
        for ax in axes[-1]:
            ax.set_xlabel("t / fs")
        axes[0, 0].legend(fontsize=7, ncol=2)
        fig.suptitle(f"collective bath coordinate, order {order}", y=0.995)
        fig.tight_layout()
        written += _save(fig, spec.out_dir, f"bathcoords_order{order}",
                         spec.formats)
    return written


def render(spec: FigureSpec) -> list[Path]:
    """Dispatch on the figure kind; returns the written paths."""
    if spec.kind == "spectra2d":
        return render_spectra2d(spec)
    if spec.kind == "lattice":
        return render_lattice(spec)
    return render_bathcoords(spec)
