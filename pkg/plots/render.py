#!/usr/bin/env python3
"""Render figure images from the simulation CLI's CSV/JSON outputs.

    python plots/render.py --recipe FILE --out DIR

A recipe is a small YAML document naming a figure kind, the input files and
the output image; this tool never recomputes physics, it only reshapes the
documented CSV schemas into panels.  Missing columns or a manifest schema
mismatch fail loudly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import yaml

SCHEMA_VERSION = 1


class SchemaMismatch(Exception):
    pass


@dataclass(frozen=True)
class FigureRecipe:
    kind: str
    inputs: dict
    output: str
    title: str = ""
    options: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "FigureRecipe":
        doc = yaml.safe_load(Path(path).read_text())
        for key in ("kind", "inputs", "output"):
            if key not in doc:
                raise SchemaMismatch(f"recipe missing key {key!r}")
        return cls(kind=doc["kind"], inputs=doc["inputs"], output=doc["output"],
                   title=doc.get("title", ""), options=doc.get("options", {}))


def read_csv(path: Path, required: list[str]) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {missing} (have {header})")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, cell in zip(header, line.split(",")):
            cols[h].append(cell)
    out = {}
    for h, cells in cols.items():
        try:
            out[h] = np.array([float(c) for c in cells])
        except ValueError:
            out[h] = np.array(cells)
    return out


def check_manifest(path: Path | None):
    if path is None:
        return
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"manifest {path} has schema_version {doc.get('schema_version')}, "
            f"renderer expects {SCHEMA_VERSION}")


def _field_grid(table: dict, value: str):
    qs = np.unique(table["q"]) if "q" in table else np.unique(table["re_beta"])
    ps = np.unique(table["p"]) if "p" in table else np.unique(table["im_beta"])
    vals = table[value].reshape(len(qs), len(ps))
    return qs, ps, vals


def _draw_wigner(ax, table, title):
    qs, ps, w = _field_grid(table, "value")
    lim = np.abs(w).max() or 1.0
    im = ax.pcolormesh(qs, ps, w.T, cmap="RdBu_r", vmin=-lim, vmax=lim,
                       shading="auto")
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    ax.set_title(title)
    return im


def _draw_density(ax, table, marker, title):
    xs, ys, dens = _field_grid(table, "density")
    im = ax.pcolormesh(xs, ys, dens.T, cmap="viridis", shading="auto")
    if marker is not None:
        ax.plot([marker[0]], [marker[1]], marker="x", color="yellow",
                markersize=10, markeredgewidth=2)
    ax.set_xlabel("Re β")
    ax.set_ylabel("Im β")
    ax.set_title(title)
    return im


def render_wigner_panels(recipe: FigureRecipe, out_dir: Path) -> Path:
    """Three panels per input state: input Wigner, outcome density with the
    maximum-likelihood marker, post-measurement Wigner."""
    summary = read_csv(Path(recipe.inputs["summary"]),
                       ["input", "ml_re_beta", "ml_im_beta", "delta_q", "delta_p"])
    names = list(summary["input"])
    fig, axes = plt.subplots(len(names), 3, figsize=(13, 4 * len(names)),
                             squeeze=False)
    for i, name in enumerate(names):
        w_in = read_csv(Path(recipe.inputs["wigner_input"][name]), ["q", "p", "value"])
        w_post = read_csv(Path(recipe.inputs["wigner_post"][name]), ["q", "p", "value"])
        dens = read_csv(Path(recipe.inputs["density"][name]),
                        ["re_beta", "im_beta", "density"])
        marker = (summary["ml_re_beta"][i], summary["ml_im_beta"][i])
        _draw_wigner(axes[i][0], w_in, f"{name}: input")
        _draw_density(axes[i][1], dens, marker, f"{name}: outcome density")
        _draw_wigner(axes[i][2], w_post,
                     f"{name}: post state (Δq={summary['delta_q'][i]:.3f}, "
                     f"Δp={summary['delta_p'][i]:.3f})")
    return _finish(fig, recipe, out_dir)


def render_scaling(recipe: FigureRecipe, out_dir: Path) -> Path:
    """Monte-Carlo mean with error bars plus the three analytic curves."""
    t = read_csv(Path(recipe.inputs["scaling"]),
                 ["nbar", "mc_mean_delta_q", "mc_std_delta_q", "villain_delta",
                  "estimate", "lower_bound"])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(t["nbar"], t["mc_mean_delta_q"], yerr=t["mc_std_delta_q"],
                fmt="o", capsize=4, label="Monte Carlo", color="purple")
    ax.plot(t["nbar"], t["villain_delta"], "s-", label="Villain", color="tab:blue")
    ax.plot(t["nbar"], t["estimate"], "-", label=r"$1/\sqrt{4\pi\bar n}$",
            color="tab:green")
    ax.plot(t["nbar"], t["lower_bound"], "--", label="lower bound", color="gold")
    ax.set_xlabel(r"$\bar n$")
    ax.set_ylabel(r"$\Delta_q$")
    ax.legend()
    return _finish(fig, recipe, out_dir)


def render_cubic_panels(recipe: FigureRecipe, out_dir: Path) -> Path:
    summary = read_csv(Path(recipe.inputs["summary"]),
                       ["mode", "delta_q", "delta_p"])
    modes = list(summary["mode"])
    fig, axes = plt.subplots(1, len(modes), figsize=(6 * len(modes), 4.5),
                             squeeze=False)
    for i, mode in enumerate(modes):
        table = read_csv(Path(recipe.inputs["wigner_post"][mode]), ["q", "p", "value"])
        _draw_wigner(axes[0][i], table,
                     f"{mode} (Δp={summary['delta_p'][i]:.3f}, "
                     f"Δq={summary['delta_q'][i]:.3f})")
    return _finish(fig, recipe, out_dir)


def render_drive(recipe: FigureRecipe, out_dir: Path) -> Path:
    """Waveforms on the left, harmonic amplitudes on the right."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for label, path in recipe.inputs["waveforms"].items():
        t = read_csv(Path(path), ["t", "x_ext"])
        ax1.plot(t["t"] * 1e9, t["x_ext"], label=f"δ={label}")
    ax1.set_xlabel("t (ns)")
    ax1.set_ylabel(r"$x_{\rm ext}$")
    ax1.legend()
    h = read_csv(Path(recipe.inputs["harmonics"]), ["delta", "n", "omega_n", "b_n"])
    for delta in np.unique(h["delta"]):
        sel = h["delta"] == delta
        ax2.semilogy(h["n"][sel], np.abs(h["b_n"][sel]), "o-", label=f"δ={delta:g}")
    ax2.set_xlabel("harmonic index n")
    ax2.set_ylabel(r"$|b_n|$")
    ax2.legend()
    return _finish(fig, recipe, out_dir)


def render_release(recipe: FigureRecipe, out_dir: Path) -> Path:
    """Release vs direct squeezing distributions and the integrated I/Q."""
    rel = read_csv(Path(recipe.inputs["release"]),
                   ["I_out", "Q_out", "delta_q"])
    direct = read_csv(Path(recipe.inputs["direct"]), ["delta_q"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    bins = np.linspace(
        min(rel["delta_q"].min(), direct["delta_q"].min()),
        max(rel["delta_q"].max(), direct["delta_q"].max()), 30)
    ax1.hist(rel["delta_q"], bins=bins, alpha=0.6, label="release")
    ax1.hist(direct["delta_q"], bins=bins, alpha=0.6, label="direct")
    ax1.set_xlabel(r"$\Delta_q$")
    ax1.set_ylabel("shots")
    ax1.legend()
    ax2.scatter(rel["I_out"], rel["Q_out"], s=8, alpha=0.5)
    ax2.set_xlabel(r"$I_{\rm out}$")
    ax2.set_ylabel(r"$Q_{\rm out}$")
    ax2.set_aspect("equal")
    return _finish(fig, recipe, out_dir)


def _box_stats(values: np.ndarray) -> dict:
    # percentile convention fixed at 5/25/median/75/95
    lo, q1, med, q3, hi = np.percentile(values, [5, 25, 50, 75, 95])
    return {
        "med": med, "q1": q1, "q3": q3, "whislo": lo, "whishi": hi,
        "fliers": values[(values < lo) | (values > hi)],
    }


def render_box_whisker(recipe: FigureRecipe, out_dir: Path) -> Path:
    """Per-nbar box-whisker of the post-state photon number and Δp error."""
    t = read_csv(Path(recipe.inputs["appd"]),
                 ["nbar", "shot", "mean_photons", "delta_p"])
    nbars = np.unique(t["nbar"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for ax, column, label in ((ax1, "mean_photons", "post-state photons"),
                              (ax2, "delta_p", r"$\Delta_p$")):
        stats = [_box_stats(t[column][t["nbar"] == nb]) for nb in nbars]
        ax.bxp(stats, positions=range(len(nbars)), showfliers=True)
        ax.set_xticks(range(len(nbars)), [f"{nb:g}" for nb in nbars])
        ax.set_xlabel(r"$\bar n$")
        ax.set_ylabel(label)
    return _finish(fig, recipe, out_dir)


def _finish(fig, recipe: FigureRecipe, out_dir: Path) -> Path:
    if recipe.title:
        fig.suptitle(recipe.title)
    fig.tight_layout()
    out = Path(out_dir) / recipe.output
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=recipe.options.get("dpi", 130), metadata={})
    plt.close(fig)
    return out


RENDERERS = {
    "wigner-panels": render_wigner_panels,
    "scaling": render_scaling,
    "cubic-panels": render_cubic_panels,
    "drive": render_drive,
    "release": render_release,
    "box-whisker": render_box_whisker,
}


def render(recipe: FigureRecipe, out_dir: Path) -> Path:
    if recipe.kind not in RENDERERS:
        raise SchemaMismatch(f"unknown figure kind {recipe.kind!r} "
                             f"(known: {sorted(RENDERERS)})")
    check_manifest(recipe.inputs.get("manifest"))
    return RENDERERS[recipe.kind](recipe, out_dir)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--recipe", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        path = render(FigureRecipe.load(Path(args.recipe)), Path(args.out))
    except SchemaMismatch as err:
        print(f"schema mismatch: {err}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
