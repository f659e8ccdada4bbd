"""The five standard figures, rendered deterministically from result bundles.

Fixed figure geometry, fonts and colors; PNGs are written without software or
timestamp metadata so identical bundles give identical bytes at a fixed style
version.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bundle import MissingInput

FIGSIZE = (7.0, 4.4)
DPI = 110

_STYLE = {
    "font.size": 10,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.facecolor": "white",
    "svg.hashsalt": "qcviz",
}


def _new_axes(title):
    plt.rcParams.update(_STYLE)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    return fig, ax


def _save(fig, out_path):
    fig.savefig(out_path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return out_path


def fig_weyl(bundle, out_path):
    """Counting ratio N(lam)/lam^{5/2} with the stated and consistent targets."""
    (res,) = bundle.require("weyl")
    fig, ax = _new_axes("eigenvalue counting ratio")
    lam = np.asarray(res["lambda_grid"])
    ax.semilogx(lam, res["ratios"], "o-", ms=3.5, lw=1.1, label="N(lam)/lam^{5/2}")
    ax.axhline(res["target_stated"], color="crimson", ls="--", lw=1.0,
               label="stated constant")
    ax.axhline(res["target_consistent"], color="seagreen", ls="-", lw=1.0,
               label="consistent constant")
    if "fitted_constant" in res:
        ax.axhline(res["fitted_constant"], color="0.4", ls=":", lw=.9,
                   label="top-decade mean")
    ax.set_xlabel("lambda")
    ax.set_ylabel("ratio")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, out_path)


def fig_heat(bundle, out_path):
    """Heat-trace extrapolation t^{5/2} tr e^{-t Delta} against the target."""
    (res,) = bundle.require("heat")
    fig, ax = _new_axes("heat-trace normalization")
    t = np.asarray(res["t_grid"])
    ax.plot(t, res["scaled_trace"], "o-", ms=3.5, lw=1.1, label="t^{5/2} trace")
    ax.axhline(res["target"], color="seagreen", ls="-", lw=1.0, label="P(X)/(32 sqrt(pi))")
    ax.plot([0], [res["extrapolated"]], "s", color="crimson", ms=5,
            label="extrapolated")
    ax.set_xlim(left=0)
    ax.set_xlabel("t")
    ax.set_ylabel("scaled trace")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, out_path)


def fig_wave(bundle, out_path):
    """Smoothed wave trace value/lam^4 plus the window-contrast comparison."""
    (res,) = bundle.require("wave")
    fig, ax = _new_axes("smoothed wave trace")
    lam = np.asarray(res["lambda_grid"])
    vals = np.asarray(res["values"]) / lam**4
    ax.plot(lam, vals, "o-", ms=3.5, lw=1.1, label="value/lam^4")
    ax.axhline(res["target_stated"], color="crimson", ls="--", lw=1.0,
               label="stated constant")
    ax.axhline(res["target_consistent"], color="seagreen", ls="-", lw=1.0,
               label="consistent constant")
    ax.set_xlabel("lambda")
    ax.set_ylabel("scaled value")
    ax.legend(loc="best", fontsize=8)
    ss = res.get("singular_support")
    if ss:
        inset = fig.add_axes([0.62, 0.25, 0.24, 0.28])
        inset.bar([0, 1], [ss["inner_window"], ss["window_at_abnormal_period"]],
                  color=["0.6", "crimson"])
        inset.set_xticks([0, 1])
        inset.set_xticklabels(["(0.2,0.8)", "at t=1"], fontsize=7)
        inset.set_yscale("log")
        inset.set_title(f"window contrast x{ss['ratio']:.0f}", fontsize=8)
        inset.grid(False)
    return _save(fig, out_path)


def fig_bands(bundle, out_path):
    """Period-band diagram of the boundary flow (positive and mirrored)."""
    (res,) = bundle.require("periods")
    fig, ax = _new_axes("period bands")
    bands = res.get("bands", [])
    T_max = res.get("T_max", 1.0)
    for lo, hi in bands:
        ax.axvspan(lo, hi, ymin=0.55, ymax=0.8, color="steelblue", alpha=0.75)
        ax.axvspan(-hi, -lo, ymin=0.2, ymax=0.45, color="steelblue", alpha=0.75)
    for lo, hi in bands:
        ax.plot([lo, hi], [0.675 * 1, 0.675], lw=0)  # keep autoscale honest
    ax.set_xlim(-T_max * 1.02, T_max * 1.02)
    ax.set_ylim(0, 1)
    ax.set_yticks([])
    ax.set_xlabel("period")
    ax.set_title(f"period bands (n-fold dilations, T_max = {T_max:g})")
    return _save(fig, out_path)


def fig_qe(bundle, out_path):
    """Running expectation and variance over the eigenvalue window."""
    (res,) = bundle.require("qe")
    fig, ax = _new_axes("matrix-element running averages")
    lam = np.asarray(res["lambda_grid"])
    ax.plot(lam, res["E_running"], lw=1.2, color="steelblue", label="E running")
    ax.plot(lam, res["V_running"], lw=1.2, color="darkorange", label="V running")
    ax.axhline(res["target"], color="seagreen", ls="-", lw=1.0, label="target")
    ax.set_xlabel("lambda")
    ax.set_ylabel("running average")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, out_path)


FIGURES = {
    "weyl": fig_weyl,
    "heat": fig_heat,
    "wave": fig_wave,
    "bands": fig_bands,
    "qe": fig_qe,
}


def render(bundle, figure, out_path):
    """Render one named figure from a bundle to a PNG path."""
    if figure not in FIGURES:
        raise MissingInput([f"unknown figure {figure!r}"])
    return FIGURES[figure](bundle, out_path)
