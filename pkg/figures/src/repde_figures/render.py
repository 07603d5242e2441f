"""The five figure kinds rendered from repde output directories.

    E_vs_logt      measured E(t) on a log t axis with the predicted band
                   drawn as two straight lines (they are straight exactly in
                   these axes for logarithmic growth laws)
    E_vs_t_loglog  measured E(t), log-log, with the predicted power band
    decay_Ls       Dirichlet energy K(s) and mass decay along the v-clock
    convergence    refinement-study errors and identity residuals vs dr
    sweep_summary  fitted rates vs the swept parameter with the predicted
                   rates as reference curves

Rendering is read-only and idempotent: a fixed SVG hash salt and stripped
metadata make vector output byte-identical across runs on equal inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import readers

KINDS = ("E_vs_logt", "E_vs_t_loglog", "decay_Ls", "convergence", "sweep_summary")

RC_PARAMS = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.6,
    "legend.frameon": False,
    "svg.hashsalt": "repde-figures",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to render: an input directory, a figure kind, an output path."""

    input_dir: Path
    kind: str
    out_path: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; know {KINDS}")


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path."""
    indir = Path(spec.input_dir)
    with plt.rc_context(RC_PARAMS):
        fig, ax = plt.subplots(constrained_layout=True)
        if spec.kind == "E_vs_logt":
            _energy_panel(ax, indir, loglog=False)
        elif spec.kind == "E_vs_t_loglog":
            _energy_panel(ax, indir, loglog=True)
        elif spec.kind == "decay_Ls":
            _decay_panel(ax, indir)
        elif spec.kind == "convergence":
            _convergence_panel(ax, indir)
        else:
            _sweep_panel(ax, indir)
        out = Path(spec.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata=_clean_metadata(out))
        plt.close(fig)
    return out


def _clean_metadata(out: Path) -> dict | None:
    suffix = out.suffix.lower()
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return None


def _positive(mask_source, *arrays):
    mask = mask_source > 0
    return [a[mask] for a in arrays]


def _energy_panel(ax, indir: Path, loglog: bool) -> None:
    tables = readers.read_tables(indir / "tables.csv")
    pred = readers.read_predictions(indir / "predictions.csv")
    t, energy = _positive(tables["t"], tables["t"], tables["E"])
    ax.plot(t, energy, color="black", label="measured")
    for column, style, label in (
        ("E_pred_upper", "--", "predicted upper"),
        ("E_pred_lower", ":", "predicted lower"),
    ):
        values = pred[column]
        good = np.isfinite(values) & (pred["t"] > 0)
        if loglog:
            good &= values > 0
        if good.any():
            ax.plot(pred["t"][good], values[good], style, color="tab:red", label=label)
    ax.set_xscale("log")
    if loglog:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("cumulated energy E(t)")
    ax.legend()


def _decay_panel(ax, indir: Path) -> None:
    trace = readers.read_trace(indir / "trace.csv")
    s, mass, energy = _positive(trace["s"], trace["s"], trace["mass"], trace["K"])
    ax.plot(s, mass, color="tab:blue", label="mass")
    good = energy > 0
    ax.plot(s[good], energy[good], color="tab:orange", label="Dirichlet energy K")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("s")
    ax.set_ylabel("decay along the local clock")
    ax.legend()


def _convergence_panel(ax, indir: Path) -> None:
    conv = readers.read_convergence(indir / "convergence.csv")
    dr = conv["dr"]
    err = conv["linf_error"]
    good = np.isfinite(err) & (err > 0)
    if good.any():
        ax.plot(dr[good], err[good], "o-", color="black", label="L-inf error")
        # second-order reference through the first finite point
        ref = err[good][0] * (dr / dr[good][0]) ** 2
        ax.plot(dr, ref, "--", color="gray", label="order 2 reference")
    for name in conv:
        if name.startswith("res_p"):
            ax.plot(dr, conv[name], "s-", label=f"residual {name[4:]}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("grid spacing dr")
    ax.set_ylabel("error / residual")
    ax.legend()


def _sweep_panel(ax, indir: Path) -> None:
    sw = readers.read_sweep_summary(indir / "sweep_summary.csv")
    name = str(sw["param"][0])
    ax.errorbar(
        sw["value"],
        sw["fitted"],
        yerr=sw["stderr"],
        fmt="o",
        color="black",
        capsize=3,
        label="fitted rate",
    )
    order = np.argsort(sw["value"])
    ax.plot(
        sw["value"][order],
        sw["predicted_upper"][order],
        "--",
        color="tab:red",
        label="predicted upper",
    )
    ax.plot(
        sw["value"][order],
        sw["predicted_lower"][order],
        ":",
        color="tab:red",
        label="predicted lower",
    )
    ax.set_xlabel(name)
    ax.set_ylabel("fitted growth rate")
    ax.legend()
