"""Render the standard figure set from phonon-bell CSV/JSON outputs.

This package is a pure consumer of the documented file formats: fixed CSV
headers plus the fringe-scan JSON sidecar.  It does no numerical
post-processing beyond the normalizations stated in the figure captions,
and fringe visibilities are annotated from the JSON summary, never
re-fitted.

Figure ids:
  fig2    write_run.csv        occupations + heralded concurrence
  fig3ab  readout_run.csv      classical / fluctuation occupations vs time
  fig3c   readout_run.csv      detector signal vs time with the fringe cut
  fig3d   fringe_scan.csv+json normalized detector fringe, V annotation
  figS1   fringe_scan.csv      zero-delay g2 along the fringe
  figS2a  sweep_thermal.csv    C and V vs thermal occupation
  figS2b  sweep_dephasing.csv  C and V vs dephasing rate (log axis)
  figS3   readout_run.csv      mechanical classical vs fluctuation occupations
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class SchemaError(Exception):
    """Input file does not match the documented format."""


WRITE_RUN_HEADER = ["t_ns", "n_c", "n_b1", "n_b2", "n_d", "C", "herald_prob"]
FRINGE_HEADER = ["t_R_ns", "I_detector", "I_cavity", "g2_detector"]
SWEEP_HEADER = ["axis_value", "C", "V"]
READOUT_HEADER = [
    "t_ns",
    "n_c_classical", "n_c_fluct",
    "n_b1_classical", "n_b1_fluct",
    "n_b2_classical", "n_b2_fluct",
    "n_d_classical", "n_d_fluct",
]

FIGURE_IDS = ("fig2", "fig3ab", "fig3c", "fig3d", "figS1", "figS2a",
              "figS2b", "figS3")


@dataclass
class FigureSpec:
    """Input paths and layout options for one figure id."""

    figure_id: str
    csv_path: str
    json_path: Optional[str] = None
    out_path: Optional[str] = None

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure_id!r}")
        if self.figure_id == "fig3d" and self.json_path is None:
            raise SchemaError("fig3d needs the fringe-scan JSON summary")


def load_csv(path, expected_header) -> Dict[str, np.ndarray]:
    """Read a documented CSV; refuse any header deviation."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != expected_header:
            raise SchemaError(
                f"{path}: header {header} does not match {expected_header}"
            )
        rows = [[float(x) for x in row] for row in reader]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(expected_header):
        raise SchemaError(f"{path}: ragged rows")
    return {name: data[:, i] for i, name in enumerate(expected_header)}


def load_fringe_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        summary = json.load(fh)
    for key in ("V_detector", "V_cavity", "fit_residual"):
        if key not in summary:
            raise SchemaError(f"{path}: missing key {key!r}")
    return summary


# -- individual figures -------------------------------------------------------


def _fig2(spec):
    d = load_csv(spec.csv_path, WRITE_RUN_HEADER)
    fig, (ax_occ, ax_c) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    for col, label in (("n_c", r"$n_c$"), ("n_b1", r"$n_{b1}$"),
                       ("n_b2", r"$n_{b2}$"), ("n_d", r"$n_d$")):
        ax_occ.semilogy(d["t_ns"], np.clip(d[col], 1e-30, None), label=label)
    ax_occ.set_ylabel("occupation")
    ax_occ.legend(loc="best", fontsize=8)
    ax_c.plot(d["t_ns"], d["C"], "k-")
    ax_c.set_xlabel(r"$t_P$ (ns)")
    ax_c.set_ylabel("concurrence C")
    ax_c.set_ylim(0, 1.05)
    return fig, {}


def _fig3ab(spec):
    d = load_csv(spec.csv_path, READOUT_HEADER)
    fig, (ax_cl, ax_fl) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    for mode in ("n_c", "n_b1", "n_b2", "n_d"):
        ax_cl.semilogy(d["t_ns"], np.clip(d[f"{mode}_classical"], 1e-30, None),
                       label=mode)
        ax_fl.semilogy(d["t_ns"], np.clip(d[f"{mode}_fluct"], 1e-30, None),
                       label=mode)
    ax_cl.set_ylabel("classical occupation")
    ax_fl.set_ylabel("fluctuation occupation")
    ax_fl.set_xlabel("t (ns)")
    ax_cl.legend(loc="best", fontsize=8)
    return fig, {}


def _fig3c(spec):
    d = load_csv(spec.csv_path, READOUT_HEADER)
    fig, ax = plt.subplots(figsize=(6, 4))
    total = d["n_d_classical"] + d["n_d_fluct"]
    ax.plot(d["t_ns"], total, "b-")
    ax.axvline(d["t_ns"][-1], color="gray", ls="--", lw=0.8)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$n_d$")
    return fig, {}


def _fig3d(spec):
    d = load_csv(spec.csv_path, FRINGE_HEADER)
    summary = load_fringe_summary(spec.json_path)
    i0 = summary.get("I0_detector")
    if i0 is None or i0 <= 0:
        raise SchemaError("fringe summary lacks a positive I0_detector")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(d["t_R_ns"], d["I_detector"] / i0, "o", ms=4)
    v = summary["V_detector"]
    omega = summary.get("omega_rad_per_ns")
    phi0 = summary.get("phi0_detector")
    if omega is not None and phi0 is not None:
        tt = np.linspace(d["t_R_ns"].min(), d["t_R_ns"].max(), 400)
        ax.plot(tt, 1 + v * np.cos(omega * tt + phi0), "-", lw=1)
    annotation = f"V = {v}"
    ax.annotate(annotation, xy=(0.03, 0.05), xycoords="axes fraction")
    ax.set_xlabel(r"$t_R$ (ns)")
    ax.set_ylabel(r"$I_{det}/I_0$")
    return fig, {"V_annotation": v, "annotation_text": annotation}


def _figS1(spec):
    d = load_csv(spec.csv_path, FRINGE_HEADER)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(d["t_R_ns"], np.clip(d["g2_detector"], 1e-30, None), "o-", ms=4)
    ax.axhline(0.5, color="gray", ls="--", lw=0.8)
    ax.set_xlabel(r"$t_R$ (ns)")
    ax.set_ylabel(r"$g^{(2)}(0)$")
    return fig, {}


def _sweep_figure(spec, xlabel, logx=False):
    d = load_csv(spec.csv_path, SWEEP_HEADER)
    fig, ax = plt.subplots(figsize=(6, 4))
    plot = ax.semilogx if logx else ax.plot
    plot(d["axis_value"], d["C"], "o-", label="C")
    plot(d["axis_value"], d["V"], "s-", label="V")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("C, V")
    ax.set_ylim(0, 1.05)
    ax.legend()
    return fig, {}


def _figS3(spec):
    d = load_csv(spec.csv_path, READOUT_HEADER)
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, color in (("n_b1", "tab:blue"), ("n_b2", "tab:orange")):
        ax.semilogy(d["t_ns"], np.clip(d[f"{mode}_classical"], 1e-30, None),
                    color=color, ls="-", label=f"{mode} classical")
        ax.semilogy(d["t_ns"], np.clip(d[f"{mode}_fluct"], 1e-30, None),
                    color=color, ls="--", label=f"{mode} fluctuation")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("mechanical occupation")
    ax.legend(fontsize=8)
    return fig, {}


_BUILDERS = {
    "fig2": _fig2,
    "fig3ab": _fig3ab,
    "fig3c": _fig3c,
    "fig3d": _fig3d,
    "figS1": _figS1,
    "figS2a": lambda s: _sweep_figure(s, r"$\bar n_{th}$"),
    "figS2b": lambda s: _sweep_figure(s, r"$\eta/\kappa$", logx=True),
    "figS3": _figS3,
}


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure; returns (figure, metadata)."""
    return _BUILDERS[spec.figure_id](spec)


def render(figure_id: str, csv_path: str, out_path: str,
           json_path: Optional[str] = None) -> dict:
    """Render one figure id to an image file; returns metadata."""
    spec = FigureSpec(figure_id=figure_id, csv_path=csv_path,
                      json_path=json_path, out_path=out_path)
    fig, meta = build_figure(spec)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return meta


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phonon-bell-figures",
        description="Render a figure id from documented CSV/JSON outputs",
    )
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("--csv", required=True)
    parser.add_argument("--json", default=None)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.figure_id, args.csv, args.out, json_path=args.json)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
