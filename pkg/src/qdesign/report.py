"""Report emission: JSON (the machine contract), CSV tables, aligned text,
and matplotlib figures rendered to files alongside the delimited output.

Every writer is deterministic for identical inputs: floats are serialized
with repr/%.17g, JSON keys are sorted, and figures are rendered with the
Agg backend at a fixed size and dpi.
"""

from __future__ import annotations

import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, payload: dict) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")
    return path


def round_sig(x: float, sig: int = 2) -> float:
    """Round to a number of significant figures, for table presentation."""
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, -int(math.floor(math.log10(abs(x)))) + (sig - 1))


def format_table(rows: list[tuple], headers: tuple | None = None) -> str:
    """Plain aligned text table; all cells are stringified."""
    str_rows = [tuple(str(c) for c in r) for r in rows]
    if headers:
        str_rows.insert(0, tuple(str(h) for h in headers))
    widths = [max(len(r[i]) for r in str_rows) for i in range(len(str_rows[0]))]
    lines = []
    for k, r in enumerate(str_rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if headers and k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _new_fig():
    return plt.subplots(figsize=(6.0, 4.0), dpi=150)


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_dispersion(path, bias_ma, freq_ghz, marker=None):
    fig, ax = _new_fig()
    ax.plot(bias_ma, freq_ghz, lw=1.5)
    if marker is not None:
        ax.plot([marker[0]], [marker[1]], "o", ms=6)
    ax.set_xlabel("bias current (mA)")
    ax.set_ylabel("f01 (GHz)")
    ax.set_title("qubit transition vs flux bias")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_budget(path, names, lifetimes_us):
    fig, ax = _new_fig()
    y = np.arange(len(names))
    ax.barh(y, lifetimes_us, color="#4878a8")
    ax.set_yticks(y, names)
    ax.set_xscale("log")
    ax.invert_yaxis()
    ax.set_xlabel("lifetime limit (us)")
    ax.set_title("relaxation budget")
    ax.grid(alpha=0.3, axis="x")
    return _save(fig, path)


def plot_coupling(path, rotations_rad, m_pH, marker=None):
    fig, ax = _new_fig()
    ax.plot(np.degrees(rotations_rad), m_pH, lw=1.5)
    if marker is not None:
        ax.plot([math.degrees(marker[0])], [marker[1]], "o", ms=6)
    ax.set_xlabel("relative junction-axis rotation (deg)")
    ax.set_ylabel("SQUID flux-transfer mutual (pH)")
    ax.set_title("neighbor coupling vs rotation")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_fit(path, bias_ma, freq_ghz, model_bias, model_freq):
    fig, ax = _new_fig()
    ax.plot(bias_ma, freq_ghz, ".", ms=4, label="data")
    ax.plot(model_bias, model_freq, lw=1.2, label="fit")
    ax.set_xlabel("bias current (mA)")
    ax.set_ylabel("frequency (GHz)")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_trace(path, t_ns, sigma_z, fit_t=None, fit_y=None, xlabel="delay (ns)"):
    fig, ax = _new_fig()
    ax.plot(t_ns, sigma_z, ".", ms=3, label="simulated")
    if fit_t is not None:
        ax.plot(fit_t, fit_y, lw=1.2, label="fit")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel("<sigma_z>")
    ax.grid(alpha=0.3)
    return _save(fig, path)
