"""Emit standalone matplotlib scripts for run artifacts.

Nothing is rendered here; each script reads only the CSV files written by the
CLI and saves a PNG next to itself.
"""

from __future__ import annotations

import os
from pathlib import Path

_PRELUDE = '''\
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
DATA = (HERE / {data!r}).resolve()


def read(name):
    with open(DATA / name, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {{h: [] for h in header}}
    for row in body:
        for h, v in zip(header, row):
            try:
                cols[h].append(float(v))
            except ValueError:
                cols[h].append(v)
    return cols

'''

_SCRIPTS = {
    "fig_simulate.py": (("trajectory.csv",), '''
d = read("trajectory.csv")
names = [h for h in d if h != "t"]
fig, axes = plt.subplots(len(names), 1, sharex=True, figsize=(7, 2 * len(names)))
for ax, n in zip(axes, names):
    ax.plot(d["t"], d[n])
    ax.set_ylabel(n)
axes[-1].set_xlabel("time (years)")
fig.tight_layout()
fig.savefig(HERE / "fig_simulate.png", dpi=150)
'''),
    "fig_fit.py": (("fit_curve.csv",), '''
d = read("fit_curve.csv")
fig, ax = plt.subplots(figsize=(8, 4))
ax.plot(d["month"], d["data"], "o", ms=4, label="data")
ax.plot(d["month"], d["model_alpha1"], "--", label="alpha = 1")
ax.plot(d["month"], d["model_best"], "-", label="fitted alpha")
ax.set_xlabel("month")
ax.set_ylabel("infectious (cases/month)")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "fig_fit.png", dpi=150)
'''),
    "fig_states.py": (("focp.csv",), '''
d = read("focp.csv")
fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
for ax, n in zip(axes.flat, ("S", "E", "I", "R")):
    ax.plot(d["t"], d[n])
    ax.set_title(n)
for ax in axes[1]:
    ax.set_xlabel("time (years)")
fig.tight_layout()
fig.savefig(HERE / "fig_states.png", dpi=150)
'''),
    "fig_costates.py": (("focp.csv",), '''
d = read("focp.csv")
fig, ax = plt.subplots(figsize=(7, 4))
for n in ("p1", "p2", "p3", "p4"):
    ax.plot(d["t"], d[n], label=n)
ax.set_xlabel("time (years)")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "fig_costates.png", dpi=150)
'''),
    "fig_control.py": (("focp.csv",), '''
d = read("focp.csv")
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(d["t"], d["T"])
ax.set_xlabel("time (years)")
ax.set_ylabel("treatment rate")
fig.tight_layout()
fig.savefig(HERE / "fig_control.png", dpi=150)
'''),
    "fig_efficacy.py": (("focp.csv",), '''
d = read("focp.csv")
I0 = d["I"][0]
F = [1 - i / I0 for i in d["I"]]
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(d["t"], F)
ax.axhline(0, color="0.6", lw=0.8)
ax.set_xlabel("time (years)")
ax.set_ylabel("efficacy F(t)")
fig.tight_layout()
fig.savefig(HERE / "fig_efficacy.png", dpi=150)
'''),
    "fig_sensitivity.py": (("sensitivity_kappa1.csv", "sensitivity_kappa2.csv"), '''
names = [n for n in ("sensitivity_kappa2.csv", "sensitivity_kappa1.csv") if (DATA / n).exists()]
fig, axes = plt.subplots(1, len(names), figsize=(6 * len(names), 4), squeeze=False)
for ax, name in zip(axes[0], names):
    d = read(name)
    for col in d:
        if col != "t":
            ax.plot(d["t"], d[col], label=col[2:])
    ax.set_xlabel("time (years)")
    ax.set_ylabel("efficacy F(t)")
    ax.legend()
fig.tight_layout()
fig.savefig(HERE / "fig_sensitivity.png", dpi=150)
'''),
}


class ArtifactMissingError(FileNotFoundError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing artifacts: " + ", ".join(self.missing))


def emit_plots(source, target) -> list[Path]:
    """Write a script for every figure whose input CSVs exist in ``source``.

    The sensitivity figure needs at least one of its two inputs; the others need
    all of theirs. Raises :class:`ArtifactMissingError` if nothing can be drawn.
    """
    source, target = Path(source), Path(target)
    chosen = []
    for name, (needs, body) in _SCRIPTS.items():
        present = [n for n in needs if (source / n).is_file()]
        ok = bool(present) if name == "fig_sensitivity.py" else len(present) == len(needs)
        if ok:
            chosen.append((name, body))
    if not chosen:
        wanted = sorted({n for needs, _ in _SCRIPTS.values() for n in needs})
        raise ArtifactMissingError(str(source / n) for n in wanted)
    target.mkdir(parents=True, exist_ok=True)
    rel = os.path.relpath(source.resolve(), target.resolve())
    written = []
    for name, body in chosen:
        p = target / name
        p.write_text(_PRELUDE.format(data=rel) + body, encoding="utf-8")
        written.append(p)
    return written
