"""Checkpoint files and training-curve CSV export.

Layout: one text header line ``saginsim-ckpt <version>``, then one line per
network ``net <name> <dims...>``, then every weight and bias row-major as
``%.17g`` values, one array per line.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mlp import Mlp

CKPT_VERSION = 1
_MAGIC = "saginsim-ckpt"


def save_checkpoint(path: str | Path, nets: dict) -> None:
    lines = [f"{_MAGIC} {CKPT_VERSION}"]
    for name, net in nets.items():
        lines.append("net " + name + " " + " ".join(str(s) for s in net.sizes))
        for p in net.params:
            lines.append(" ".join("%.17g" % v for v in p.ravel()))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path: str | Path) -> dict:
    rows = Path(path).read_text().splitlines()
    if not rows or not rows[0].startswith(_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    version = int(rows[0].split()[1])
    if version != CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    nets, i = {}, 1
    while i < len(rows):
        head = rows[i].split()
        if head[0] != "net":
            raise ValueError(f"{path}: line {i + 1}: expected a net header")
        name, sizes = head[1], tuple(int(s) for s in head[2:])
        net = Mlp(sizes)
        i += 1
        for p in net.params:
            vals = np.array([float(v) for v in rows[i].split()]) if rows[i].strip() else np.zeros(0)
            if vals.size != p.size:
                raise ValueError(f"{path}: line {i + 1}: expected {p.size} values, got {vals.size}")
            p[...] = vals.reshape(p.shape)
            i += 1
        nets[name] = net
    return nets


def load_into(agent_nets: dict, path: str | Path) -> None:
    """Copy stored parameters into existing networks (same names and shapes)."""
    stored = load_checkpoint(path)
    for name, net in agent_nets.items():
        src = stored[name]
        if src.sizes != net.sizes:
            raise ValueError(f"network {name}: stored dims {src.sizes} != {net.sizes}")
        for p, q in zip(net.params, src.params):
            p[...] = q


def write_training_curve(path: str | Path, rows, header) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
