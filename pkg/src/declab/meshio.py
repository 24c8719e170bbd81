"""Text mesh format ``decmesh 1``.

Layout::

    decmesh 1
    dim n
    vertices m
    <m coordinate lines>
    cells c
    <c lines of n+1 zero-based vertex indices>
    boundary b          (optional)
    <b lines of n vertex indices, optionally followed by a label>

Orientation is normalized on load (cells are reoriented to positive signed
volume); the writer emits positively oriented cells.
"""
from __future__ import annotations

import numpy as np

from .complex import SimplicialComplex, build_complex
from .errors import MeshError

FORMAT_HEADER = "decmesh 1"


def save(cx: SimplicialComplex, path) -> None:
    n = cx.dim
    cells = cx.simplices[n].copy()
    flip = cx.orientation[n] < 0
    # emit the oriented permutation: swapping two vertices realizes sign -1
    cells[flip, 0], cells[flip, 1] = cells[flip, 1], cells[flip, 0].copy()
    lines = [FORMAT_HEADER, f"dim {n}", f"vertices {cx.num(0)}"]
    for row in cx.vertices:
        lines.append(" ".join(repr(float(x)) for x in row))
    lines.append(f"cells {len(cells)}")
    for row in cells:
        lines.append(" ".join(str(int(v)) for v in row))
    if cx.boundary_labels:
        lines.append(f"boundary {len(cx.boundary_labels)}")
        for tup, label in sorted(cx.boundary_labels.items()):
            lines.append(" ".join(str(int(v)) for v in tup) + f" {label}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path, validate: bool = True) -> SimplicialComplex:
    with open(path) as fh:
        raw = [ln.strip() for ln in fh if ln.strip()]
    if not raw or raw[0] != FORMAT_HEADER:
        raise MeshError(f"missing '{FORMAT_HEADER}' header")
    pos = 1

    def expect(keyword: str) -> list[str]:
        nonlocal pos
        if pos >= len(raw):
            raise MeshError(f"truncated file: expected '{keyword}'")
        parts = raw[pos].split()
        if parts[0] != keyword:
            raise MeshError(f"expected '{keyword}', got '{raw[pos]}'")
        pos += 1
        return parts

    dim = int(expect("dim")[1])
    nv = int(expect("vertices")[1])
    if pos + nv > len(raw):
        raise MeshError("vertex count exceeds file length")
    try:
        verts = np.array([[float(x) for x in raw[pos + i].split()] for i in range(nv)])
    except ValueError as exc:
        raise MeshError(f"bad vertex line: {exc}") from exc
    if nv and verts.shape[1] != dim:
        raise MeshError(f"vertex lines must have {dim} coordinates")
    pos += nv
    nc = int(expect("cells")[1])
    if pos + nc > len(raw):
        raise MeshError("cell count exceeds file length")
    cells = np.array([[int(x) for x in raw[pos + i].split()] for i in range(nc)],
                     dtype=np.int64)
    pos += nc
    labels: dict[tuple, str] = {}
    if pos < len(raw):
        nb = int(expect("boundary")[1])
        for i in range(nb):
            parts = raw[pos + i].split()
            tup = tuple(sorted(int(x) for x in parts[:dim]))
            labels[tup] = parts[dim] if len(parts) > dim else "default"
        pos += nb
    cx = build_complex(dim, verts, cells, validate=validate)
    cx.boundary_labels = labels
    return cx
