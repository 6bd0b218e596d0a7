"""CSV triplet / vector files for matrices, counts and weighted networks."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .network import InteractionNetwork
from .quantify import InteractionCounts, InteractionMatrix, Quantification

__all__ = [
    "PersistError",
    "write_triplets",
    "read_triplets",
    "write_vector",
    "read_vector",
    "save_quantification",
    "load_quantification",
    "load_matrix",
    "write_network",
    "read_network_weights",
    "write_rows",
    "dump_json",
]


class PersistError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows(path: str | Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(["" if v is None else _fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def dump_json(path: str | Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_csv(path: str | Path, header: tuple[str, ...]) -> list[list[str]]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or tuple(h.strip() for h in got) != header:
            raise PersistError(f"{path}: line 1: header must be {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise PersistError(f"{path}: line {lineno}: expected {len(header)} fields")
            rows.append(row)
    return rows


def write_triplets(path: str | Path, mat: sp.spmatrix) -> None:
    coo = sp.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    integer = np.issubdtype(coo.dtype, np.integer)
    rows = []
    for k in order:
        v = coo.data[k]
        if v == 0:
            continue
        rows.append((int(coo.row[k]), int(coo.col[k]), int(v) if integer else float(v)))
    write_rows(path, ("i", "j", "value"), rows)


def read_triplets(path: str | Path, n: int, dtype=float) -> sp.csr_matrix:
    raw = _read_csv(path, ("i", "j", "value"))
    try:
        i = np.array([int(r[0]) for r in raw], dtype=np.int64)
        j = np.array([int(r[1]) for r in raw], dtype=np.int64)
        v = np.array([dtype(r[2]) for r in raw], dtype=dtype)
    except ValueError as exc:
        raise PersistError(f"{path}: bad triplet value ({exc})") from None
    if raw and (i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n):
        raise PersistError(f"{path}: index outside [0, {n})")
    mat = sp.csr_matrix((v, (i, j)), shape=(n, n), dtype=dtype)
    mat.sort_indices()
    return mat


def write_vector(path: str | Path, vec) -> None:
    write_rows(path, ("i", "value"), ((k, v) for k, v in enumerate(np.asarray(vec).tolist())))


def read_vector(path: str | Path, dtype=float) -> np.ndarray:
    raw = _read_csv(path, ("i", "value"))
    try:
        idx = [int(r[0]) for r in raw]
        vals = [dtype(r[1]) for r in raw]
    except ValueError as exc:
        raise PersistError(f"{path}: bad vector value ({exc})") from None
    if idx != list(range(len(idx))):
        raise PersistError(f"{path}: indices must run 0..n-1 in order")
    return np.array(vals, dtype=dtype)


def save_quantification(directory: str | Path, q: Quantification) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    c, m = q.counts, q.matrix
    write_triplets(d / "A.csv", c.A)
    write_triplets(d / "A_prime.csv", c.A_prime)
    write_triplets(d / "B.csv", m.B)
    write_vector(d / "tau.csv", m.tau)
    write_vector(d / "N.csv", c.N)
    write_vector(d / "N0.csv", c.N0)
    write_vector(d / "f0.csv", c.f0)
    dump_json(d / "header.json", {
        "n": m.n,
        "M_u": m.M_u,
        "n_links": m.n_links,
        "sparsity": m.sparsity,
        "r_id": q.r_id,
    })


def load_quantification(directory: str | Path) -> Quantification:
    d = Path(directory)
    try:
        header = json.loads((d / "header.json").read_text(encoding="utf-8"))
        n, M_u = int(header["n"]), int(header["M_u"])
    except (KeyError, ValueError, TypeError) as exc:
        raise PersistError(f"{d / 'header.json'}: bad header ({exc})") from None
    counts = InteractionCounts(
        A=read_triplets(d / "A.csv", n, int),
        A_prime=read_triplets(d / "A_prime.csv", n, int),
        N=read_vector(d / "N.csv", int),
        N0=read_vector(d / "N0.csv", int),
        f0=read_vector(d / "f0.csv", int),
        M_u=M_u,
    )
    matrix = InteractionMatrix(B=read_triplets(d / "B.csv", n), tau=read_vector(d / "tau.csv"), M_u=M_u)
    return Quantification(counts=counts, matrix=matrix, r_id=header.get("r_id"))


def load_matrix(b_path: str | Path, tau_path: str | Path, M_u: int = 0) -> InteractionMatrix:
    """``B`` triplets plus ``tau`` vector; ``n`` is the length of ``tau``."""
    tau = read_vector(tau_path)
    try:
        return InteractionMatrix(B=read_triplets(b_path, tau.size), tau=tau, M_u=M_u)
    except ValueError as exc:
        raise PersistError(str(exc)) from None


def write_network(path: str | Path, net: InteractionNetwork) -> None:
    weights = net.weights if net.weights is not None else [None] * net.n_links
    write_rows(path, ("i", "j", "b_ij", "weight"), ((i, j, b, w) for (i, j, b), w in zip(net.links, weights)))


def read_network_weights(path: str | Path) -> dict[tuple[int, int], float]:
    raw = _read_csv(path, ("i", "j", "b_ij", "weight"))
    try:
        return {(int(r[0]), int(r[1])): float(r[3]) for r in raw}
    except ValueError as exc:
        raise PersistError(f"{path}: bad weight ({exc})") from None
