"""On-disk problem bundles.

A bundle is a directory holding

``manifest.txt``
    ``key = value`` lines: dimensions, regularizer, file names and any
    generator settings.
``A.csv``, ``B.csv``, ``b.csv``, ``J.csv``, ``q.csv``
    dense matrices, one CSV line per matrix row, 17 significant digits
    (vectors are stored as a single column).
``losses.csv``
    one ``kind,offset,label`` line per data column.
``truth.csv`` (optional)
    ground-truth ``x`` and noise ``w`` written by the generator.
``reference.txt`` (optional)
    ``key = value`` lines with the reference optimum.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .dual import ProblemSpec
from .prox import Loss, Regularizer

FORMAT = "ardca-bundle-1"
MANIFEST = "manifest.txt"
REFERENCE = "reference.txt"
TRUTH = "truth.csv"


class BundleError(ValueError):
    pass


def write_kv(path, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, float):
                v = format(v, ".17g")
            fh.write(f"{k} = {v}\n")


def read_kv(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise BundleError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip()] = val.strip()
    return out


def _save_matrix(path, M) -> None:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    with open(path, "w") as fh:
        if M.size:
            np.savetxt(fh, M, fmt="%.17g", delimiter=",")


def _load_matrix(path, rows: int, cols: int) -> np.ndarray:
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    if M.shape != (rows, cols):
        raise BundleError(f"{path}: expected shape {(rows, cols)}, found {M.shape}")
    return M


def save_bundle(directory, spec: ProblemSpec, meta: dict | None = None,
                truth: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"format": FORMAT, "t": spec.t, "n": spec.n, "p": spec.p, "m": spec.m,
                "reg_kind": spec.reg.kind, "reg_mu": float(spec.reg.mu),
                "reg_sigma": float(spec.reg.sigma),
                "A": "A.csv", "B": "B.csv", "b": "b.csv", "J": "J.csv", "q": "q.csv",
                "losses": "losses.csv"}
    for k, v in (meta or {}).items():
        manifest[f"meta.{k}"] = v
    _save_matrix(d / "A.csv", spec.A)
    _save_matrix(d / "B.csv", spec.B)
    _save_matrix(d / "b.csv", spec.b)
    _save_matrix(d / "J.csv", spec.J)
    _save_matrix(d / "q.csv", spec.q)
    with open(d / "losses.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for loss in spec.losses:
            w.writerow([loss.kind, format(loss.offset, ".17g"), format(loss.label, ".17g")])
    if truth:
        names = list(truth)
        cols = [np.asarray(truth[k], dtype=float) for k in names]
        with open(d / TRUTH, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "index", "value"])
            for name, col in zip(names, cols):
                for i, v in enumerate(col):
                    w.writerow([name, i, format(v, ".17g")])
        manifest["truth"] = TRUTH
    write_kv(d / MANIFEST, manifest)
    return d


def load_bundle(directory) -> tuple[ProblemSpec, dict]:
    """Read a bundle; returns the spec and the manifest dictionary."""
    d = Path(directory)
    if not (d / MANIFEST).is_file():
        raise BundleError(f"{d}: no {MANIFEST} found")
    man = read_kv(d / MANIFEST)
    if man.get("format") != FORMAT:
        raise BundleError(f"{d}: unsupported bundle format {man.get('format')!r}")
    try:
        t, n, p, m = (int(man[k]) for k in ("t", "n", "p", "m"))
        reg = Regularizer(man["reg_kind"], float(man["reg_mu"]), float(man["reg_sigma"]))
    except KeyError as exc:
        raise BundleError(f"{d}: manifest lacks {exc}") from None
    A = _load_matrix(d / man["A"], t, n)
    B = _load_matrix(d / man["B"], p, t)
    b = _load_matrix(d / man["b"], p, 1).ravel()
    J = _load_matrix(d / man["J"], m, t)
    q = _load_matrix(d / man["q"], m, 1).ravel()
    losses = []
    with open(d / man["losses"], newline="") as fh:
        for row in csv.reader(fh):
            if row:
                losses.append(Loss(row[0], float(row[1]), float(row[2])))
    spec = ProblemSpec(A, reg, losses, B, b, J, q)
    return spec, man


def load_truth(directory) -> dict:
    path = Path(directory) / TRUTH
    out: dict[str, list] = {}
    if not path.is_file():
        return {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for name, _, val in reader:
            out.setdefault(name, []).append(float(val))
    return {k: np.array(v) for k, v in out.items()}


def save_reference(directory, values: dict) -> None:
    write_kv(Path(directory) / REFERENCE, values)


def load_reference(directory) -> dict | None:
    path = Path(directory) / REFERENCE
    if not path.is_file():
        return None
    raw = read_kv(path)
    out = {}
    for k, v in raw.items():
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


def exists(directory) -> bool:
    return os.path.isfile(os.path.join(directory, MANIFEST))
