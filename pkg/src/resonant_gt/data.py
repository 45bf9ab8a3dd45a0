"""Synthetic generators and loaders for delimited and sparse ``idx:val`` files."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, EmptySelection, ParseError
from .rng import Xoshiro256


@dataclass
class Dataset:
    x: np.ndarray
    name: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 2 or self.x.shape[0] < 1 or self.x.shape[1] < 1:
            raise DomainError(f"dataset must be a non-empty N x D matrix, got shape {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise DomainError("dataset contains NaN or Inf")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def gen_disc(n: int, radius: float = 1.0, seed: int = 0, stream: int = 0) -> Dataset:
    """``n`` points uniform on the disc: radius ``r sqrt(u)``, angle ``2 pi u'``."""
    if n < 1 or not radius > 0:
        raise DomainError("need n >= 1 and radius > 0")
    rng = Xoshiro256(seed, stream)
    pts = np.empty((n, 2))
    for k in range(n):
        r = radius * math.sqrt(rng.random())
        t = 2.0 * math.pi * rng.random()
        pts[k] = r * math.cos(t), r * math.sin(t)
    return Dataset(pts, f"disc{n}", {"kind": "synthetic", "generator": "disc", "seed": seed, "radius": radius})


def gen_gmm(n: int, means, var: float, seed: int = 0, stream: int = 0) -> Dataset:
    """Equal-weight isotropic mixture; component of point ``k`` is drawn uniformly."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if means.shape[0] < 1 or not var > 0:
        raise DomainError("need at least one component and var > 0")
    rng = Xoshiro256(seed, stream)
    m, d = means.shape
    sd = math.sqrt(var)
    pts = np.empty((n, d))
    for k in range(n):
        c = rng.integers(m)
        pts[k] = means[c] + sd * rng.normal(d)
    return Dataset(pts, f"gmm{m}x{n}", {"kind": "synthetic", "generator": "gmm", "seed": seed, "var": var})


PRESETS = {
    "I": {"generator": "disc", "radius": 1.0, "sigma": 1.0},
    "II": {"generator": "gmm", "means": [[2, 2], [2, -2], [-2, 2], [-2, -2]], "var": 0.5, "sigma": 10.0},
    "III": {"generator": "gmm", "means": [[5, 5], [5, -5], [-5, 5], [-5, -5]], "var": 0.5, "sigma": 20.0},
}


def synthetic(name: str, n: int = 300, seed: int = 0) -> Dataset:
    """One of the preset two-dimensional datasets I, II or III."""
    try:
        p = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown synthetic dataset {name!r}; choose from {sorted(PRESETS)}") from None
    if p["generator"] == "disc":
        ds = gen_disc(n, p["radius"], seed)
    else:
        ds = gen_gmm(n, p["means"], p["var"], seed)
    ds.name = f"dataset-{name}"
    return ds


def standardize(x: np.ndarray) -> np.ndarray:
    mu = x.mean(0)
    sd = x.std(0)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


_SPLIT_WS = re.compile(r"\s+")


def _split(line: str, delim: Optional[str]):
    if delim is None:
        return _SPLIT_WS.split(line.strip())
    return [c.strip() for c in line.split(delim)]


def _sniff(lines) -> Optional[str]:
    for ln in lines:
        if ln.strip():
            return "," if "," in ln else (";" if ";" in ln else ("\t" if "\t" in ln else None))
    return None


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror or exc}", path=path) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text: {exc.reason}", path=path) from None


def load_delimited(path, has_header: bool = False, label_column: int = -1, majority_label=None,
                   delimiter: Optional[str] = None, standardize_features: bool = False) -> Dataset:
    """Rows of numeric features plus one label column; keeps rows with ``majority_label``.

    ``majority_label=None`` selects the most frequent label (ties go to the one
    seen first). The delimiter is sniffed from the first data line when not
    given: comma, semicolon, tab, otherwise runs of whitespace.
    """
    lines = _read_lines(path)
    start = 1 if has_header else 0
    body = [(k + 1, ln) for k, ln in enumerate(lines) if k >= start and ln.strip() and not ln.lstrip().startswith("#")]
    if delimiter is None:
        delimiter = _sniff(ln for _, ln in body)
    rows = []
    labels = []
    width = None
    for lineno, ln in body:
        cells = _split(ln, delimiter)
        if width is None:
            width = len(cells)
            if width < 2:
                raise ParseError("need at least one feature and a label column", line=lineno, path=path)
            col = label_column if label_column >= 0 else width + label_column
            if not 0 <= col < width:
                raise ParseError(f"label column {label_column} out of range", line=lineno, path=path)
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", line=lineno, path=path)
        label = cells[col]
        try:
            feats = [float(c) for j, c in enumerate(cells) if j != col]
        except ValueError:
            raise ParseError("non-numeric feature value", line=lineno, path=path) from None
        if not all(math.isfinite(v) for v in feats):
            raise ParseError("non-finite feature value", line=lineno, path=path)
        rows.append(feats)
        labels.append(label)
    if not rows:
        raise EmptySelection(f"{path}: no data rows")
    if majority_label is None:
        majority_label = Counter(labels).most_common(1)[0][0]
    x = np.array([r for r, lab in zip(rows, labels) if _same_label(lab, majority_label)])
    if x.size == 0:
        raise EmptySelection(f"{path}: no rows with label {majority_label!r}")
    if standardize_features:
        x = standardize(x)
    return Dataset(x, Path(path).stem, {"kind": "file", "path": str(path), "format": "delimited", "label": majority_label})


def load_sparse_indexed(path, majority_label=None, n_features: Optional[int] = None) -> Dataset:
    """``label idx:val ...`` lines with 1-based indices; absent entries are zero."""
    lines = _read_lines(path)
    recs = []
    dmax = 0
    for k, ln in enumerate(lines):
        s = ln.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        label = parts[0]
        entries = {}
        for tok in parts[1:]:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(f"token {tok!r} is not idx:val", line=k + 1, path=path)
            try:
                j = int(idx)
                v = float(val)
            except ValueError:
                raise ParseError(f"token {tok!r} is not idx:val", line=k + 1, path=path) from None
            if j < 1:
                raise IndexError(f"{path}:line {k + 1}: feature index must be >= 1, got {j}")
            entries[j] = v
            dmax = max(dmax, j)
        recs.append((label, entries))
    if not recs:
        raise EmptySelection(f"{path}: no data rows")
    if majority_label is None:
        majority_label = Counter(lab for lab, _ in recs).most_common(1)[0][0]
    chosen = [e for lab, e in recs if _same_label(lab, majority_label)]
    if not chosen:
        raise EmptySelection(f"{path}: no rows with label {majority_label!r}")
    d = max(dmax, n_features or 0, 1)
    x = np.zeros((len(chosen), d))
    for r, e in enumerate(chosen):
        for j, v in e.items():
            x[r, j - 1] = v
    return Dataset(x, Path(path).stem, {"kind": "file", "path": str(path), "format": "sparse", "label": str(majority_label)})


def _same_label(a: str, b) -> bool:
    if str(a) == str(b):
        return True
    try:
        return float(a) == float(b)
    except (TypeError, ValueError):
        return False


BUILTIN = {"iris": {"file": "iris.csv", "has_header": True, "majority_label": "setosa"}}


def load_builtin(name: str, standardize_features: bool = False) -> Dataset:
    """Datasets bundled with the package (currently the Iris table)."""
    from importlib import resources

    try:
        spec = BUILTIN[name]
    except KeyError:
        raise DomainError(f"unknown builtin dataset {name!r}; choose from {sorted(BUILTIN)}") from None
    path = resources.files(__package__).joinpath("datasets", spec["file"])
    with resources.as_file(path) as p:
        ds = load_delimited(p, has_header=spec["has_header"], majority_label=spec["majority_label"],
                            standardize_features=standardize_features)
    ds.name = name
    return ds
