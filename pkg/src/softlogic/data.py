"""Tabular loading, cleaning, encoding, splitting, and synthetic datasets.

Tables are small ordered-column containers over python row tuples; heavy
numeric work happens only after encode() turns them into float64 arrays.
Column kinds: "numeric" (float cells), "categorical" (string cells fed to
one-hot features), "label" (string class cells, or float targets under the
regression scheme).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

COLUMN_KINDS = ("numeric", "categorical", "label")
LABEL_SCHEMES = ("multilabel", "singlelabel", "regression")
SYNTH_KINDS = ("protocol_flags", "attack_categories", "three_class", "beam_rfs")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise DataError(f"unknown column kind {self.kind!r}; expected {COLUMN_KINDS}")


@dataclass
class DatasetTable:
    columns: list
    rows: list

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in {names}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise DataError(
                    f"row {i} has {len(row)} cells for {len(self.columns)} columns"
                )

    @property
    def n_rows(self):
        return len(self.rows)

    def column_index(self, name):
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DataError(f"no column named {name!r}")

    def values(self, name):
        i = self.column_index(name)
        return [row[i] for row in self.rows]

    def of_kind(self, kind):
        return [c for c in self.columns if c.kind == kind]


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def load_schema(path):
    """Schema file: one "name,kind" per line, "#" comments, order is column order."""
    columns = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected 'name,kind', got {raw!r}")
            columns.append(Column(parts[0], parts[1]))
    if not columns:
        raise DataError(f"{path}: schema file declares no columns")
    return columns


def _type_cell(cell, kind):
    cell = cell.strip()
    if kind == "numeric":
        try:
            return float(cell)
        except ValueError:
            return None
    if cell == "":
        return None
    if kind == "label":
        return cell.rstrip(".")
    return cell


def load_table(path, schema, has_header="auto"):
    """Read a delimited text file into a typed table.

    schema: list of Column giving order and kinds.  has_header: True,
    False, or "auto" (treat the first row as a header when it matches the
    schema's column names).  Unparseable numeric cells become missing
    markers that clean() later drops; label cells lose trailing dots.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        raw_rows = [row for row in reader if row and any(c.strip() for c in row)]
    if not raw_rows:
        raise DataError(f"{path}: file holds no data rows")
    names = [c.name for c in schema]
    start = 0
    if has_header == "auto":
        start = 1 if [c.strip() for c in raw_rows[0]] == names else 0
    elif has_header:
        start = 1
    rows = []
    for i, raw in enumerate(raw_rows[start:], start=start + 1):
        if len(raw) != len(schema):
            raise DataError(
                f"{path}: row {i} has {len(raw)} cells for {len(schema)} columns"
            )
        rows.append(tuple(_type_cell(c, col.kind) for c, col in zip(raw, schema)))
    return DatasetTable(list(schema), rows)


def clean(t: DatasetTable) -> DatasetTable:
    """Drop rows with missing or non-finite cells, then exact duplicates."""
    out, seen = [], set()
    for row in t.rows:
        ok = True
        for cell in row:
            if cell is None:
                ok = False
                break
            if isinstance(cell, float) and not np.isfinite(cell):
                ok = False
                break
        if not ok:
            continue
        if row in seen:
            continue
        seen.add(row)
        out.append(row)
    return DatasetTable(list(t.columns), out)


# ---------------------------------------------------------------------------
# attack-category grouping
# ---------------------------------------------------------------------------

KDD_CATEGORIES = {
    "DOS": ("back", "land", "neptune", "pod", "smurf", "teardrop"),
    "R2L": (
        "ftp_write",
        "guess_passwd",
        "imap",
        "multihop",
        "phf",
        "spy",
        "warezclient",
        "warezmaster",
    ),
    "U2R": ("buffer_overflow", "loadmodule", "perl", "rootkit"),
    # "portseep" keeps the source text's spelling of portsweep
    "probe": ("ipsweep", "nmap", "portsweep", "portseep", "satan"),
    "normal": ("normal",),
}

_KDD_LOOKUP = {
    name: category for category, names in KDD_CATEGORIES.items() for name in names
}


def map_kdd_category(attack_name: str) -> str:
    """Group a connection label into normal/DOS/probe/R2L/U2R."""
    key = attack_name.strip().rstrip(".")
    try:
        return _KDD_LOOKUP[key]
    except KeyError:
        raise DataError(f"unknown connection label {attack_name!r}") from None


def group_kdd_labels(t: DatasetTable, label_column="label") -> DatasetTable:
    """Replace each connection label cell with its 5-way category."""
    idx = t.column_index(label_column)
    rows = [
        row[:idx] + (map_kdd_category(row[idx]),) + row[idx + 1 :] for row in t.rows
    ]
    return DatasetTable(list(t.columns), rows)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


@dataclass
class EncodingSpec:
    """Learned column transforms: vocabularies, scaling ranges, label scheme."""

    label_scheme: str
    vocabularies: dict = field(default_factory=dict)  # column -> value tuple
    scaling: dict = field(default_factory=dict)  # column -> (min, max)
    label_order: tuple = ()  # label columns in output order

    def __post_init__(self):
        if self.label_scheme not in LABEL_SCHEMES:
            raise DataError(
                f"unknown label scheme {self.label_scheme!r}; expected {LABEL_SCHEMES}"
            )
        for col, vocab in self.vocabularies.items():
            if not vocab:
                raise DataError(f"empty vocabulary for column {col!r}")
        for col, (lo, hi) in self.scaling.items():
            if not lo < hi:
                raise DataError(f"degenerate scaling range for {col!r}: [{lo}, {hi}]")

    def label_names(self):
        """One name per encoded target column, across label columns in order."""
        names = []
        for col in self.label_order:
            names.extend(self.vocabularies[col])
        return tuple(names)


def infer_encoding(t: DatasetTable, label_scheme: str, scale_numeric=True) -> EncodingSpec:
    """Vocabularies in first-appearance order; min-max ranges where sensible."""
    vocab, scaling = {}, {}
    label_order = []
    for col in t.columns:
        if col.kind == "numeric" or (col.kind == "label" and label_scheme == "regression"):
            if col.kind == "numeric" and scale_numeric:
                vals = [v for v in t.values(col.name) if v is not None]
                if vals:
                    lo, hi = min(vals), max(vals)
                    if lo < hi:
                        scaling[col.name] = (float(lo), float(hi))
            continue
        seen = dict.fromkeys(v for v in t.values(col.name) if v is not None)
        if not seen:
            raise DataError(f"column {col.name!r} has no usable values")
        vocab[col.name] = tuple(seen)
        if col.kind == "label":
            label_order.append(col.name)
    if label_scheme == "singlelabel" and len(label_order) != 1:
        raise DataError(
            f"single-label scheme needs exactly one label column, found {len(label_order)}"
        )
    return EncodingSpec(label_scheme, vocab, scaling, tuple(label_order))


def _scale(value, lo, hi):
    return (value - lo) / (hi - lo)


def encode(t: DatasetTable, spec: EncodingSpec):
    """Turn a cleaned table into (features, targets) float64 arrays.

    Features: numeric columns (min-max scaled when the spec has a range)
    then one-hot categorical columns, in table column order.  Targets:
    multilabel = concatenated one-hot of every label column; singlelabel =
    integer class indices; regression = raw float targets, never scaled.
    """
    n = t.n_rows
    feat_parts, target_parts = [], []
    single_idx = None
    for col in t.columns:
        cells = t.values(col.name)
        if col.kind == "numeric":
            arr = np.asarray(cells, dtype=np.float64)
            if col.name in spec.scaling:
                lo, hi = spec.scaling[col.name]
                arr = _scale(arr, lo, hi)
            feat_parts.append(arr.reshape(n, 1))
            continue
        if col.kind == "label" and spec.label_scheme == "regression":
            target_parts.append(np.asarray(cells, dtype=np.float64).reshape(n, 1))
            continue
        vocab = spec.vocabularies.get(col.name)
        if vocab is None:
            raise DataError(f"encoding spec lacks a vocabulary for column {col.name!r}")
        index = {v: i for i, v in enumerate(vocab)}
        try:
            ids = np.asarray([index[v] for v in cells], dtype=np.intp)
        except KeyError as e:
            raise DataError(
                f"value {e.args[0]!r} in column {col.name!r} is outside the vocabulary"
            ) from None
        onehot = np.zeros((n, len(vocab)))
        onehot[np.arange(n), ids] = 1.0
        if col.kind == "categorical":
            feat_parts.append(onehot)
        elif spec.label_scheme == "singlelabel":
            single_idx = ids
        else:
            target_parts.append(onehot)
    features = np.hstack(feat_parts) if feat_parts else np.zeros((n, 0))
    if spec.label_scheme == "singlelabel":
        if single_idx is None:
            raise DataError("no label column to encode")
        return features, single_idx
    if not target_parts:
        raise DataError("no label column to encode")
    return features, np.hstack(target_parts)


def decode_onehot(spec: EncodingSpec, column: str, onehot: np.ndarray):
    """Inverse of one label column's one-hot block; argmax per row."""
    vocab = spec.vocabularies[column]
    if onehot.shape[1] != len(vocab):
        raise DataError(
            f"{onehot.shape[1]} columns for a {len(vocab)}-value vocabulary"
        )
    return [vocab[i] for i in np.argmax(onehot, axis=1)]


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------


@dataclass
class FoldPlan:
    k: int
    seed: int
    folds: list  # per-fold validation index arrays

    def train_indices(self, fold: int) -> np.ndarray:
        rest = [f for i, f in enumerate(self.folds) if i != fold]
        return np.concatenate(rest)


def split(n: int, test_fraction: float, seed: int):
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test fraction must be in (0, 1), got {test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        n_test = n - 1
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def kfold(n: int, k: int, seed: int) -> FoldPlan:
    if not 2 <= k <= n:
        raise DataError(f"k must be in [2, {n}], got {k}")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds, start = [], 0
    for s in sizes:
        folds.append(np.sort(perm[start : start + s]))
        start += s
    return FoldPlan(k=k, seed=seed, folds=folds)


# ---------------------------------------------------------------------------
# synthetic datasets
# ---------------------------------------------------------------------------


def _largest_remainder_counts(n, fractions):
    raw = [n * f for f in fractions]
    counts = [int(x) for x in raw]
    short = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in order[:short]:
        counts[i] += 1
    return counts


_PROTOCOL_FLAGS = {
    "tcp": ("s0", "s1", "rstr", "rsto", "sh"),
    "udp": ("sf",),
    "icmp": ("rej", "oth", "s2", "s3", "rstos0"),
}


def _synth_protocol_flags(n, rng):
    counts = _largest_remainder_counts(n, [0.40, 0.35, 0.25])
    rows = []
    for proto, count in zip(("tcp", "udp", "icmp"), counts):
        flags = _PROTOCOL_FLAGS[proto]
        for _ in range(count):
            rows.append((proto, flags[int(rng.integers(0, len(flags)))]))
    rng.shuffle(rows)
    return DatasetTable([Column("protocol", "label"), Column("flag", "label")], rows)


_ATTACK_CLASSES = ("normal", "DOS", "probe", "R2L", "U2R")
_ATTACK_FRACTIONS = (0.52, 0.25, 0.12, 0.08, 0.03)

_THREE_CLASSES = ("BENIGN", "DDoS", "PortScan")
_THREE_COUNTS = (57305, 212718, 128005)


def _synth_clusters(n, rng, classes, fractions, width, spread=3.0, sigma=0.55):
    counts = _largest_remainder_counts(n, fractions)
    rows = []
    for ci, (cls, count) in enumerate(zip(classes, counts)):
        center = np.zeros(width)
        center[ci % width] = spread
        pts = rng.normal(loc=center, scale=sigma, size=(count, width))
        for p in pts:
            rows.append(tuple(float(v) for v in p) + (cls,))
    rng.shuffle(rows)
    columns = [Column(f"f{i}", "numeric") for i in range(width)]
    columns.append(Column("label", "label"))
    return DatasetTable(columns, rows)


def _synth_beam(n, rng):
    t = rng.uniform(0.0, 1.0, size=n)
    two_pi = 2.0 * np.pi
    feats = np.stack(
        [
            np.sin(two_pi * t),
            np.cos(two_pi * t),
            t * t,
            (1.0 - t) ** 2,
            np.sin(two_pi * 2.0 * t),
            np.exp(-t),
            t ** 3,
            np.cos(two_pi * 3.0 * t),
        ],
        axis=1,
    )
    feats = feats + rng.normal(scale=0.002, size=feats.shape)
    rows = [tuple(float(v) for v in feats[i]) + (float(t[i]),) for i in range(n)]
    columns = [Column(f"rfs{i + 1}", "numeric") for i in range(8)]
    columns.append(Column("position", "label"))
    return DatasetTable(columns, rows)


def synth_generate(kind: str, n: int, seed: int) -> DatasetTable:
    """Desk-scale synthetic stand-ins for the full-size datasets."""
    if kind not in SYNTH_KINDS:
        raise DataError(f"unknown synthetic kind {kind!r}; expected {SYNTH_KINDS}")
    if n < 10:
        raise DataError(f"synthetic tables need n >= 10, got {n}")
    rng = np.random.default_rng(seed)
    if kind == "protocol_flags":
        return _synth_protocol_flags(n, rng)
    if kind == "attack_categories":
        return _synth_clusters(n, rng, _ATTACK_CLASSES, _ATTACK_FRACTIONS, width=8)
    if kind == "three_class":
        total = float(sum(_THREE_COUNTS))
        fractions = [c / total for c in _THREE_COUNTS]
        return _synth_clusters(n, rng, _THREE_CLASSES, fractions, width=19)
    return _synth_beam(n, rng)
