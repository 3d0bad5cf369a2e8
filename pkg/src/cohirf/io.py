"""Dataset loading, preprocessing and result serialization.

CSV input is comma separated, UTF-8, with a header row. Column kinds come
from an optional JSON schema mapping column names to one of
``continuous``, ``categorical``, ``label`` or ``ignore``; columns missing
from the schema are continuous when every value parses as a float and
categorical otherwise. A label column is never inferred.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import LoadError
from .hierarchy import HierarchyNode, HierarchyTree

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
LABEL = "label"
IGNORE = "ignore"
KINDS = (CONTINUOUS, CATEGORICAL, LABEL, IGNORE)


@dataclass
class DatasetSchema:
    kinds: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, kind in self.kinds.items():
            if kind not in KINDS:
                raise LoadError(f"column {name!r}: unknown kind {kind!r}, expected one of {KINDS}")
        if sum(kind == LABEL for kind in self.kinds.values()) > 1:
            raise LoadError("schema declares more than one label column")

    @classmethod
    def from_file(cls, path) -> "DatasetSchema":
        """Read a JSON schema: either ``{"columns": {...}}`` or the mapping itself."""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise LoadError(f"{path}: cannot read schema: {exc}") from exc
        if isinstance(data, dict) and "columns" in data:
            data = data["columns"]
        if not isinstance(data, dict):
            raise LoadError(f"{path}: schema must map column names to kinds")
        return cls(dict(data))

    def to_dict(self) -> dict:
        return {"columns": dict(self.kinds)}


@dataclass
class Dataset:
    X: np.ndarray
    labels: Optional[np.ndarray]
    feature_names: list
    continuous: np.ndarray  # boolean mask over the columns of X
    label_names: Optional[list] = None


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _first_appearance_codes(values):
    mapping = {}
    codes = np.array([mapping.setdefault(v, len(mapping)) for v in values], dtype=np.int64)
    return codes, list(mapping)


def load_dataset(path, schema: Optional[DatasetSchema] = None, *, label_column: Optional[str] = None,
                 preprocess: bool = False) -> Dataset:
    """Parse a CSV file into a feature matrix and optional label partition.

    Categorical columns are one-hot encoded in place, categories ordered by
    first appearance. With ``preprocess`` the continuous columns are
    standardized (indicator columns are left as 0/1).
    """
    path = Path(path)
    schema = schema or DatasetSchema()
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise LoadError(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise LoadError(f"{path}: not valid UTF-8: {exc}") from exc
    if not rows:
        raise LoadError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise LoadError(f"{path}: row {i + 2} has {len(r)} fields, header has {len(header)}")
    unknown = set(schema.kinds) - set(header)
    if unknown:
        raise LoadError(f"{path}: schema names unknown columns {sorted(unknown)}")
    if label_column is not None and label_column not in header:
        raise LoadError(f"{path}: label column {label_column!r} not in header")

    columns = list(zip(*body)) if body else [() for _ in header]
    blocks, names, cont_mask = [], [], []
    labels = label_names = None
    for j, name in enumerate(header):
        values = [v.strip() for v in columns[j]]
        kind = schema.kinds.get(name)
        if name == label_column:
            kind = LABEL
        if kind is None:
            kind = CONTINUOUS if all(_is_float(v) for v in values) else CATEGORICAL
        if kind == IGNORE:
            continue
        if kind == LABEL:
            labels, label_names = _first_appearance_codes(values)
        elif kind == CONTINUOUS:
            col = np.empty(len(values))
            for i, v in enumerate(values):
                try:
                    col[i] = float(v)
                except ValueError:
                    raise LoadError(
                        f"{path}: row {i + 2}, column {name!r}: cannot parse {v!r} as a number"
                    ) from None
            blocks.append(col[:, None])
            names.append(name)
            cont_mask.append(True)
        else:
            codes, cats = _first_appearance_codes(values)
            onehot = np.zeros((len(values), len(cats)))
            onehot[np.arange(len(values)), codes] = 1.0
            blocks.append(onehot)
            names.extend(f"{name}={c}" for c in cats)
            cont_mask.extend([False] * len(cats))

    if not blocks:
        raise LoadError(f"{path}: no feature columns")
    X = np.hstack(blocks) if body else np.empty((0, len(names)))
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise LoadError(f"{path}: row {bad[0] + 2}, column {names[bad[1]]!r}: non-finite value")
    cont = np.array(cont_mask, dtype=bool)
    if preprocess:
        X = standardize(X, cont)
    return Dataset(X, labels, names, cont, label_names)


def load_csv(path, schema: Optional[DatasetSchema] = None, **kwargs):
    """``(X, labels)`` from a CSV file; ``labels`` is None without a label column."""
    ds = load_dataset(path, schema, **kwargs)
    return ds.X, ds.labels


def standardize(X, columns=None) -> np.ndarray:
    """Zero mean, unit population standard deviation per selected column.

    ``columns`` is a boolean mask or index array; all columns by default.
    Constant columns become all zeros.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    if X.ndim == 1:
        X = X[:, None]
    cols = np.arange(X.shape[1]) if columns is None else np.arange(X.shape[1])[columns]
    if X.shape[0] == 0 or cols.size == 0:
        return X
    sub = X[:, cols]
    mean = sub.mean(axis=0)
    sd = sub.std(axis=0)
    centered = sub - mean
    scaled = np.divide(centered, sd, out=np.zeros_like(centered), where=sd > 0)
    X[:, cols] = scaled
    return X


def write_dataset_csv(path, X, labels=None, label_column: str = "label") -> None:
    """Write ``X`` (and labels) in the CSV layout :func:`load_csv` reads."""
    X = np.asarray(X)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"x{j}" for j in range(X.shape[1])]
        if labels is not None:
            header.append(label_column)
        w.writerow(header)
        for i, row in enumerate(X):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            w.writerow(out)


def labels_csv(labels) -> bytes:
    lines = ["sample_id,label"]
    lines.extend(f"{i},{int(v)}" for i, v in enumerate(labels))
    return ("\n".join(lines) + "\n").encode("utf-8")


# hierarchy export


def export_hierarchy(tree: HierarchyTree, fmt: str = "json") -> bytes:
    """Serialize a hierarchy as Graphviz DOT or nested JSON."""
    fmt = fmt.lower()
    if fmt == "dot":
        return _to_dot(tree).encode("utf-8")
    if fmt == "json":
        return json.dumps(hierarchy_to_dict(tree), separators=(",", ":")).encode("utf-8")
    raise ValueError(f"unknown hierarchy format {fmt!r}; use 'dot' or 'json'")


def _to_dot(tree: HierarchyTree) -> str:
    out = ["digraph cohirf {", "  rankdir=LR;", "  node [shape=box];"]
    for nd in tree.nodes:
        label = f"step {nd.step}\\nsize {nd.size}\\nmedoid {nd.medoid}"
        out.append(f'  n{nd.id} [label="{label}"];')
    for nd in tree.nodes:
        for c in nd.children:
            out.append(f"  n{c} -> n{nd.id};")
    out.append("}")
    return "\n".join(out) + "\n"


def hierarchy_to_dict(tree: HierarchyTree) -> dict:
    def build(node_id):
        nd = tree.nodes[node_id]
        return {
            "id": nd.id,
            "step": nd.step,
            "medoid": nd.medoid,
            "size": nd.size,
            "children": [build(c) for c in nd.children],
        }

    return {"n_leaves": tree.n_leaves, "roots": [build(r) for r in tree.roots]}


def hierarchy_from_dict(data: dict) -> HierarchyTree:
    found = {}
    stack = list(data["roots"])
    while stack:
        d = stack.pop()
        kids = tuple(int(c["id"]) for c in d["children"])
        found[int(d["id"])] = HierarchyNode(int(d["id"]), int(d["step"]), int(d["medoid"]), kids, int(d["size"]))
        stack.extend(d["children"])
    ids = sorted(found)
    if ids != list(range(len(ids))):
        raise LoadError("hierarchy node ids are not contiguous from 0")
    return HierarchyTree(
        tuple(found[i] for i in ids),
        tuple(int(r["id"]) for r in data["roots"]),
        int(data["n_leaves"]),
    )


def import_hierarchy(payload) -> HierarchyTree:
    """Inverse of :func:`export_hierarchy` for the JSON format."""
    if isinstance(payload, (bytes, bytearray)):
        payload = payload.decode("utf-8")
    return hierarchy_from_dict(json.loads(payload))


def write_bytes_atomic(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
