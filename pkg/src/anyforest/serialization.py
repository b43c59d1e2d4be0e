"""Forest documents (JSON) and step-order files (plain text)."""
import json
from pathlib import Path

import numpy as np

from .errors import SchemaError, StructureError
from .forest import Forest, Tree

SCHEMA_VERSION = "anyforest-1"
_NODE_KEYS = ("feature", "threshold", "left", "right", "prediction", "count")


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def export_forest(forest):
    """Forest -> JSON-compatible dict."""
    trees = []
    for tree in forest.trees:
        nodes = []
        for k in range(tree.n_nodes):
            leaf = tree.left[k] < 0
            nodes.append({
                "feature": None if leaf else int(tree.feature[k]),
                "threshold": None if leaf else float(tree.threshold[k]),
                "left": None if leaf else int(tree.left[k]),
                "right": None if leaf else int(tree.right[k]),
                "prediction": [float(p) for p in tree.value[k]],
                "count": int(tree.count[k]),
            })
        trees.append({"nodes": nodes})
    return {
        "version": SCHEMA_VERSION,
        "n_classes": forest.n_classes,
        "n_features": forest.n_features,
        "class_labels": [_plain(c) for c in forest.class_labels],
        "trees": trees,
    }


def _int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{what} must be an integer, got {v!r}")
    return v


def import_forest(doc):
    """JSON-compatible dict -> Forest.  Invalid documents raise, never get repaired."""
    if not isinstance(doc, dict):
        raise SchemaError("forest document must be an object")
    for key in ("version", "n_classes", "n_features", "class_labels", "trees"):
        if key not in doc:
            raise SchemaError(f"missing field '{key}'")
    if doc["version"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}, expected {SCHEMA_VERSION!r}")
    n_classes = _int(doc["n_classes"], "n_classes")
    n_features = _int(doc["n_features"], "n_features")
    if not isinstance(doc["trees"], list) or not doc["trees"]:
        raise SchemaError("'trees' must be a non-empty list")

    trees = []
    for ti, tdoc in enumerate(doc["trees"]):
        if not isinstance(tdoc, dict) or not isinstance(tdoc.get("nodes"), list) or not tdoc["nodes"]:
            raise SchemaError(f"tree {ti}: 'nodes' must be a non-empty list")
        feature, threshold, left, right, value, count = [], [], [], [], [], []
        for k, nd in enumerate(tdoc["nodes"]):
            where = f"tree {ti} node {k}"
            if not isinstance(nd, dict):
                raise SchemaError(f"{where}: node must be an object")
            missing = [key for key in _NODE_KEYS if key not in nd]
            if missing:
                raise SchemaError(f"{where}: missing {', '.join(missing)}")
            pred = nd["prediction"]
            if not isinstance(pred, list) or len(pred) != n_classes or \
                    not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in pred):
                raise SchemaError(f"{where}: prediction must be {n_classes} numbers")
            count.append(_int(nd["count"], f"{where} count"))
            value.append([float(p) for p in pred])
            if nd["left"] is None and nd["right"] is None:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
            elif nd["left"] is None or nd["right"] is None:
                raise StructureError(f"{where}: node has exactly one child")
            else:
                feature.append(_int(nd["feature"], f"{where} feature"))
                if not isinstance(nd["threshold"], (int, float)) or isinstance(nd["threshold"], bool):
                    raise SchemaError(f"{where}: threshold must be a number")
                threshold.append(float(nd["threshold"]))
                left.append(_int(nd["left"], f"{where} left"))
                right.append(_int(nd["right"], f"{where} right"))
        trees.append(Tree(feature, threshold, left, right, np.array(value, dtype=np.float64), count))
    return Forest(trees, n_classes, n_features, doc["class_labels"])


def save_forest(forest, path):
    Path(path).write_text(json.dumps(export_forest(forest), indent=1))


def load_forest(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return import_forest(doc)


def format_order(order):
    return (
        "budgets: " + " ".join(str(int(b)) for b in order.budgets) + "\n"
        + "steps: " + " ".join(str(int(s)) for s in order.steps) + "\n"
    )


def parse_order(text):
    from .lattice import StepOrder

    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        if not sep or key.strip() not in ("budgets", "steps"):
            raise SchemaError(f"unexpected line in order file: {line!r}")
        try:
            fields[key.strip()] = [int(tok) for tok in rest.split()]
        except ValueError:
            raise SchemaError(f"non-integer entry in line {line!r}") from None
    if set(fields) != {"budgets", "steps"}:
        raise SchemaError("order file needs a 'budgets:' and a 'steps:' line")
    return StepOrder(fields["steps"], fields["budgets"])


def save_order(order, path):
    Path(path).write_text(format_order(order))


def load_order(path):
    return parse_order(Path(path).read_text())
