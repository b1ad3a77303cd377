"""Binary class hierarchy induced from classifier weight rows.

Rows are L2-normalized and agglomeratively merged under average linkage
on cosine distance. Leaf i keeps class i's raw weight row as its
representative; an inner node's representative is the arithmetic mean
of the raw rows beneath it. Merge ties break on the smaller id pair, so
induction is a pure function of the weight matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateWeights, InsufficientClasses, SchemaMismatch

HIERARCHY_FORMAT_VERSION = 1


@dataclass
class Node:
    id: int
    children: tuple[int, ...]  # empty for leaves, exactly two otherwise
    class_set: frozenset[int]
    representative: np.ndarray  # d-vector, float64
    leaf_class: int | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class InducedHierarchy:
    nodes: dict[int, Node]
    root_id: int
    d: int
    num_classes: int
    class_names: list[str] | None = None
    _parent: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._parent:
            for node in self.nodes.values():
                for child in node.children:
                    self._parent[child] = node.id

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    @property
    def root(self) -> Node:
        return self.nodes[self.root_id]

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def inner_nodes(self) -> list[Node]:
        """Inner nodes in a fixed order (ascending id)."""
        return [self.nodes[i] for i in sorted(self.nodes) if not self.nodes[i].is_leaf]

    def leaf_for_class(self, class_id: int) -> Node:
        for n in self.nodes.values():
            if n.leaf_class == class_id:
                return n
        raise KeyError(f"no leaf for class {class_id}")

    def path_to_node(self, node_id: int) -> list[int]:
        """Node ids from the root down to ``node_id`` inclusive."""
        if node_id not in self.nodes:
            raise KeyError(f"no node {node_id}")
        path = [node_id]
        while node_id != self.root_id:
            node_id = self._parent[node_id]
            path.append(node_id)
        return path[::-1]

    def path_to_class(self, class_id: int) -> list[int]:
        """Node ids from the root down to the class's leaf."""
        return self.path_to_node(self.leaf_for_class(class_id).id)

    def leaf_depth(self, class_id: int) -> int:
        """Root depth is 0."""
        return len(self.path_to_class(class_id)) - 1

    def lowest_common_ancestor(self, class_a: int, class_b: int) -> int:
        pa = self.path_to_class(class_a)
        pb = set(self.path_to_class(class_b))
        for node_id in reversed(pa):
            if node_id in pb:
                return node_id
        return self.root_id

    def structure_signature(self) -> frozenset[frozenset[int]]:
        """The set of inner-node class sets; identifies the tree shape."""
        return frozenset(n.class_set for n in self.inner_nodes())


def _normalized_rows(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise DegenerateWeights("weight matrix must be 2-D")
    if not np.all(np.isfinite(w)):
        raise DegenerateWeights("weight matrix contains non-finite entries")
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0):
        raise DegenerateWeights("weight matrix contains a zero row")
    return w / norms[:, None]


def induce(weights: np.ndarray) -> InducedHierarchy:
    """Build the hierarchy from a C x d class weight matrix."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 2:
        raise InsufficientClasses("need at least two class rows")
    unit = _normalized_rows(w)
    num_classes, d = w.shape

    base = 1.0 - unit @ unit.T  # cosine distances between leaves
    nodes: dict[int, Node] = {
        c: Node(
            id=c,
            children=(),
            class_set=frozenset([c]),
            representative=w[c].copy(),
            leaf_class=c,
        )
        for c in range(num_classes)
    }
    active = list(range(num_classes))
    # average linkage between current clusters, keyed by (low id, high id)
    dist: dict[tuple[int, int], float] = {
        (a, b): float(base[a, b])
        for i, a in enumerate(active)
        for b in active[i + 1 :]
    }
    sizes = {c: 1 for c in active}
    next_id = num_classes
    while len(active) > 1:
        best = min(dist.items(), key=lambda kv: (kv[1], kv[0]))[0]
        a, b = best
        merged = Node(
            id=next_id,
            children=(a, b),
            class_set=nodes[a].class_set | nodes[b].class_set,
            representative=np.mean(
                [w[c] for c in sorted(nodes[a].class_set | nodes[b].class_set)], axis=0
            ),
        )
        nodes[next_id] = merged
        active = [k for k in active if k not in (a, b)]
        for k in active:
            da = dist.pop((min(a, k), max(a, k)))
            db = dist.pop((min(b, k), max(b, k)))
            dist[(k, next_id)] = (sizes[a] * da + sizes[b] * db) / (sizes[a] + sizes[b])
        del dist[(a, b)]
        sizes[next_id] = sizes.pop(a) + sizes.pop(b)
        active.append(next_id)
        next_id += 1

    return InducedHierarchy(
        nodes=nodes, root_id=active[0], d=d, num_classes=num_classes
    )


def representatives_from_weights(h: InducedHierarchy, weights: np.ndarray) -> dict[int, np.ndarray]:
    """Recompute every node's representative from a (possibly updated) W.

    The tree structure is taken as given; only the vectors move. Used
    during fine-tuning where the classifier weights change each step.
    """
    w = np.asarray(weights, dtype=np.float64)
    reps = {}
    for node in h.nodes.values():
        reps[node.id] = w[sorted(node.class_set)].mean(axis=0)
    return reps


# --- persistence -----------------------------------------------------------


def _float_list(vec: np.ndarray) -> list[str]:
    # decimal strings round-trip float64 exactly under Python's repr
    return [repr(float(v)) for v in vec]


def save_hierarchy(h: InducedHierarchy, path: str | Path) -> None:
    doc = {
        "format_version": HIERARCHY_FORMAT_VERSION,
        "d": h.d,
        "C": h.num_classes,
        "root_id": h.root_id,
        "class_names": h.class_names,
        "nodes": [
            {
                "id": node.id,
                "children": list(node.children),
                **({"leaf_class": node.leaf_class} if node.is_leaf else {}),
                "class_set": sorted(node.class_set),
                "representative": _float_list(node.representative),
            }
            for _, node in sorted(h.nodes.items())
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_hierarchy(path: str | Path) -> InducedHierarchy:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"cannot read hierarchy file: {exc}") from exc
    for key in ("format_version", "d", "C", "root_id", "nodes"):
        if key not in doc:
            raise SchemaMismatch(f"hierarchy file missing key {key!r}")
    if doc["format_version"] != HIERARCHY_FORMAT_VERSION:
        raise SchemaMismatch(f"unsupported hierarchy version {doc['format_version']}")
    d, num_classes = doc["d"], doc["C"]
    nodes: dict[int, Node] = {}
    for ent in doc["nodes"]:
        try:
            rep = np.array([float(v) for v in ent["representative"]], dtype=np.float64)
            node = Node(
                id=int(ent["id"]),
                children=tuple(int(c) for c in ent["children"]),
                class_set=frozenset(int(c) for c in ent["class_set"]),
                representative=rep,
                leaf_class=ent.get("leaf_class"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad node entry: {exc}") from exc
        if node.id in nodes:
            raise SchemaMismatch(f"duplicate node id {node.id}")
        if len(node.representative) != d:
            raise SchemaMismatch(f"node {node.id} representative has wrong length")
        if node.children and len(node.children) != 2:
            raise SchemaMismatch(f"node {node.id} must have exactly two children")
        nodes[node.id] = node
    if doc["root_id"] not in nodes:
        raise SchemaMismatch("root_id does not name a node")
    leaf_classes = [n.leaf_class for n in nodes.values() if n.is_leaf]
    if any(c is None for c in leaf_classes):
        raise SchemaMismatch("leaf without leaf_class")
    if sorted(leaf_classes) != list(range(num_classes)):
        raise SchemaMismatch("leaf classes must biject with 0..C-1")
    for node in nodes.values():
        if not node.is_leaf:
            union = frozenset()
            for child in node.children:
                if child not in nodes:
                    raise SchemaMismatch(f"node {node.id} references missing child")
                if nodes[child].class_set & union:
                    raise SchemaMismatch(f"node {node.id} children overlap")
                union |= nodes[child].class_set
            if union != node.class_set:
                raise SchemaMismatch(f"node {node.id} class_set is not its children's union")
    return InducedHierarchy(
        nodes=nodes,
        root_id=doc["root_id"],
        d=d,
        num_classes=num_classes,
        class_names=doc.get("class_names"),
    )
