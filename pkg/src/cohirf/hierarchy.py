"""Medoid-lineage forest produced by a CoHiRF fit.

Node ``i < n_leaves`` is the leaf for original sample ``i``. Every later node
stands for one consensus group at some step ``e >= 1``; its children are the
step ``e - 1`` nodes that were merged into it and its ``medoid`` is the
original sample id chosen as representative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import HierarchyError


@dataclass(frozen=True)
class HierarchyNode:
    id: int
    step: int
    medoid: int
    children: tuple
    size: int


@dataclass(frozen=True)
class HierarchyTree:
    nodes: tuple
    roots: tuple
    n_leaves: int

    def __len__(self):
        return len(self.nodes)

    def node(self, node_id: int) -> HierarchyNode:
        return self.nodes[node_id]

    def leaves_of(self, node_id: int) -> list:
        out, stack = [], [node_id]
        while stack:
            node = self.nodes[stack.pop()]
            if node.children:
                stack.extend(reversed(node.children))
            else:
                out.append(node.id)
        return out

    def validate(self) -> None:
        """Raise :class:`HierarchyError` unless every structural invariant holds."""
        n = self.n_leaves
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise HierarchyError(f"node at position {i} carries id {node.id}")
            if i < n:
                if node.step != 0 or node.children or node.size != 1 or node.medoid != i:
                    raise HierarchyError(f"leaf {i} is malformed: {node}")
                continue
            if not node.children:
                raise HierarchyError(f"internal node {i} has no children")
            kids = [self.nodes[c] for c in node.children]
            if any(k.step != node.step - 1 for k in kids):
                raise HierarchyError(f"node {i} at step {node.step} has a child from another step")
            if sum(k.size for k in kids) != node.size:
                raise HierarchyError(f"node {i} size {node.size} != sum of children sizes")
        seen = np.zeros(len(self.nodes), dtype=bool)
        for r in self.roots:
            for leaf in self.leaves_of(r):
                if seen[leaf]:
                    raise HierarchyError(f"leaf {leaf} is reachable from two roots")
                seen[leaf] = True
        orphans = np.flatnonzero(~seen[:n])
        if orphans.size:
            raise HierarchyError(f"{orphans.size} leaves have no root, first is {orphans[0]}")


def reconstruct_final_clusters(tree: HierarchyTree) -> np.ndarray:
    """Label every original sample with the position of its root in ``tree.roots``."""
    labels = np.full(tree.n_leaves, -1, dtype=np.int64)
    for c, root in enumerate(tree.roots):
        for leaf in tree.leaves_of(root):
            if leaf >= tree.n_leaves:
                raise HierarchyError(f"node {leaf} has no children but is not a leaf")
            if labels[leaf] != -1:
                raise HierarchyError(f"leaf {leaf} is reachable from two roots")
            labels[leaf] = c
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise HierarchyError(f"{missing.size} leaves have no root, first is {missing[0]}")
    return labels


def leaf_tree(n: int) -> list:
    return [HierarchyNode(i, 0, i, (), 1) for i in range(n)]
