"""Fusion trees over adjacent leaves, sector paths and structural tensors."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, Any, Union

import numpy as np

from symtensor._cache import Memo
from symtensor.exception import FusionRuleError, InvalidArgError, StructureMismatchError

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from symtensor.charge_systems import ChargeSystem
    from symtensor.rep_spaces import RepSpace

__all__ = [
    "Shape",
    "FusionTree",
    "SectorPath",
    "left_comb",
    "right_comb",
    "paired_comb",
    "bipartite",
    "substitute",
    "enumerate_paths",
    "enumerate_all_paths",
    "path_degeneracy",
    "path_shape",
    "structural_tensor",
    "split_grouped_path",
    "join_grouped_path",
    "remove_leaf",
]

Shape = Union[int, tuple["Shape", "Shape"]]
"""Nested leaf indices: an int is a leaf, a pair is a fusion node."""


def _leaves_of(shape: Shape) -> list[int]:
    if isinstance(shape, int):
        return [shape]
    return _leaves_of(shape[0]) + _leaves_of(shape[1])


def _shift(shape: Shape, offset: int) -> Shape:
    if isinstance(shape, int):
        return shape + offset
    return (_shift(shape[0], offset), _shift(shape[1], offset))


@dataclass(frozen=True)
class FusionTree:
    """A binary fusion tree whose leaves ``0..k-1`` are fused only with neighbours.

    ``nodes`` lists the ``k-1`` fusions in post-order as ``(left_id, right_id)``;
    leaves have ids ``0..k-1`` and node ``n`` has id ``k + n``. The last node
    is the root.
    """

    shape: Shape

    def __post_init__(self) -> None:
        leaves = _leaves_of(self.shape)
        if leaves != list(range(len(leaves))):
            raise InvalidArgError(f"tree leaves must read 0..k-1 left to right, got {leaves}")

    @cached_property
    def k(self) -> int:
        return len(_leaves_of(self.shape))

    @cached_property
    def nodes(self) -> tuple[tuple[int, int], ...]:
        nodes: list[tuple[int, int]] = []
        k = self.k

        def walk(s: Shape) -> int:
            if isinstance(s, int):
                return s
            left = walk(s[0])
            right = walk(s[1])
            nodes.append((left, right))
            return k + len(nodes) - 1

        walk(self.shape)
        return tuple(nodes)

    @cached_property
    def root_id(self) -> int:
        return self.k + len(self.nodes) - 1 if self.nodes else 0

    @cached_property
    def parents(self) -> dict[int, tuple[int, int]]:
        """Map child id to ``(node index, side)`` with side ``0`` for left."""
        out: dict[int, tuple[int, int]] = {}
        for n, (left, right) in enumerate(self.nodes):
            out[left] = (n, 0)
            out[right] = (n, 1)
        return out

    @cached_property
    def spans(self) -> tuple[tuple[int, int], ...]:
        """Half-open leaf range covered by each node."""
        spans: list[tuple[int, int]] = []
        k = self.k
        for left, right in self.nodes:
            lo = left if left < k else spans[left - k][0]
            hi = right + 1 if right < k else spans[right - k][1]
            spans.append((lo, hi))
        return tuple(spans)

    def to_nodes(self) -> list[list[int]]:
        """JSON node list ``[[left, right, id], ...]``."""
        return [[left, right, self.k + n] for n, (left, right) in enumerate(self.nodes)]

    @classmethod
    def from_nodes(cls, k: int, nodes: Sequence[Sequence[int]]) -> FusionTree:
        subtree: dict[int, Shape] = {i: i for i in range(k)}
        for entry in nodes:
            left, right, node_id = entry
            subtree[node_id] = (subtree.pop(left), subtree.pop(right))
        if len(subtree) != 1:
            raise InvalidArgError(f"node list does not form a single tree over {k} leaves")
        return cls(next(iter(subtree.values())))

    def __repr__(self) -> str:
        return f"FusionTree({self.shape!r})"


@dataclass(frozen=True, order=True)
class SectorPath:
    """Charges on the leaves and on the internal links (in node order) of a tree."""

    leaves: tuple[int, ...]
    internal: tuple[int, ...] = field(default=())

    @property
    def root(self) -> int:
        return self.internal[-1] if self.internal else self.leaves[0]

    def charge_of(self, node_or_leaf_id: int) -> int:
        k = len(self.leaves)
        return self.leaves[node_or_leaf_id] if node_or_leaf_id < k else self.internal[node_or_leaf_id - k]

    def to_json(self) -> list[list[int]]:
        return [list(self.leaves), list(self.internal)]

    @classmethod
    def from_json(cls, data: Any) -> SectorPath:
        return cls(tuple(int(c) for c in data[0]), tuple(int(c) for c in data[1]))


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def _comb(items: Sequence[Shape]) -> Shape:
    shape = items[0]
    for item in items[1:]:
        shape = (shape, item)
    return shape


def left_comb(k: int) -> FusionTree:
    """``((..((0,1),2)..),k-1)``; ``k=1`` is the bare leaf."""
    if k < 1:
        raise InvalidArgError("a fusion tree needs at least one leaf")
    return FusionTree(_comb(list(range(k))))


def right_comb(k: int) -> FusionTree:
    if k < 1:
        raise InvalidArgError("a fusion tree needs at least one leaf")
    shape: Shape = k - 1
    for i in range(k - 2, -1, -1):
        shape = (i, shape)
    return FusionTree(shape)


def paired_comb(k: int, i: int) -> FusionTree:
    """Left comb in which leaves ``i`` and ``i+1`` are fused first."""
    if not 0 <= i < k - 1:
        raise InvalidArgError(f"pair start {i} out of range for {k} leaves")
    items: list[Shape] = [*range(i), (i, i + 1), *range(i + 2, k)]
    return FusionTree(_comb(items))


def bipartite(k_left: int, k_right: int) -> FusionTree:
    """Two left combs joined at the root: the matrix tree of a ``(k_left, k_right)`` split."""
    if k_left < 1 and k_right < 1:
        raise InvalidArgError("bipartite tree needs at least one leaf")
    if k_left == 0:
        return left_comb(k_right)
    if k_right == 0:
        return left_comb(k_left)
    left = _comb(list(range(k_left)))
    right = _comb(list(range(k_left, k_left + k_right)))
    return FusionTree((left, right))


def substitute(tree: FusionTree, leaf: int, subtree: FusionTree) -> FusionTree:
    """Replace ``leaf`` of ``tree`` by ``subtree``, renumbering the leaves."""
    if not 0 <= leaf < tree.k:
        raise InvalidArgError(f"leaf {leaf} out of range for {tree.k} leaves")
    grow = subtree.k - 1

    def walk(s: Shape) -> Shape:
        if isinstance(s, int):
            if s == leaf:
                return _shift(subtree.shape, leaf)
            return s + grow if s > leaf else s
        return (walk(s[0]), walk(s[1]))

    return FusionTree(walk(tree.shape))


# ---------------------------------------------------------------------------
# Sector paths
# ---------------------------------------------------------------------------


def _partial_paths(
    system: ChargeSystem, shape: Shape, options: Sequence[Sequence[int]]
) -> dict[int, list[tuple[tuple[int, ...], tuple[int, ...]]]]:
    if isinstance(shape, int):
        return {c: [((c,), ())] for c in options[shape]}
    left = _partial_paths(system, shape[0], options)
    right = _partial_paths(system, shape[1], options)
    out: dict[int, list[tuple[tuple[int, ...], tuple[int, ...]]]] = {}
    for a, left_parts in left.items():
        for b, right_parts in right.items():
            for c in system.fuse(a, b):
                bucket = out.setdefault(c, [])
                for (ll, li), (rl, ri) in itertools.product(left_parts, right_parts):
                    bucket.append((ll + rl, li + ri + (c,)))
    return out


def enumerate_all_paths(
    tree: FusionTree, leaf_charges: Sequence[Sequence[int]], system: ChargeSystem
) -> dict[int, list[SectorPath]]:
    """Every fusion-consistent path, grouped by root charge and sorted."""
    if len(leaf_charges) != tree.k:
        raise StructureMismatchError(f"tree has {tree.k} leaves, got {len(leaf_charges)} leaf spaces")
    parts = _partial_paths(system, tree.shape, leaf_charges)
    return {c: sorted(SectorPath(leaves, internal) for leaves, internal in items) for c, items in sorted(parts.items())}


def enumerate_paths(tree: FusionTree, leaf_spaces: Sequence[RepSpace], root_charge: int) -> list[SectorPath]:
    """All and only the paths through ``tree`` ending in ``root_charge``, sorted."""
    if not leaf_spaces:
        raise StructureMismatchError("no leaf spaces given")
    system = leaf_spaces[0].system
    everything = enumerate_all_paths(tree, [s.charges for s in leaf_spaces], system)
    return everything.get(root_charge, [])


def path_shape(path: SectorPath, leaf_spaces: Sequence[RepSpace]) -> tuple[int, ...]:
    """Shape of the degeneracy block of ``path``: one axis per leaf."""
    return tuple(space.degeneracy(c) for c, space in zip(path.leaves, leaf_spaces))


def path_degeneracy(path: SectorPath, leaf_spaces: Sequence[RepSpace]) -> int:
    """Number of entries in the degeneracy block of ``path``."""
    return math.prod(path_shape(path, leaf_spaces))


def check_path(system: ChargeSystem, tree: FusionTree, path: SectorPath) -> None:
    if len(path.leaves) != tree.k or len(path.internal) != len(tree.nodes):
        raise StructureMismatchError(f"path {path} does not fit tree {tree}")
    for n, (left, right) in enumerate(tree.nodes):
        if not system.allowed(path.charge_of(left), path.charge_of(right), path.internal[n]):
            raise FusionRuleError(f"path {path} violates the fusion rules at node {n}")


# ---------------------------------------------------------------------------
# Structural tensors
# ---------------------------------------------------------------------------

_structural: Memo[np.ndarray] = Memo("structural_tensor")


def structural_tensor(system: ChargeSystem, tree: FusionTree, path: SectorPath) -> np.ndarray:
    """Dense structural tensor of ``path``: shape ``(dim leaves..., dim root)``.

    Columns are the orthonormal coupled states of the path inside the
    product of the leaf irreps.
    """

    def build() -> np.ndarray:
        def walk(s: Shape) -> tuple[np.ndarray, int]:
            if isinstance(s, int):
                c = path.leaves[s]
                return np.eye(system.dim(c)), c
            left, a = walk(s[0])
            right, b = walk(s[1])
            c = path.internal[tree_node_index(tree, s)]
            node = system.fusion_tensor(a, b, c)
            out = np.einsum("xa,yb,abc->xyc", left, right, node)
            return out.reshape(left.shape[0] * right.shape[0], node.shape[2]), c

        flat, root = walk(tree.shape)
        dims = [system.dim(c) for c in path.leaves]
        out = flat.reshape(*dims, system.dim(root))
        out.setflags(write=False)
        return out

    return _structural.get((system.name, tree.shape, path), build)


def tree_node_index(tree: FusionTree, s: Shape) -> int:
    """Index in ``tree.nodes`` of the node whose subtree shape is ``s``."""
    return _node_index_map(tree.shape)[s]


@lru_cache(maxsize=4096)
def _node_index_map(shape: Shape) -> dict[Shape, int]:
    out: dict[Shape, int] = {}
    counter = 0

    def walk(s: Shape) -> None:
        nonlocal counter
        if isinstance(s, int):
            return
        walk(s[0])
        walk(s[1])
        out[s] = counter
        counter += 1

    walk(shape)
    return out


# ---------------------------------------------------------------------------
# Paths of substituted trees
# ---------------------------------------------------------------------------


def split_grouped_path(
    outer: FusionTree, groups: Sequence[FusionTree], path: SectorPath
) -> tuple[SectorPath, list[SectorPath]]:
    """Split a path of ``outer`` with every leaf ``g`` replaced by ``groups[g]``.

    Returns the outer path (leaf charges are the group roots) and one path per
    group.
    """
    leaves = iter(path.leaves)
    internal = iter(path.internal)
    outer_leaves: list[int] = []
    outer_internal: list[int] = []
    group_paths: list[SectorPath] = []

    def walk_group(s: Shape, gl: list[int], gi: list[int]) -> int:
        if isinstance(s, int):
            c = next(leaves)
            gl.append(c)
            return c
        walk_group(s[0], gl, gi)
        walk_group(s[1], gl, gi)
        c = next(internal)
        gi.append(c)
        return c

    def walk_outer(s: Shape) -> None:
        if isinstance(s, int):
            gl: list[int] = []
            gi: list[int] = []
            outer_leaves.append(walk_group(groups[s].shape, gl, gi))
            group_paths.append(SectorPath(tuple(gl), tuple(gi)))
            return
        walk_outer(s[0])
        walk_outer(s[1])
        outer_internal.append(next(internal))

    walk_outer(outer.shape)
    return SectorPath(tuple(outer_leaves), tuple(outer_internal)), group_paths


def join_grouped_path(outer: FusionTree, outer_path: SectorPath, group_paths: Mapping[int, SectorPath]) -> SectorPath:
    """Inverse of :func:`split_grouped_path` for the leaves listed in ``group_paths``."""
    internal = iter(outer_path.internal)
    leaves: list[int] = []
    nodes: list[int] = []

    def walk(s: Shape) -> None:
        if isinstance(s, int):
            sub = group_paths.get(s)
            if sub is None:
                leaves.append(outer_path.leaves[s])
            else:
                if sub.root != outer_path.leaves[s]:
                    raise FusionRuleError(f"group path {sub} does not end in charge {outer_path.leaves[s]}")
                leaves.extend(sub.leaves)
                nodes.extend(sub.internal)
            return
        walk(s[0])
        walk(s[1])
        nodes.append(next(internal))

    walk(outer.shape)
    return SectorPath(tuple(leaves), tuple(nodes))


def remove_leaf(tree: FusionTree, leaf: int) -> tuple[FusionTree, list[int]]:
    """Drop ``leaf`` and collapse its parent node.

    Returns the smaller tree and, in its node order, the indices of the
    surviving nodes of ``tree``.
    """
    if tree.k < 2:
        raise InvalidArgError("cannot remove the only leaf of a tree")

    def walk(s: Shape) -> tuple[Shape | None, list[int]]:
        if isinstance(s, int):
            if s == leaf:
                return None, []
            return (s - 1 if s > leaf else s), []
        left, kept_left = walk(s[0])
        right, kept_right = walk(s[1])
        if left is None:
            return right, kept_right
        if right is None:
            return left, kept_left
        return (left, right), [*kept_left, *kept_right, tree_node_index(tree, s)]

    shape, kept = walk(tree.shape)
    assert shape is not None
    return FusionTree(shape), kept
