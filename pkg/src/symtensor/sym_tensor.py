"""Invariant tensors stored in a tree decomposition.

A :class:`SymTensor` keeps, for every sector path of its fusion tree, a
dense degeneracy block. The structural part (products of fusion nodes along
the tree) is never stored; :func:`to_dense` rebuilds it on demand.

Each leg has a *tree space* (the space the tree fuses) and a direction.
Outgoing legs carry the tree space itself; incoming legs carry its dual and
are bent onto the tree by a cup (``IN_R``) or transposed cup (``IN``).
Reversing a leg is therefore bookkeeping only: blocks and tree spaces stay,
the leg space and the dense realization change.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Any, Union

import numpy as np

from symtensor import config
from symtensor._observability import logger
from symtensor._types import Direction
from symtensor.exception import (
    ChargeSystemMismatchError,
    FuseMapError,
    FusionRuleError,
    InvalidArgError,
    NonInvariantError,
    StructureMismatchError,
)
from symtensor.fusion_trees import (
    FusionTree,
    SectorPath,
    bipartite,
    check_path,
    enumerate_all_paths,
    enumerate_paths,
    join_grouped_path,
    left_comb,
    path_shape,
    remove_leaf,
    split_grouped_path,
    structural_tensor,
    substitute,
)
from symtensor.gamma_engine import (
    GammaCache,
    apply_gamma,
    bend_phase,
    cached_gamma,
    leg_bend_matrix,
    reversal_factor,
)
from symtensor.rep_spaces import FusedLeg, RepSpace, check_size, fuse_many

if TYPE_CHECKING:
    from symtensor.charge_systems import ChargeSystem
    from symtensor.types import TensorPolicy

__all__ = [
    "SymTensor",
    "GroupSpec",
    "from_dense",
    "to_dense",
    "from_blocks",
    "zeros",
    "new_tree",
    "reverse",
    "absorb_bends",
    "release_bends",
    "permute",
    "fuse",
    "fuse_with_records",
    "fuse_records",
    "split",
    "contract",
    "contract_scalar",
    "dagger",
    "insert_trivial_leg",
    "remove_trivial_leg",
    "identity",
    "add",
    "scale",
    "norm",
    "inner",
    "save",
    "load",
    "from_json",
    "tensors_residual",
]

Blocks = Mapping[SectorPath, np.ndarray]
GroupSpec = Union[int, FusionTree, Sequence[int]]
"""One fusion group: a leg count (left comb), a group tree, or consecutive leg indices."""


def _tree_space(space: RepSpace, direction: Direction) -> RepSpace:
    return space if direction is Direction.OUT else space.dual()


@dataclass(frozen=True, eq=False)
class SymTensor:
    """An invariant (or covariant, when ``root`` is nontrivial) tensor.

    Attributes:
        tree_spaces: Space fused by the tree at each leaf.
        directions: Direction of each leg.
        tree: Fusion tree over the legs.
        root: Root charge; trivial for invariant tensors.
        blocks: Degeneracy block per sector path, shaped by the leaf
            degeneracies. Missing paths are zero. Treat as read-only.
        absorbed: Per leg, whether its bend factor has been absorbed into
            the blocks (see :func:`absorb_bends`).
    """

    tree_spaces: tuple[RepSpace, ...]
    directions: tuple[Direction, ...]
    tree: FusionTree
    root: int
    blocks: Mapping[SectorPath, np.ndarray]
    absorbed: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        k = len(self.tree_spaces)
        if k == 0:
            raise InvalidArgError("a tensor needs at least one leg")
        if len(self.directions) != k or self.tree.k != k:
            raise StructureMismatchError(
                f"{k} spaces, {len(self.directions)} directions and a tree over {self.tree.k} leaves"
            )
        if not self.absorbed:
            object.__setattr__(self, "absorbed", (False,) * k)
        system = self.tree_spaces[0].system
        if any(s.system != system for s in self.tree_spaces):
            raise ChargeSystemMismatchError("legs from different charge systems")
        if not system.valid(self.root):
            raise InvalidArgError(f"{self.root} is not a {system.name} charge")
        for path, block in self.blocks.items():
            check_path(system, self.tree, path)
            if path.root != self.root:
                raise FusionRuleError(f"path {path} does not end in root charge {self.root}")
            for c, space in zip(path.leaves, self.tree_spaces):
                if c not in space:
                    raise FusionRuleError(f"path {path} uses charge {c} absent from {space}")
            expected = tuple(s.degeneracy(c) for c, s in zip(path.leaves, self.tree_spaces))
            if block.shape != expected:
                raise StructureMismatchError(f"block of {path} has shape {block.shape}, expected {expected}")

    # ── structure ────────────────────────────────────────────

    @property
    def system(self) -> ChargeSystem:
        return self.tree_spaces[0].system

    @property
    def rank(self) -> int:
        return len(self.tree_spaces)

    @cached_property
    def spaces(self) -> tuple[RepSpace, ...]:
        """Leg spaces: the tree space on outgoing legs, its dual on incoming ones."""
        return tuple(_tree_space(s, d) for s, d in zip(self.tree_spaces, self.directions))

    @property
    def root_dim(self) -> int:
        return self.system.dim(self.root)

    @property
    def has_root_axis(self) -> bool:
        """Whether the dense realization carries an extra axis for the root irrep."""
        return self.root != self.system.trivial

    @cached_property
    def dtype(self) -> np.dtype:
        if not self.blocks:
            return np.dtype(float)
        return np.result_type(*{b.dtype for b in self.blocks.values()})

    @property
    def num_coefficients(self) -> int:
        """Number of stored degeneracy coefficients."""
        return sum(b.size for b in self.blocks.values())

    @property
    def dense_size(self) -> int:
        size = int(np.prod([s.dim for s in self.tree_spaces]))
        return size * self.root_dim if self.has_root_axis else size

    @property
    def has_absorbed_bends(self) -> bool:
        return any(self.absorbed)

    def same_structure(self, other: SymTensor) -> bool:
        return (
            self.tree_spaces == other.tree_spaces
            and self.directions == other.directions
            and self.tree == other.tree
            and self.root == other.root
        )

    def allowed_paths(self) -> list[SectorPath]:
        return enumerate_paths(self.tree, self.tree_spaces, self.root)

    # ── conveniences ─────────────────────────────────────────

    def to_dense(self) -> np.ndarray:
        return to_dense(self)

    def norm(self) -> float:
        return norm(self)

    def conj(self) -> SymTensor:
        return replace(self, blocks={p: b.conj() for p, b in self.blocks.items()})

    def copy(self) -> SymTensor:
        return replace(self, blocks={p: b.copy() for p, b in self.blocks.items()})

    def random_like(self, rng: np.random.Generator | None = None) -> SymTensor:
        """Same structure with unit-Gaussian blocks on every allowed path."""
        rng = rng or np.random.default_rng()
        blocks = {p: rng.standard_normal(path_shape(p, self.tree_spaces)) for p in self.allowed_paths()}
        return SymTensor(self.tree_spaces, self.directions, self.tree, self.root, blocks)

    def to_json(self) -> dict[str, Any]:
        return _to_json(self)

    def __repr__(self) -> str:
        legs = ", ".join(f"{d.value}:{s!r}" for s, d in zip(self.spaces, self.directions))
        return f"SymTensor([{legs}], tree={self.tree.shape!r}, root={self.root}, paths={len(self.blocks)})"


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _prepare(
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None,
    tree: FusionTree | None,
    root: int | None,
) -> tuple[tuple[RepSpace, ...], tuple[Direction, ...], FusionTree, int]:
    if not spaces:
        raise InvalidArgError("a tensor needs at least one leg")
    directions = tuple(directions) if directions is not None else (Direction.OUT,) * len(spaces)
    if len(directions) != len(spaces):
        raise StructureMismatchError(f"{len(spaces)} spaces but {len(directions)} directions")
    tree = tree or left_comb(len(spaces))
    root = spaces[0].system.trivial if root is None else root
    tree_spaces = tuple(_tree_space(s, Direction(d)) for s, d in zip(spaces, directions))
    return tree_spaces, tuple(Direction(d) for d in directions), tree, root


def from_blocks(
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None,
    blocks: Blocks,
    tree: FusionTree | None = None,
    root: int | None = None,
) -> SymTensor:
    """Build a tensor from leg spaces and degeneracy blocks keyed by tree-charge paths."""
    tree_spaces, dirs, tree, root = _prepare(spaces, directions, tree, root)
    return SymTensor(tree_spaces, dirs, tree, root, {p: np.asarray(b) for p, b in blocks.items()})


def zeros(
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None = None,
    tree: FusionTree | None = None,
    root: int | None = None,
    dtype: Any = float,
) -> SymTensor:
    """Tensor with an explicit zero block on every allowed path."""
    tree_spaces, dirs, tree, root = _prepare(spaces, directions, tree, root)
    blocks = {
        p: np.zeros(path_shape(p, tree_spaces), dtype=dtype) for p in enumerate_paths(tree, tree_spaces, root)
    }
    return SymTensor(tree_spaces, dirs, tree, root, blocks)


# ---------------------------------------------------------------------------
# Dense conversions
# ---------------------------------------------------------------------------


def _apply_leg_matrix(x: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, x, axes=(1, axis)), 0, axis)


def _interleave(k: int, root_axis: bool) -> list[int]:
    order = [i for l in range(k) for i in (l, k + l)]
    return [*order, 2 * k] if root_axis else order


def to_dense(t: SymTensor) -> np.ndarray:
    """Dense realization ``Σ_path B_path ⊗ Q_path`` with incoming legs bent.

    Covariant tensors (nontrivial root) get a trailing axis for the root
    irrep.
    """
    t = release_bends(t)
    check_size(t.dense_size)
    system, k = t.system, t.rank
    shape = [s.dim for s in t.tree_spaces]
    if t.has_root_axis:
        shape.append(t.root_dim)
    out = np.zeros(shape, dtype=np.result_type(t.dtype, float))
    for path, block in t.blocks.items():
        q = structural_tensor(system, t.tree, path)
        if not t.has_root_axis:
            q = q[..., 0]
        term = np.multiply.outer(block, q).transpose(_interleave(k, t.has_root_axis))
        sizes = [block.shape[l] * system.dim(c) for l, c in enumerate(path.leaves)]
        if t.has_root_axis:
            sizes.append(t.root_dim)
        index = tuple(t.tree_spaces[l].sector_slice(c) for l, c in enumerate(path.leaves))
        out[index] += term.reshape(sizes)
    for l, (space, d) in enumerate(zip(t.tree_spaces, t.directions)):
        if d.incoming:
            out = _apply_leg_matrix(out, leg_bend_matrix(space, d), l)
    return out


def from_dense(
    dense: np.ndarray,
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None = None,
    tree: FusionTree | None = None,
    root: int | None = None,
    policy: TensorPolicy | None = None,
) -> SymTensor:
    """Project a dense array onto the structural tensors of every allowed path.

    Raises:
        StructureMismatchError: ``dense`` does not match the leg dimensions.
        NonInvariantError: The reconstruction residual exceeds the tolerance.
    """
    policy = policy or {}
    tolerance = policy.get("tolerance", config.DEFAULT_TOLERANCE)
    tree_spaces, dirs, tree, root = _prepare(spaces, directions, tree, root)
    system = tree_spaces[0].system
    k = len(tree_spaces)
    root_axis = root != system.trivial
    expected = tuple(s.dim for s in spaces) + ((system.dim(root),) if root_axis else ())
    dense = np.asarray(dense)
    if dense.shape != expected:
        raise StructureMismatchError(f"dense shape {dense.shape} does not match leg dimensions {expected}")
    x = dense
    for l, (space, d) in enumerate(zip(tree_spaces, dirs)):
        if d.incoming:
            x = _apply_leg_matrix(x, leg_bend_matrix(space, d).T, l)
    blocks: dict[SectorPath, np.ndarray] = {}
    droot = system.dim(root)
    for path in enumerate_paths(tree, tree_spaces, root):
        q = structural_tensor(system, tree, path)
        if not root_axis:
            q = q[..., 0]
        index = tuple(tree_spaces[l].sector_slice(c) for l, c in enumerate(path.leaves))
        sizes = [v for l, c in enumerate(path.leaves) for v in (tree_spaces[l].degeneracy(c), system.dim(c))]
        if root_axis:
            sizes.append(droot)
        sub = x[index].reshape(sizes)
        # (d1, m1, d2, m2, ...) -> (d..., m...)
        order = [2 * l for l in range(k)] + [2 * l + 1 for l in range(k)] + ([2 * k] if root_axis else [])
        sub = sub.transpose(order)
        m_axes = list(range(k, sub.ndim))
        blocks[path] = np.tensordot(sub, q, axes=(m_axes, list(range(q.ndim)))) / droot
    result = SymTensor(tree_spaces, dirs, tree, root, blocks)
    if policy.get("check_invariance", True):
        scale_ = float(np.linalg.norm(dense))
        residual = float(np.linalg.norm(dense - to_dense(result))) / scale_ if scale_ > 0 else 0.0
        logger.debug("from_dense residual %.3e over %d paths", residual, len(blocks))
        if residual > tolerance:
            raise NonInvariantError(
                f"dense tensor is not invariant: relative residual {residual:.3e} exceeds {tolerance:.1e}",
                residual,
            )
    return result


# ---------------------------------------------------------------------------
# Bookkeeping operations
# ---------------------------------------------------------------------------


def reverse(t: SymTensor, directions: Sequence[Direction] | Mapping[int, Direction]) -> SymTensor:
    """Change leg directions without touching any block.

    ``directions`` is either the full new direction list or a mapping from
    leg index to its new direction.
    """
    t = release_bends(t)
    if isinstance(directions, Mapping):
        new = list(t.directions)
        for leg, d in directions.items():
            new[leg] = Direction(d)
    else:
        new = [Direction(d) for d in directions]
    if len(new) != t.rank:
        raise StructureMismatchError(f"{len(new)} directions for a rank-{t.rank} tensor")
    if tuple(new) == t.directions:
        return t
    return replace(t, directions=tuple(new), absorbed=())


def absorb_bends(t: SymTensor) -> SymTensor:
    """Scale blocks by the reversal factor of every incoming leg.

    The result remembers which legs were absorbed; its dense realization
    is unchanged and every other operation releases the factors first.
    """
    pending = [l for l, d in enumerate(t.directions) if d.incoming and not t.absorbed[l]]
    if not pending:
        return t
    blocks = {}
    for path, block in t.blocks.items():
        factor = 1.0
        for l in pending:
            factor *= reversal_factor(t.system, t.tree, path, l, t.directions[l])
        blocks[path] = block * factor
    absorbed = tuple(a or l in pending for l, a in enumerate(t.absorbed))
    return replace(t, blocks=blocks, absorbed=absorbed)


def release_bends(t: SymTensor) -> SymTensor:
    """Undo :func:`absorb_bends`."""
    if not t.has_absorbed_bends:
        return t
    legs = [l for l, a in enumerate(t.absorbed) if a]
    blocks = {}
    for path, block in t.blocks.items():
        factor = 1.0
        for l in legs:
            factor *= reversal_factor(t.system, t.tree, path, l, t.directions[l])
        blocks[path] = block / factor
    return replace(t, blocks=blocks, absorbed=(False,) * t.rank)


def permute(
    t: SymTensor, perm: Sequence[int], tree: FusionTree | None = None, cache: GammaCache | None = None
) -> SymTensor:
    """Move leg ``perm[i]`` to position ``i`` and re-express on ``tree``.

    ``tree`` defaults to the tensor's own tree shape.
    """
    t = release_bends(t)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(t.rank)):
        raise InvalidArgError(f"{perm} is not a permutation of {t.rank} legs")
    tree = tree or t.tree
    if tree.k != t.rank:
        raise StructureMismatchError(f"target tree has {tree.k} leaves, tensor has {t.rank} legs")
    if perm == tuple(range(t.rank)) and tree == t.tree:
        return t
    gamma = cached_gamma(t.tree, perm, tree, t.tree_spaces, t.directions, t.root, cache)
    blocks = apply_gamma(gamma, t.blocks)
    return SymTensor(
        tuple(t.tree_spaces[p] for p in perm),
        tuple(t.directions[p] for p in perm),
        tree,
        t.root,
        blocks,
    )


def new_tree(t: SymTensor, tree: FusionTree, cache: GammaCache | None = None) -> SymTensor:
    """Re-express ``t`` on another tree over the same legs."""
    if tree.k != t.rank:
        raise StructureMismatchError(f"target tree has {tree.k} leaves, tensor has {t.rank} legs")
    return permute(t, range(t.rank), tree, cache)


# ---------------------------------------------------------------------------
# Fusion and splitting
# ---------------------------------------------------------------------------


def _group_trees(groups: Sequence[GroupSpec], rank: int) -> list[FusionTree]:
    trees: list[FusionTree] = []
    start = 0
    for group in groups:
        if isinstance(group, FusionTree):
            trees.append(group)
        elif isinstance(group, (int, np.integer)):
            if group < 1:
                raise InvalidArgError(f"group size {group} must be positive")
            trees.append(left_comb(int(group)))
        else:
            legs = [int(g) for g in group]
            if legs != list(range(start, start + len(legs))) or not legs:
                raise InvalidArgError(f"group {legs} is not the adjacent run starting at leg {start}")
            trees.append(left_comb(len(legs)))
        start += trees[-1].k
    if start != rank:
        raise InvalidArgError(f"groups cover {start} legs, tensor has {rank}")
    return trees


def _charges_for(record: FusedLeg, path: SectorPath) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # records of incoming groups are built on leg spaces, paths carry tree charges
    if record.fused_direction is Direction.OUT:
        return path.leaves, path.internal
    system = record.product.system
    return tuple(system.dual(c) for c in path.leaves), tuple(system.dual(c) for c in path.internal)


def _group_phase(system: ChargeSystem, record: FusedLeg, path: SectorPath) -> float:
    d = record.fused_direction
    if d is Direction.OUT or record.tree.k == 1:
        return 1.0
    return bend_phase(system, record.tree, path, [d.value] * record.tree.k, d.value)


def _normalize_groups(t: SymTensor, trees: Sequence[FusionTree]) -> tuple[SymTensor, list[tuple[Direction, ...]]]:
    # legs of mixed-direction groups are turned outgoing before fusing
    originals = []
    new = list(t.directions)
    start = 0
    for tree in trees:
        legs = range(start, start + tree.k)
        dirs = tuple(t.directions[l] for l in legs)
        originals.append(dirs)
        if len(set(dirs)) > 1:
            for l in legs:
                new[l] = Direction.OUT
        start += tree.k
    return reverse(t, new), originals


def fuse_records(t: SymTensor, groups: Sequence[GroupSpec]) -> list[FusedLeg]:
    """Records :func:`fuse` would produce, without touching any block."""
    trees = _group_trees(groups, t.rank)
    normalized, originals = _normalize_groups(release_bends(t), trees)
    records = []
    start = 0
    for tree, dirs in zip(trees, originals):
        legs = range(start, start + tree.k)
        d = normalized.directions[start]
        records.append(fuse_many([normalized.spaces[l] for l in legs], tree, dirs, d))
        start += tree.k
    return records


def fuse_with_records(
    t: SymTensor, groups: Sequence[GroupSpec], tree: FusionTree | None = None, cache: GammaCache | None = None
) -> tuple[SymTensor, list[FusedLeg]]:
    """Fuse adjacent groups of legs, returning the records needed by :func:`split`.

    The tensor is first re-expressed on ``tree`` with every leaf replaced by
    its group tree; the group nodes then collapse into fused leaves, which
    only relabels degeneracy indices.
    """
    t = release_bends(t)
    trees = _group_trees(groups, t.rank)
    outer = tree or left_comb(len(trees))
    if outer.k != len(trees):
        raise StructureMismatchError(f"outer tree has {outer.k} leaves for {len(trees)} groups")
    records = fuse_records(t, groups)
    t, _ = _normalize_groups(t, trees)
    full = outer
    for g in range(len(trees) - 1, -1, -1):
        full = substitute(full, g, trees[g])
    t = new_tree(t, full, cache)

    fused_spaces = tuple(_tree_space(r.product, r.fused_direction) for r in records)
    blocks: dict[SectorPath, np.ndarray] = {}
    for path, block in t.blocks.items():
        outer_path, group_paths = split_grouped_path(outer, trees, path)
        index = []
        phase = 1.0
        for record, gpath in zip(records, group_paths):
            leaves, internal = _charges_for(record, gpath)
            index.append(record.positions(leaves, internal).ravel())
            phase *= _group_phase(t.system, record, gpath)
        target = blocks.get(outer_path)
        if target is None:
            target = np.zeros(path_shape(outer_path, fused_spaces), dtype=block.dtype)
            blocks[outer_path] = target
        elif not np.can_cast(block.dtype, target.dtype):
            target = target.astype(np.result_type(target, block))
            blocks[outer_path] = target
        target[np.ix_(*index)] = phase * block.reshape([len(i) for i in index])
    fused = SymTensor(fused_spaces, tuple(r.fused_direction for r in records), outer, t.root, blocks)
    return fused, records


def fuse(
    t: SymTensor, groups: Sequence[GroupSpec], tree: FusionTree | None = None, cache: GammaCache | None = None
) -> SymTensor:
    """Fuse adjacent leg groups into single legs (see :func:`fuse_with_records`)."""
    return fuse_with_records(t, groups, tree, cache)[0]


def split(
    t: SymTensor, leg: int, record: FusedLeg, tree: FusionTree | None = None, cache: GammaCache | None = None
) -> SymTensor:
    """Split a fused leg back into the legs described by ``record``.

    Raises:
        FuseMapError: The record does not describe this leg.
    """
    t = release_bends(t)
    if not 0 <= leg < t.rank:
        raise InvalidArgError(f"leg {leg} out of range for rank {t.rank}")
    if record.fused_direction is not t.directions[leg] or record.product != t.spaces[leg]:
        raise FuseMapError(
            f"record fused to {record.fused_direction.value}:{record.product!r}, "
            f"leg {leg} is {t.directions[leg].value}:{t.spaces[leg]!r}"
        )
    kg = record.tree.k
    d = record.fused_direction
    if kg == 1:
        out = t
    else:
        group_tree_spaces = tuple(_tree_space(s, d) for s in record.spaces)
        full = substitute(t.tree, leg, record.tree)
        by_root = enumerate_all_paths(record.tree, [s.charges for s in group_tree_spaces], t.system)
        blocks: dict[SectorPath, np.ndarray] = {}
        for outer_path, block in t.blocks.items():
            for gpath in by_root.get(outer_path.leaves[leg], []):
                leaves, internal = _charges_for(record, gpath)
                positions = record.positions(leaves, internal)
                sub = np.take(block, positions.ravel(), axis=leg)
                sub = sub.reshape(block.shape[:leg] + positions.shape + block.shape[leg + 1 :])
                phase = _group_phase(t.system, record, gpath)
                blocks[join_grouped_path(t.tree, outer_path, {leg: gpath})] = sub / phase
        out = SymTensor(
            t.tree_spaces[:leg] + group_tree_spaces + t.tree_spaces[leg + 1 :],
            t.directions[:leg] + (d,) * kg + t.directions[leg + 1 :],
            full,
            t.root,
            blocks,
        )
        if not record.uniform:
            out = reverse(out, {leg + i: r for i, r in enumerate(record.directions)})
    if tree is not None:
        out = new_tree(out, tree, cache)
    return out


# ---------------------------------------------------------------------------
# Trivial legs
# ---------------------------------------------------------------------------


def insert_trivial_leg(t: SymTensor, position: int, direction: Direction = Direction.OUT) -> SymTensor:
    """Insert a one-dimensional trivial leg before leg ``position`` (``rank`` appends)."""
    t = release_bends(t)
    if not 0 <= position <= t.rank:
        raise InvalidArgError(f"position {position} out of range for rank {t.rank}")
    system = t.system
    pair = FusionTree((0, 1))
    trivial_first = position < t.rank
    anchor = position if trivial_first else t.rank - 1
    tree = substitute(t.tree, anchor, pair)
    blocks = {}
    for path, block in t.blocks.items():
        c = path.leaves[anchor]
        leaves = (system.trivial, c) if trivial_first else (c, system.trivial)
        full = join_grouped_path(t.tree, path, {anchor: SectorPath(leaves, (c,))})
        blocks[full] = np.expand_dims(block, position)
    trivial = RepSpace.trivial(system)
    return SymTensor(
        t.tree_spaces[:position] + (trivial,) + t.tree_spaces[position:],
        t.directions[:position] + (Direction(direction),) + t.directions[position:],
        tree,
        t.root,
        blocks,
    )


def remove_trivial_leg(t: SymTensor, leg: int) -> SymTensor:
    """Remove a one-dimensional trivial leg."""
    t = release_bends(t)
    if t.tree_spaces[leg] != RepSpace.trivial(t.system):
        raise InvalidArgError(f"leg {leg} is not trivial: {t.spaces[leg]!r}")
    tree, kept = remove_leaf(t.tree, leg)
    blocks = {}
    for path, block in t.blocks.items():
        leaves = path.leaves[:leg] + path.leaves[leg + 1 :]
        blocks[SectorPath(leaves, tuple(path.internal[n] for n in kept))] = np.squeeze(block, axis=leg)
    return SymTensor(
        t.tree_spaces[:leg] + t.tree_spaces[leg + 1 :],
        t.directions[:leg] + t.directions[leg + 1 :],
        tree,
        t.root,
        blocks,
    )


# ---------------------------------------------------------------------------
# Contraction
# ---------------------------------------------------------------------------


def _check_pairs(a: SymTensor, b: SymTensor, pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    pairs = [(int(i), int(j)) for i, j in pairs]
    legs_a = [i for i, _ in pairs]
    legs_b = [j for _, j in pairs]
    if len(set(legs_a)) != len(legs_a) or len(set(legs_b)) != len(legs_b):
        raise InvalidArgError(f"legs repeated in contraction pairs {pairs}")
    if a.system != b.system:
        raise ChargeSystemMismatchError(f"cannot contract {a.system.name} with {b.system.name}")
    if a.root != a.system.trivial or b.root != b.system.trivial:
        raise InvalidArgError("contraction needs invariant tensors (trivial roots)")
    for i, j in pairs:
        if not (0 <= i < a.rank and 0 <= j < b.rank):
            raise InvalidArgError(f"pair ({i}, {j}) out of range")
        if a.spaces[i] != b.spaces[j]:
            raise StructureMismatchError(f"pair ({i}, {j}) joins {a.spaces[i]!r} with {b.spaces[j]!r}")
        if a.directions[i].incoming == b.directions[j].incoming:
            raise StructureMismatchError(
                f"pair ({i}, {j}) joins {a.directions[i].value} with {b.directions[j].value}; "
                "one leg must be outgoing and the other incoming"
            )
    return pairs


def _contract_core(
    a: SymTensor, b: SymTensor, pairs: Sequence[tuple[int, int]], cache: GammaCache | None
) -> tuple[SymTensor, bool, bool]:
    from symtensor import block_linalg

    a, b = release_bends(a), release_bends(b)
    pairs = _check_pairs(a, b, pairs)
    system = a.system

    # the contraction kernel of (In, Out) and (Out, InR) pairs differs by
    # (-1)^{2j} from the (Out, In) kernel used below
    flipped = [
        j
        for i, j in pairs
        if (a.directions[i] is Direction.IN and b.directions[j] is Direction.OUT)
        or (a.directions[i] is Direction.OUT and b.directions[j] is Direction.IN_R)
    ]
    if flipped:
        blocks = {}
        for path, block in b.blocks.items():
            sign = 1.0
            for j in flipped:
                sign *= system.cup_transpose_phase(path.leaves[j])
            blocks[path] = block * sign
        b = replace(b, blocks=blocks)
    a = reverse(a, {i: Direction.OUT for i, _ in pairs})
    b = reverse(b, {j: Direction.IN for _, j in pairs})

    free_a = [i for i in range(a.rank) if i not in {i for i, _ in pairs}]
    free_b = [j for j in range(b.rank) if j not in {j for _, j in pairs}]
    con_a = [i for i, _ in pairs]
    con_b = [j for _, j in pairs]
    if not pairs:
        a = insert_trivial_leg(a, a.rank, Direction.OUT)
        b = insert_trivial_leg(b, 0, Direction.IN)
        free_a, con_a = list(range(a.rank - 1)), [a.rank - 1]
        free_b, con_b = list(range(1, b.rank)), [0]
    pad_a = not free_a
    pad_b = not free_b
    if pad_a:
        a = insert_trivial_leg(a, 0, Direction.OUT)
        con_a = [i + 1 for i in con_a]
        free_a = [0]
    if pad_b:
        b = insert_trivial_leg(b, b.rank, Direction.OUT)
        free_b = [b.rank - 1]

    nfa, nc, nfb = len(free_a), len(con_a), len(free_b)
    a = permute(a, free_a + con_a, bipartite(nfa, nc), cache)
    b = permute(b, con_b + free_b, bipartite(nc, nfb), cache)
    a2, (rec_x, _) = fuse_with_records(a, [nfa, nc], cache=cache)
    b2, (_, rec_z) = fuse_with_records(b, [nc, nfb], cache=cache)
    a2 = reverse(a2, [Direction.OUT, Direction.IN_R])
    b2 = reverse(b2, [Direction.OUT, Direction.IN])
    product = block_linalg.matmul(block_linalg.tree_to_blockdiag(a2), block_linalg.tree_to_blockdiag(b2))
    c = block_linalg.blockdiag_to_tree(product, (Direction.OUT, Direction.IN))
    c = reverse(c, [rec_x.fused_direction, rec_z.fused_direction])
    c = split(c, 1, rec_z, cache=cache)
    c = split(c, 0, rec_x, cache=cache)
    return c, pad_a, pad_b


def contract(
    a: SymTensor, b: SymTensor, pairs: Sequence[tuple[int, int]], cache: GammaCache | None = None
) -> SymTensor:
    """Contract leg ``i`` of ``a`` with leg ``j`` of ``b`` for every ``(i, j)`` in ``pairs``.

    The result carries the free legs of ``a`` followed by those of ``b``,
    each in its original order. An empty ``pairs`` gives the outer product.

    Raises:
        StructureMismatchError: A pair joins different spaces or two legs of
            the same orientation.
    """
    if len(pairs) == a.rank and len(pairs) == b.rank:
        raise InvalidArgError("full contraction has no legs left; use contract_scalar")
    c, pad_a, pad_b = _contract_core(a, b, pairs, cache)
    if pad_b:
        c = remove_trivial_leg(c, c.rank - 1)
    if pad_a:
        c = remove_trivial_leg(c, 0)
    return c


def contract_scalar(
    a: SymTensor, b: SymTensor, pairs: Sequence[tuple[int, int]], cache: GammaCache | None = None
) -> Any:
    """Contract every leg of ``a`` with a leg of ``b``; returns a scalar."""
    if len(pairs) != a.rank or len(pairs) != b.rank:
        raise InvalidArgError(f"contract_scalar needs all {a.rank} and {b.rank} legs paired")
    c, _, _ = _contract_core(a, b, pairs, cache)
    return to_dense(c)[0, 0].item()


# ---------------------------------------------------------------------------
# Adjoint and arithmetic
# ---------------------------------------------------------------------------

_DAGGER_BENDS = {Direction.OUT: "cup", Direction.IN: "cupT", Direction.IN_R: "cup"}
_DAGGER_DIRECTIONS = {Direction.OUT: Direction.IN, Direction.IN: Direction.OUT, Direction.IN_R: Direction.OUT}


def dagger(t: SymTensor) -> SymTensor:
    """Complex conjugate with every leg reversed: ``to_dense(dagger(t)) == conj(to_dense(t))``.

    Outgoing legs become incoming and vice versa, so contracting ``t`` with
    ``dagger(t)`` over matching legs is always allowed.
    """
    t = release_bends(t)
    if t.root != t.system.trivial:
        raise InvalidArgError("dagger needs an invariant tensor (trivial root)")
    system = t.system
    bends = [_DAGGER_BENDS[d] for d in t.directions]
    blocks = {}
    for path, block in t.blocks.items():
        dual = SectorPath(tuple(system.dual(c) for c in path.leaves), tuple(system.dual(c) for c in path.internal))
        phase = bend_phase(system, t.tree, path, bends, "I", target=dual)
        blocks[dual] = phase * block.conj()
    return SymTensor(
        tuple(s.dual() for s in t.tree_spaces),
        tuple(_DAGGER_DIRECTIONS[d] for d in t.directions),
        t.tree,
        t.root,
        blocks,
    )


def identity(space: RepSpace) -> SymTensor:
    """The identity operator on ``space`` with legs ``(OUT, IN)``."""
    from symtensor import block_linalg

    return block_linalg.blockdiag_to_tree(block_linalg.identity(space), (Direction.OUT, Direction.IN))


def _require_same(a: SymTensor, b: SymTensor) -> None:
    if not a.same_structure(b):
        raise StructureMismatchError("tensors differ in spaces, directions, tree or root")


def add(a: SymTensor, b: SymTensor) -> SymTensor:
    a, b = release_bends(a), release_bends(b)
    _require_same(a, b)
    blocks = dict(a.blocks)
    for path, block in b.blocks.items():
        blocks[path] = blocks[path] + block if path in blocks else block
    return replace(a, blocks=blocks)


def scale(t: SymTensor, factor: complex) -> SymTensor:
    return replace(t, blocks={p: factor * b for p, b in t.blocks.items()})


def norm(t: SymTensor) -> float:
    """Frobenius norm of the dense realization, computed blockwise."""
    t = release_bends(t)
    total = sum(float(np.vdot(b, b).real) for b in t.blocks.values())
    return float(np.sqrt(t.root_dim * total))


def inner(a: SymTensor, b: SymTensor) -> Any:
    """``<a, b>`` of the dense realizations for tensors of identical structure."""
    a, b = release_bends(a), release_bends(b)
    _require_same(a, b)
    total = sum(np.vdot(a.blocks[p], blk) for p, blk in b.blocks.items() if p in a.blocks)
    return a.root_dim * total


# ---------------------------------------------------------------------------
# JSON tensor format
# ---------------------------------------------------------------------------


def _to_json(t: SymTensor) -> dict[str, Any]:
    t = release_bends(t)
    blocks = []
    for path, block in sorted(t.blocks.items()):
        entry: dict[str, Any] = {"path": path.to_json(), "shape": list(block.shape)}
        entry["data"] = np.real(block).ravel().tolist()
        if np.iscomplexobj(block):
            entry["imag"] = np.imag(block).ravel().tolist()
        blocks.append(entry)
    return {
        "format_version": config.TENSOR_FORMAT_VERSION,
        "system": t.system.name,
        "spaces": [s.to_json() for s in t.spaces],
        "directions": [d.value for d in t.directions],
        "tree": {"k": t.tree.k, "nodes": t.tree.to_nodes()},
        "root": t.root,
        "blocks": blocks,
    }


def from_json(data: Mapping[str, Any]) -> SymTensor:
    if data.get("format_version") != config.TENSOR_FORMAT_VERSION:
        raise InvalidArgError(f"unsupported tensor format version {data.get('format_version')!r}")
    spaces = [RepSpace.from_json(s) for s in data["spaces"]]
    directions = [Direction(d) for d in data["directions"]]
    tree = FusionTree.from_nodes(int(data["tree"]["k"]), data["tree"]["nodes"])
    blocks = {}
    for entry in data["blocks"]:
        block = np.asarray(entry["data"], dtype=float)
        if "imag" in entry:
            block = block + 1j * np.asarray(entry["imag"], dtype=float)
        blocks[SectorPath.from_json(entry["path"])] = block.reshape(entry["shape"])
    return from_blocks(spaces, directions, blocks, tree, int(data["root"]))


def save(t: SymTensor, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_to_json(t)), encoding="utf-8")


def load(path: str | Path) -> SymTensor:
    return from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def tensors_residual(tensors: Iterable[SymTensor]) -> float:
    """Largest invariance residual over ``tensors`` (dense check, small tensors only)."""
    from symtensor.dense_oracle import invariance_residual

    worst = 0.0
    for t in tensors:
        worst = max(worst, invariance_residual(to_dense(t), t.spaces, t.directions, t.root))
    return worst
