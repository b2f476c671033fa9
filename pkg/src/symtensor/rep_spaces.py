"""Representation spaces and the degeneracy-level fusion map.

A :class:`RepSpace` is a direct sum of irreps with degeneracies. Dense
indices run sector by sector in ascending charge order; inside a sector the
degeneracy label ``t`` is the slow index and the irrep basis ``m`` the
fast one, so sector ``c`` occupies ``offset(c) + t * dim(c) + m``.

:func:`fuse_spaces` fixes how coupled degeneracy labels are numbered: source
pairs are enumerated by ``(sector of a, t_a, sector of b, t_b)`` and then
stably grouped by their fused charge. Everything serialized depends on this
ordering.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from symtensor import config, su2_kernels
from symtensor._types import Direction
from symtensor.charge_systems import ChargeSystem, system_by_name
from symtensor.exception import (
    ChargeSystemMismatchError,
    FuseMapError,
    InvalidArgError,
    OracleSizeError,
)
from symtensor.fusion_trees import FusionTree, Shape, tree_node_index

if TYPE_CHECKING:
    from symtensor.fusion_trees import SectorPath

__all__ = [
    "RepSpace",
    "FuseMap",
    "SplitMap",
    "FusedLeg",
    "fuse_spaces",
    "split_map",
    "fuse_many",
    "space_generators",
    "total_spin_operators",
    "dense_fusion_unitary",
]


@dataclass(frozen=True)
class RepSpace:
    """Direct sum of irreps ``⊕_c d_c V_c`` of one charge system."""

    system: ChargeSystem
    sectors: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        sectors = tuple((int(c), int(d)) for c, d in self.sectors)
        object.__setattr__(self, "sectors", sectors)
        if not sectors:
            raise InvalidArgError("a space needs at least one sector")
        previous = None
        for c, d in sectors:
            if not self.system.valid(c):
                raise InvalidArgError(f"{c} is not a {self.system.name} charge")
            if d < 1:
                raise InvalidArgError(f"sector {c} has degeneracy {d}; degeneracies must be >= 1")
            if previous is not None and c <= previous:
                raise InvalidArgError(f"sector charges must be strictly ascending, got {[s[0] for s in sectors]}")
            previous = c

    @classmethod
    def from_dict(cls, system: ChargeSystem, degeneracies: Mapping[int, int]) -> RepSpace:
        return cls(system, tuple(sorted(degeneracies.items())))

    @classmethod
    def trivial(cls, system: ChargeSystem) -> RepSpace:
        return cls(system, ((system.trivial, 1),))

    # ── structure ────────────────────────────────────────────

    @cached_property
    def charges(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.sectors)

    @cached_property
    def _degeneracies(self) -> dict[int, int]:
        return dict(self.sectors)

    @cached_property
    def _offsets(self) -> dict[int, int]:
        out = {}
        offset = 0
        for c, d in self.sectors:
            out[c] = offset
            offset += d * self.system.dim(c)
        return out

    @cached_property
    def dim(self) -> int:
        """Total dimension ``Σ d_c dim(c)``."""
        return sum(d * self.system.dim(c) for c, d in self.sectors)

    def degeneracy(self, c: int) -> int:
        return self._degeneracies.get(c, 0)

    def sector_offset(self, c: int) -> int:
        try:
            return self._offsets[c]
        except KeyError:
            raise InvalidArgError(f"charge {c} not present in {self}") from None

    def sector_slice(self, c: int) -> slice:
        start = self.sector_offset(c)
        return slice(start, start + self.degeneracy(c) * self.system.dim(c))

    def __contains__(self, c: object) -> bool:
        return c in self._degeneracies

    def dual(self) -> RepSpace:
        """Space with every charge replaced by its dual, re-sorted."""
        return RepSpace(self.system, tuple(sorted((self.system.dual(c), d) for c, d in self.sectors)))

    def signature(self) -> tuple[str, tuple[tuple[int, int], ...]]:
        return (self.system.name, self.sectors)

    # ── serialization ────────────────────────────────────────

    def to_json(self) -> dict[str, Any]:
        return {"system": self.system.name, "sectors": [[c, d] for c, d in self.sectors]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> RepSpace:
        return cls(system_by_name(data["system"]), tuple((int(c), int(d)) for c, d in data["sectors"]))

    def __repr__(self) -> str:
        body = ", ".join(f"{c}:{d}" for c, d in self.sectors)
        return f"RepSpace({self.system.name}, {{{body}}})"


# ---------------------------------------------------------------------------
# Fusion of two spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FuseMap:
    """The bijection between product degeneracy pairs and coupled labels.

    ``sources[c][t]`` is the ``(c_a, t_a, c_b, t_b)`` pair feeding coupled
    label ``t`` of charge ``c``; labels are 0-based.
    """

    left: RepSpace
    right: RepSpace
    product: RepSpace
    sources: Mapping[int, tuple[tuple[int, int, int, int], ...]]
    _positions: Mapping[tuple[int, int, int], np.ndarray] = field(repr=False)

    def positions(self, ca: int, cb: int, c: int) -> np.ndarray:
        """``(d_a, d_b)`` array of coupled labels of charge ``c`` fed by ``(c_a, c_b)``."""
        try:
            return self._positions[(ca, cb, c)]
        except KeyError:
            raise FuseMapError(f"no fusion channel {ca} x {cb} -> {c} in this map") from None

    def target(self, ca: int, ta: int, cb: int, tb: int, c: int) -> int:
        return int(self.positions(ca, cb, c)[ta, tb])

    def source(self, c: int, t: int) -> tuple[int, int, int, int]:
        return self.sources[c][t]


def fuse_spaces(a: RepSpace, b: RepSpace) -> tuple[RepSpace, FuseMap]:
    """Fuse two spaces into their coupled product and record the labelling."""
    if a.system != b.system:
        raise ChargeSystemMismatchError(f"cannot fuse {a.system.name} with {b.system.name}")
    system = a.system
    grouped: dict[int, list[tuple[int, int, int, int]]] = {}
    for ca, da in a.sectors:
        for ta in range(da):
            for cb, db in b.sectors:
                for tb in range(db):
                    for c in system.fuse(ca, cb):
                        grouped.setdefault(c, []).append((ca, ta, cb, tb))
    sources = {c: tuple(grouped[c]) for c in sorted(grouped)}
    positions: dict[tuple[int, int, int], np.ndarray] = {}
    for c, entries in sources.items():
        for t, (ca, ta, cb, tb) in enumerate(entries):
            key = (ca, cb, c)
            if key not in positions:
                positions[key] = np.full((a.degeneracy(ca), b.degeneracy(cb)), -1, dtype=np.int64)
            positions[key][ta, tb] = t
    for arr in positions.values():
        arr.setflags(write=False)
    product = RepSpace(system, tuple((c, len(entries)) for c, entries in sources.items()))
    return product, FuseMap(a, b, product, sources, positions)


@dataclass(frozen=True)
class SplitMap:
    """Inverse view of a :class:`FuseMap`: coupled label back to its source pair."""

    fuse_map: FuseMap

    def __call__(self, c: int, t: int) -> tuple[int, int, int, int]:
        return self.fuse_map.source(c, t)

    def pairs(self, c: int) -> tuple[tuple[int, int, int, int], ...]:
        return self.fuse_map.sources.get(c, ())


def split_map(fuse_map: FuseMap) -> SplitMap:
    return SplitMap(fuse_map)


# ---------------------------------------------------------------------------
# Nested fusion along a group tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FusedLeg:
    """Record of a group of legs fused along ``tree`` into one leg.

    ``spaces`` are the spaces that were actually fused, ``directions`` the
    directions the legs had before fusion and ``fused_direction`` the
    direction of the resulting leg. ``node_maps[n]`` is the :class:`FuseMap`
    at node ``n`` of ``tree``.
    """

    tree: FusionTree
    spaces: tuple[RepSpace, ...]
    node_maps: tuple[FuseMap, ...]
    product: RepSpace
    directions: tuple[Direction, ...] = ()
    fused_direction: Direction = Direction.OUT

    @property
    def uniform(self) -> bool:
        return len(set(self.directions)) <= 1

    def positions(self, leaves: Sequence[int], internal: Sequence[int]) -> np.ndarray:
        """Coupled labels of a group path, shaped ``(d_leaf...)``.

        ``leaves`` and ``internal`` are charges of the fused spaces, with
        ``internal`` in the node order of ``tree``.
        """

        def walk(s: Shape) -> tuple[np.ndarray, int]:
            if isinstance(s, int):
                return np.arange(self.spaces[s].degeneracy(leaves[s])), leaves[s]
            left, a = walk(s[0])
            right, b = walk(s[1])
            n = tree_node_index(self.tree, s)
            c = internal[n]
            table = self.node_maps[n].positions(a, b, c)
            return table[np.ix_(left.ravel(), right.ravel())].reshape(left.shape + right.shape), c

        out, _ = walk(self.tree.shape)
        return out

    def path_positions(self, path: SectorPath) -> np.ndarray:
        return self.positions(path.leaves, path.internal)


def fuse_many(
    spaces: Sequence[RepSpace],
    tree: FusionTree | None = None,
    directions: Sequence[Direction] = (),
    fused_direction: Direction = Direction.OUT,
) -> FusedLeg:
    """Fuse ``spaces`` pairwise along ``tree`` (left comb by default)."""
    from symtensor.fusion_trees import left_comb

    tree = tree or left_comb(len(spaces))
    if tree.k != len(spaces):
        raise InvalidArgError(f"group tree has {tree.k} leaves, got {len(spaces)} spaces")
    node_maps: list[FuseMap] = []
    node_spaces: list[RepSpace] = []

    def space_of(ident: int) -> RepSpace:
        return spaces[ident] if ident < tree.k else node_spaces[ident - tree.k]

    for left, right in tree.nodes:
        product, fmap = fuse_spaces(space_of(left), space_of(right))
        node_spaces.append(product)
        node_maps.append(fmap)
    product = node_spaces[-1] if node_spaces else spaces[0]
    return FusedLeg(tree, tuple(spaces), tuple(node_maps), product, tuple(directions), fused_direction)


# ---------------------------------------------------------------------------
# Dense views (oracle use)
# ---------------------------------------------------------------------------


def check_size(entries: int, limit: int | None = None) -> None:
    """Refuse dense objects above the oracle guard."""
    limit = config.ORACLE_MAX_ENTRIES if limit is None else limit
    if entries > limit:
        raise OracleSizeError(f"dense realization with {entries} entries exceeds the limit of {limit}")


def space_generators(space: RepSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(Jx, Jy, Jz)`` acting on an SU(2) space, block diagonal over sectors."""
    if space.system.name != "su2":
        raise ChargeSystemMismatchError("spin generators need an SU(2) space")
    out = [np.zeros((space.dim, space.dim), dtype=complex) for _ in range(3)]
    for c, d in space.sectors:
        block = space.sector_slice(c)
        for mat, gen in zip(out, su2_kernels.generators(c)):
            mat[block, block] = np.kron(np.eye(d), gen)
    return out[0], out[1], out[2]


def total_spin_operators(spaces: Sequence[RepSpace], limit: int | None = None) -> tuple[np.ndarray, ...]:
    """Dense total spin operators ``Σ_l 1 ⊗ .. ⊗ J^(l) ⊗ .. ⊗ 1`` on the product space."""
    dims = [s.dim for s in spaces]
    total = int(np.prod(dims))
    check_size(total * total, limit)
    result = []
    for alpha in range(3):
        acc = np.zeros((total, total), dtype=complex)
        for l, space in enumerate(spaces):
            term = np.eye(1)
            for m, other in enumerate(spaces):
                term = np.kron(term, space_generators(space)[alpha] if m == l else np.eye(other.dim))
            acc += term
        result.append(acc)
    return tuple(result)


def dense_fusion_unitary(fuse_map: FuseMap) -> np.ndarray:
    """Dense fusing tensor: ``(dim a, dim b, dim product)`` with the structural nodes in place."""
    a, b, p = fuse_map.left, fuse_map.right, fuse_map.product
    system = a.system
    out = np.zeros((a.dim, b.dim, p.dim))
    for c, entries in fuse_map.sources.items():
        dc = system.dim(c)
        base_c = p.sector_offset(c)
        for t, (ca, ta, cb, tb) in enumerate(entries):
            da, db = system.dim(ca), system.dim(cb)
            ia = a.sector_offset(ca) + ta * da
            ib = b.sector_offset(cb) + tb * db
            ic = base_c + t * dc
            out[ia : ia + da, ib : ib + db, ic : ic + dc] = system.fusion_tensor(ca, cb, c)
    return out
