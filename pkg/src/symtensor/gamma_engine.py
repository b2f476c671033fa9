"""Recoupling maps between tree decompositions.

A :class:`GammaMap` sends every sector path of one tree (optionally with
permuted leaves) to a linear combination of paths of another tree. Maps are
built without touching any ``m`` index: both trees are normalized to the
left comb by elementary F-moves, leaf permutations are bubbled through the
comb as adjacent swaps, and every move multiplies in one ``F`` or ``R``
coefficient of the charge system.

Built maps go through :class:`GammaCache`, which can persist them as JSON.
"""

from __future__ import annotations

import hashlib
import json
import threading
import warnings
from collections import defaultdict
from collections.abc import Callable, Hashable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, NamedTuple, Union

import numpy as np

from symtensor import config
from symtensor._cache import Memo
from symtensor._observability import bump, is_gamma_cache_enabled, logger
from symtensor._types import Direction
from symtensor.exception import CacheCorruptionError, InvalidArgError, StructureMismatchError
from symtensor.fusion_trees import (
    FusionTree,
    SectorPath,
    Shape,
    enumerate_all_paths,
    structural_tensor,
)

if TYPE_CHECKING:
    from symtensor.charge_systems import ChargeSystem
    from symtensor.rep_spaces import RepSpace

__all__ = [
    "GammaMap",
    "GammaCache",
    "gamma_recouple",
    "gamma_permute",
    "gamma_dense",
    "compose",
    "identity_gamma",
    "apply_gamma",
    "reversal_factor",
    "bend_matrix",
    "leg_bend_matrix",
    "bend_phase",
    "evaluate_spin_network",
    "spin_network_dense",
    "graded_sign",
    "default_cache",
    "configure_cache",
    "cached_gamma",
]

# ---------------------------------------------------------------------------
# Labelled trees and elementary moves
# ---------------------------------------------------------------------------


class Leaf(NamedTuple):
    pos: int
    charge: int


class Node(NamedTuple):
    left: Labelled
    right: Labelled
    charge: int


Labelled = Union[Leaf, Node]
Address = tuple[int, ...]


class Move(NamedTuple):
    kind: str  # "rotate_left" | "rotate_right" | "swap"
    address: Address


def _rotate_left(system: ChargeSystem, t: Labelled) -> list[tuple[Labelled, float]]:
    # (A, (B, C)f)d -> Σ_e F^{ef} ((A, B)e, C)d
    assert isinstance(t, Node) and isinstance(t.right, Node)
    a_, bc, d = t.left, t.right, t.charge
    b_, c_, f = bc.left, bc.right, bc.charge
    a, b, c = a_.charge, b_.charge, c_.charge
    out = []
    for e in system.fuse(a, b):
        if system.allowed(e, c, d):
            coeff = system.f_coeff(a, b, c, d, e, f)
            if coeff != 0.0:
                out.append((Node(Node(a_, b_, e), c_, d), coeff))
    return out


def _rotate_right(system: ChargeSystem, t: Labelled) -> list[tuple[Labelled, float]]:
    # ((A, B)e, C)d -> Σ_f F^{ef} (A, (B, C)f)d
    assert isinstance(t, Node) and isinstance(t.left, Node)
    ab, c_, d = t.left, t.right, t.charge
    a_, b_, e = ab.left, ab.right, ab.charge
    a, b, c = a_.charge, b_.charge, c_.charge
    out = []
    for f in system.fuse(b, c):
        if system.allowed(a, f, d):
            coeff = system.f_coeff(a, b, c, d, e, f)
            if coeff != 0.0:
                out.append((Node(a_, Node(b_, c_, f), d), coeff))
    return out


def _swap(system: ChargeSystem, t: Labelled) -> list[tuple[Labelled, float]]:
    assert isinstance(t, Node)
    return [(Node(t.right, t.left, t.charge), system.r_coeff(t.left.charge, t.right.charge, t.charge))]


_MOVES = {"rotate_left": _rotate_left, "rotate_right": _rotate_right, "swap": _swap}


def _apply_at(system: ChargeSystem, t: Labelled, move: Move, depth: int = 0) -> list[tuple[Labelled, float]]:
    if depth == len(move.address):
        return _MOVES[move.kind](system, t)
    assert isinstance(t, Node)
    side = move.address[depth]
    child = t.right if side else t.left
    out = []
    for new_child, coeff in _apply_at(system, child, move, depth + 1):
        out.append((Node(t.left, new_child, t.charge) if side else Node(new_child, t.right, t.charge), coeff))
    return out


def _shape_at(shape: Shape, address: Address) -> Shape:
    for side in address:
        assert not isinstance(shape, int)
        shape = shape[side]
    return shape


def _replace_at(shape: Shape, address: Address, new: Shape) -> Shape:
    if not address:
        return new
    assert not isinstance(shape, int)
    if address[0]:
        return (shape[0], _replace_at(shape[1], address[1:], new))
    return (_replace_at(shape[0], address[1:], new), shape[1])


def _first_right_branch(shape: Shape, address: Address = ()) -> Address | None:
    if isinstance(shape, int):
        return None
    if not isinstance(shape[1], int):
        return address
    return _first_right_branch(shape[0], (*address, 0))


def comb_moves(shape: Shape) -> list[Move]:
    """F-moves (all rotate-left) taking ``shape`` to the left comb."""
    moves = []
    while (address := _first_right_branch(shape)) is not None:
        sub = _shape_at(shape, address)
        assert not isinstance(sub, int) and not isinstance(sub[1], int)
        a, (b, c) = sub
        shape = _replace_at(shape, address, ((a, b), c))
        moves.append(Move("rotate_left", address))
    return moves


def swap_moves(k: int, perm: Sequence[int]) -> list[Move]:
    """Moves realizing ``perm`` on a left comb as bubbled adjacent swaps."""
    moves: list[Move] = []
    current = list(range(k))
    for i in range(k):
        j = current.index(perm[i])
        for s in range(j - 1, i - 1, -1):
            if s == 0:
                moves.append(Move("swap", (0,) * (k - 2)))
            else:
                address = (0,) * (k - 2 - s)
                moves.extend(
                    [Move("rotate_right", address), Move("swap", (*address, 1)), Move("rotate_left", address)]
                )
            current[s], current[s + 1] = current[s + 1], current[s]
    return moves


def _label(tree: FusionTree, path: SectorPath) -> Labelled:
    internal = iter(path.internal)

    def walk(s: Shape) -> Labelled:
        if isinstance(s, int):
            return Leaf(s, path.leaves[s])
        left = walk(s[0])
        right = walk(s[1])
        # post-order, same as path.internal
        return Node(left, right, next(internal))

    return walk(tree.shape)


def _unlabel(t: Labelled) -> tuple[list[int], list[int], list[int]]:
    if isinstance(t, Leaf):
        return [t.pos], [t.charge], []
    lp, lc, li = _unlabel(t.left)
    rp, rc, ri = _unlabel(t.right)
    return lp + rp, lc + rc, [*li, *ri, t.charge]


def _run_moves(
    system: ChargeSystem, tree: FusionTree, path: SectorPath, moves: Sequence[Move]
) -> dict[Labelled, float]:
    state: dict[Labelled, float] = {_label(tree, path): 1.0}
    for move in moves:
        nxt: dict[Labelled, float] = defaultdict(float)
        for t, coeff in state.items():
            for new, factor in _apply_at(system, t, move):
                nxt[new] += coeff * factor
        state = nxt
    return state


# ---------------------------------------------------------------------------
# Gamma maps
# ---------------------------------------------------------------------------

_ZERO = 1e-14


@dataclass(frozen=True, eq=False)
class GammaMap:
    """Sparse map from input paths to combinations of output paths.

    Output leg ``i`` is input leg ``perm[i]``; a block ``B`` of an input path
    contributes ``coeff * B.transpose(perm)`` to each listed output path.
    """

    kind: str
    tree_in: FusionTree
    tree_out: FusionTree
    perm: tuple[int, ...]
    entries: Mapping[SectorPath, tuple[tuple[SectorPath, float], ...]]

    @property
    def num_coefficients(self) -> int:
        return sum(len(v) for v in self.entries.values())

    @property
    def is_identity_perm(self) -> bool:
        return self.perm == tuple(range(len(self.perm)))

    def coefficient(self, path_in: SectorPath, path_out: SectorPath) -> float:
        for q, c in self.entries.get(path_in, ()):
            if q == path_out:
                return c
        return 0.0

    def matrix(self) -> tuple[list[SectorPath], list[SectorPath], np.ndarray]:
        """Dense ``(out, in)`` coefficient matrix with its row and column paths."""
        ins = sorted(self.entries)
        outs = sorted({q for v in self.entries.values() for q, _ in v})
        row = {q: i for i, q in enumerate(outs)}
        mat = np.zeros((len(outs), len(ins)))
        for j, p in enumerate(ins):
            for q, c in self.entries[p]:
                mat[row[q], j] = c
        return outs, ins, mat


def _check_perm(perm: Sequence[int], k: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(k)):
        raise InvalidArgError(f"{perm} is not a permutation of {k} legs")
    return perm


def _build(
    kind: str,
    tree_in: FusionTree,
    perm: tuple[int, ...],
    tree_out: FusionTree,
    leaf_spaces: Sequence[RepSpace],
    root: int | None,
) -> GammaMap:
    if tree_in.k != tree_out.k or tree_in.k != len(leaf_spaces) or len(perm) != tree_in.k:
        raise StructureMismatchError(
            f"trees over {tree_in.k} and {tree_out.k} leaves do not match {len(leaf_spaces)} leaf spaces"
        )
    system = leaf_spaces[0].system
    k = tree_in.k
    moves = comb_moves(tree_in.shape)
    if k > 1:
        moves += swap_moves(k, perm)
        moves += [Move("rotate_right", m.address) for m in reversed(comb_moves(tree_out.shape))]
    paths = enumerate_all_paths(tree_in, [s.charges for s in leaf_spaces], system)
    roots = [root] if root is not None else list(paths)
    entries: dict[SectorPath, tuple[tuple[SectorPath, float], ...]] = {}
    evaluated = 0
    for r in roots:
        for path in paths.get(r, []):
            out = []
            for t, coeff in _run_moves(system, tree_in, path, moves).items():
                if abs(coeff) <= _ZERO:
                    continue
                positions, leaves, internal = _unlabel(t)
                assert tuple(positions) == perm
                out.append((SectorPath(tuple(leaves), tuple(internal)), coeff))
            out.sort()
            evaluated += len(out)
            entries[path] = tuple(out)
    bump("spin_networks", evaluated)
    logger.debug("built %s gamma map %s -> %s, %d coefficients", kind, tree_in, tree_out, evaluated)
    return GammaMap(kind, tree_in, tree_out, perm, entries)


def gamma_recouple(
    tree_in: FusionTree, tree_out: FusionTree, leaf_spaces: Sequence[RepSpace], root: int | None = None
) -> GammaMap:
    """Recoupling map between two trees over the same leaves."""
    if tree_in.k != tree_out.k:
        raise StructureMismatchError(f"trees over {tree_in.k} and {tree_out.k} leaves")
    return _build("recouple", tree_in, tuple(range(tree_in.k)), tree_out, leaf_spaces, root)


def gamma_permute(
    tree_in: FusionTree,
    perm: Sequence[int],
    tree_out: FusionTree,
    leaf_spaces: Sequence[RepSpace],
    root: int | None = None,
) -> GammaMap:
    """Recoupling map that also moves input leg ``perm[i]`` to output position ``i``."""
    perm = _check_perm(perm, tree_in.k)
    return _build("permute", tree_in, perm, tree_out, leaf_spaces, root)


def identity_gamma(tree: FusionTree, leaf_spaces: Sequence[RepSpace], root: int | None = None) -> GammaMap:
    system = leaf_spaces[0].system
    paths = enumerate_all_paths(tree, [s.charges for s in leaf_spaces], system)
    roots = [root] if root is not None else list(paths)
    entries = {p: ((p, 1.0),) for r in roots for p in paths.get(r, [])}
    return GammaMap("recouple", tree, tree, tuple(range(tree.k)), entries)


def compose(first: GammaMap, second: GammaMap) -> GammaMap:
    """The map applying ``first`` and then ``second``."""
    if first.tree_out != second.tree_in:
        raise StructureMismatchError("gamma maps do not chain")
    entries: dict[SectorPath, tuple[tuple[SectorPath, float], ...]] = {}
    for p, row in first.entries.items():
        acc: dict[SectorPath, float] = defaultdict(float)
        for q, c1 in row:
            for r, c2 in second.entries.get(q, ()):
                acc[r] += c1 * c2
        entries[p] = tuple(sorted((r, c) for r, c in acc.items() if abs(c) > _ZERO))
    perm = tuple(first.perm[i] for i in second.perm)
    kind = "recouple" if perm == tuple(range(len(perm))) else "permute"
    return GammaMap(kind, first.tree_in, second.tree_out, perm, entries)


def apply_gamma(gamma: GammaMap, blocks: Mapping[SectorPath, np.ndarray]) -> dict[SectorPath, np.ndarray]:
    """Apply ``gamma`` to degeneracy blocks, touching each stored coefficient once."""
    out: dict[SectorPath, np.ndarray] = {}
    touched = 0
    flops = 0
    identity = gamma.is_identity_perm
    for path, block in blocks.items():
        row = gamma.entries.get(path)
        if row is None:
            raise StructureMismatchError(f"path {path} is not in the domain of this gamma map")
        moved = block if identity else block.transpose(gamma.perm)
        for q, coeff in row:
            if q in out:
                out[q] = out[q] + coeff * moved
            else:
                out[q] = coeff * moved
            touched += 1
            flops += block.size
    bump("gamma_coefficients_touched", touched)
    bump("block_flops", flops)
    return out


# ---------------------------------------------------------------------------
# Dense oracle for gamma maps
# ---------------------------------------------------------------------------


def graded_sign(perm: Sequence[int], parities: Sequence[int]) -> int:
    """Sign of reordering odd objects: ``-1`` per inverted pair of odd legs."""
    sign = 1
    k = len(perm)
    for i in range(k):
        for j in range(i + 1, k):
            if perm[i] > perm[j] and parities[perm[i]] and parities[perm[j]]:
                sign = -sign
    return sign


def gamma_dense(
    tree_in: FusionTree,
    perm: Sequence[int],
    tree_out: FusionTree,
    leaf_spaces: Sequence[RepSpace],
    root: int | None = None,
) -> GammaMap:
    """Brute-force gamma map from explicit structural tensors (test oracle)."""
    perm = _check_perm(perm, tree_in.k)
    system = leaf_spaces[0].system
    paths_in = enumerate_all_paths(tree_in, [s.charges for s in leaf_spaces], system)
    paths_out = enumerate_all_paths(tree_out, [leaf_spaces[p].charges for p in perm], system)
    roots = [root] if root is not None else list(paths_in)
    entries: dict[SectorPath, tuple[tuple[SectorPath, float], ...]] = {}
    for r in roots:
        for p in paths_in.get(r, []):
            moved = structural_tensor(system, tree_in, p).transpose((*perm, tree_in.k))
            leaves = tuple(p.leaves[i] for i in perm)
            sign = graded_sign(perm, p.leaves) if system.graded else 1
            row = []
            for q in paths_out.get(r, []):
                if q.leaves != leaves:
                    continue
                coeff = sign * float(np.sum(structural_tensor(system, tree_out, q) * moved)) / system.dim(r)
                if abs(coeff) > 1e-12:
                    row.append((q, coeff))
            entries[p] = tuple(row)
    return GammaMap("dense", tree_in, tree_out, perm, entries)


def evaluate_spin_network(
    system: ChargeSystem,
    lower: tuple[FusionTree, SectorPath],
    upper: tuple[FusionTree, SectorPath],
    perm: Sequence[int] | None = None,
) -> float:
    """Value of the network made of a splitting tree, optional crossings and a fusing tree.

    Returns the factor by which the network is proportional to the identity
    on its root charge, evaluated through F- and R-moves only.
    """
    tree_in, path_in = lower
    tree_out, path_out = upper
    perm = _check_perm(perm if perm is not None else range(tree_in.k), tree_in.k)
    if path_in.root != path_out.root:
        return 0.0
    moves = comb_moves(tree_in.shape)
    if tree_in.k > 1:
        moves += swap_moves(tree_in.k, perm)
        moves += [Move("rotate_right", m.address) for m in reversed(comb_moves(tree_out.shape))]
    state = _run_moves(system, tree_in, path_in, moves)
    bump("spin_networks", len(state))
    for t, coeff in state.items():
        _, leaves, internal = _unlabel(t)
        if SectorPath(tuple(leaves), tuple(internal)) == path_out:
            return coeff
    return 0.0


def spin_network_dense(
    system: ChargeSystem,
    lower: tuple[FusionTree, SectorPath],
    upper: tuple[FusionTree, SectorPath],
    perm: Sequence[int] | None = None,
) -> float:
    """Same value as :func:`evaluate_spin_network` by contracting CG tensors."""
    tree_in, path_in = lower
    tree_out, path_out = upper
    perm = tuple(perm) if perm is not None else tuple(range(tree_in.k))
    if path_in.root != path_out.root:
        return 0.0
    moved = structural_tensor(system, tree_in, path_in).transpose((*perm, tree_in.k))
    q = structural_tensor(system, tree_out, path_out)
    if q.shape != moved.shape:
        return 0.0
    sign = graded_sign(perm, path_in.leaves) if system.graded else 1
    return sign * float(np.sum(q * moved)) / system.dim(path_in.root)


# ---------------------------------------------------------------------------
# Bending factors
# ---------------------------------------------------------------------------


def bend_matrix(system: ChargeSystem, c: int, direction: Direction | str) -> np.ndarray:
    """Matrix attached to a leaf of tree charge ``c``.

    ``OUT`` (or ``"I"``) is the identity, ``IN`` (or ``"cupT"``) the transposed
    cup and ``IN_R`` (or ``"cup"``) the cup.
    """
    kind = direction.value if isinstance(direction, Direction) else direction
    if kind in ("out", "I"):
        return np.eye(system.dim(c))
    if kind in ("in", "cupT"):
        return system.cup(c).T
    if kind in ("in_r", "cup"):
        return system.cup(c)
    raise InvalidArgError(f"unknown bend {direction!r}")


def leg_bend_matrix(tree_space: RepSpace, direction: Direction) -> np.ndarray:
    """Dense ``(leg dim, tree dim)`` matrix taking tree indices to leg indices.

    Incoming legs live on the dual space; sector ``c`` of the tree space is
    sent to sector ``dual(c)`` through its bend matrix, degeneracy by
    degeneracy.
    """
    if direction is Direction.OUT:
        return np.eye(tree_space.dim)
    system = tree_space.system
    leg_space = tree_space.dual()
    out = np.zeros((leg_space.dim, tree_space.dim))
    for c, d in tree_space.sectors:
        w = bend_matrix(system, c, direction)
        dc = system.dim(c)
        rows = leg_space.sector_offset(system.dual(c))
        cols = tree_space.sector_offset(c)
        for t in range(d):
            out[rows + t * dc : rows + (t + 1) * dc, cols + t * dc : cols + (t + 1) * dc] = w
    return out


_bend_phases: Memo[float] = Memo("bend_phase")


def bend_phase(
    system: ChargeSystem,
    tree: FusionTree,
    path: SectorPath,
    leaf_bends: Sequence[str],
    root_bend: str = "I",
    target: SectorPath | None = None,
) -> float:
    """Scalar ``φ`` with ``(⊗_l W_l) Q_path = φ · Q_target W_root``.

    ``W`` matrices are named as in :func:`bend_matrix`. The relation is
    exact by Schur's lemma, so ``φ`` is ``±1`` for the bends used here.
    """
    target = target or path
    key = (system.name, tree.shape, path, target, tuple(leaf_bends), root_bend)

    def build() -> float:
        q = structural_tensor(system, tree, path)
        moved = np.asarray(q)
        for axis, (c, bend) in enumerate(zip(path.leaves, leaf_bends)):
            if bend != "I":
                moved = np.moveaxis(np.tensordot(bend_matrix(system, c, bend), moved, axes=(1, axis)), 0, axis)
        q_target = structural_tensor(system, tree, target)
        dc = q_target.shape[-1]
        g = q_target.reshape(-1, dc).T @ moved.reshape(-1, moved.shape[-1])
        w_root = bend_matrix(system, target.root, root_bend)
        return float(np.sum(g * w_root)) / dc

    return _bend_phases.get(key, build)


def reversal_factor(
    system: ChargeSystem, tree: FusionTree, path: SectorPath, leg: int, direction: Direction
) -> float:
    """Factor absorbed into a block when leaf ``leg`` is bent by its cup.

    Bending leaf ``b`` of the node ``a ⊗ b -> c`` turns it into a node
    ``c ⊗ b̄ -> a`` (and likewise for a left leaf); the two differ by this
    scalar, e.g. ``1/sqrt(2j+1)`` for the left leg of a rank-2 singlet.
    """
    if direction is Direction.OUT or tree.k == 1:
        return 1.0
    node, side = tree.parents[leg]
    left, right = tree.nodes[node]
    a, b, c = path.charge_of(left), path.charge_of(right), path.internal[node]
    moved = np.moveaxis(
        np.tensordot(bend_matrix(system, path.leaves[leg], direction), system.fusion_tensor(a, b, c), axes=(1, side)),
        0,
        side,
    )
    if side:
        target = np.asarray(system.fusion_tensor(c, system.dual(b), a)).transpose(2, 1, 0)
    else:
        target = np.asarray(system.fusion_tensor(c, system.dual(a), b)).transpose(1, 2, 0)
    norm = float(np.sum(target * target))
    return float(np.sum(moved * target)) / norm if norm else 0.0


# ---------------------------------------------------------------------------
# Precompute cache
# ---------------------------------------------------------------------------

GammaKey = tuple[Hashable, ...]


def _entries_to_json(gamma: GammaMap) -> list[Any]:
    return [[p.to_json(), [[q.to_json(), c] for q, c in row]] for p, row in gamma.entries.items()]


class GammaCache:
    """Thread-safe store of built gamma maps, optionally mirrored to disk.

    Readers never block; builders of the same key may race and the first
    stored map wins. Files that fail to decode are rebuilt with a warning.
    """

    def __init__(self, directory: str | Path | None = None) -> None:
        self.directory = Path(directory) if directory else None
        self._maps: dict[GammaKey, GammaMap] = {}
        self._lock = threading.Lock()
        self._stats = dict.fromkeys(("hits", "misses", "disk_loads", "disk_writes", "corrupt_files"), 0)

    def _count(self, name: str) -> None:
        with self._lock:
            self._stats[name] += 1

    def stats(self) -> dict[str, int]:
        with self._lock:
            return {**self._stats, "entries": len(self._maps)}

    def clear(self) -> None:
        with self._lock:
            self._maps.clear()

    def __len__(self) -> int:
        return len(self._maps)

    def _file_for(self, key: GammaKey) -> Path | None:
        if self.directory is None:
            return None
        digest = hashlib.sha256(repr(key).encode()).hexdigest()[:32]
        return self.directory / f"gamma-{digest}.json"

    def _load(self, path: Path, key: GammaKey, tree_in: FusionTree, tree_out: FusionTree) -> GammaMap:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("format_version") != config.GAMMA_CACHE_FORMAT_VERSION or data.get("key") != repr(key):
                raise ValueError("version or key mismatch")
            entries = {
                SectorPath.from_json(p): tuple((SectorPath.from_json(q), float(c)) for q, c in row)
                for p, row in data["entries"]
            }
            return GammaMap(data["kind"], tree_in, tree_out, tuple(data["perm"]), entries)
        except (OSError, ValueError, KeyError, TypeError, IndexError) as exc:
            raise CacheCorruptionError(f"cannot decode gamma cache file {path}: {exc}") from exc

    def _store(self, path: Path, key: GammaKey, gamma: GammaMap) -> None:
        payload = {
            "format_version": config.GAMMA_CACHE_FORMAT_VERSION,
            "key": repr(key),
            "kind": gamma.kind,
            "perm": list(gamma.perm),
            "entries": _entries_to_json(gamma),
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
        tmp.write_text(json.dumps(payload), encoding="utf-8")
        tmp.replace(path)
        self._count("disk_writes")

    def get_or_build(
        self, key: GammaKey, build: Callable[[], GammaMap], trees: tuple[FusionTree, FusionTree] | None = None
    ) -> GammaMap:
        """Return the map stored under ``key``, building (and persisting) it on a miss.

        ``trees`` are the input and output trees of the map; without them a
        persisted copy cannot be decoded and the map is rebuilt.
        """
        if not is_gamma_cache_enabled():
            return build()
        found = self._maps.get(key)
        if found is not None:
            self._count("hits")
            bump("gamma_cache_hits")
            return found
        self._count("misses")
        bump("gamma_cache_misses")
        gamma: GammaMap | None = None
        file = self._file_for(key)
        if file is not None and trees is not None and file.exists():
            try:
                gamma = self._load(file, key, *trees)
                self._count("disk_loads")
            except CacheCorruptionError as exc:
                self._count("corrupt_files")
                logger.warning("%s; rebuilding", exc)
                warnings.warn(f"{exc}; rebuilding", RuntimeWarning, stacklevel=2)
        if gamma is None:
            gamma = build()
            if file is not None:
                self._store(file, key, gamma)
        with self._lock:
            return self._maps.setdefault(key, gamma)


_default_cache = GammaCache(config.get_cache_dir())
_default_lock = threading.Lock()


def default_cache() -> GammaCache:
    return _default_cache


def configure_cache(directory: str | Path | None) -> GammaCache:
    """Replace the process-wide cache with one persisting under ``directory``."""
    global _default_cache
    with _default_lock:
        _default_cache = GammaCache(config.get_cache_dir(directory))
        return _default_cache


def cached_gamma(
    tree_in: FusionTree,
    perm: Sequence[int],
    tree_out: FusionTree,
    leaf_spaces: Sequence[RepSpace],
    directions: Sequence[Direction],
    root: int,
    cache: GammaCache | None = None,
) -> GammaMap:
    """Gamma map for a tensor operation, through the precompute cache."""
    perm = _check_perm(perm, tree_in.k)
    kind = "recouple" if perm == tuple(range(len(perm))) else "permute"
    key: GammaKey = (
        kind,
        tree_in.shape,
        perm,
        tree_out.shape,
        tuple(s.signature() for s in leaf_spaces),
        tuple(d.value for d in directions),
        root,
    )
    return (cache if cache is not None else default_cache()).get_or_build(
        key, lambda: _build(kind, tree_in, perm, tree_out, leaf_spaces, root), (tree_in, tree_out)
    )
