"""Periodic ternary MERA for the blocked Heisenberg ring.

Each layer has one disentangler ``u`` (legs ``l1, l2`` out, ``a1, a2`` in)
and one isometry ``w`` (``f1, f2, f3`` out, ``c`` in), shared by every
position of the layer. With ``Q`` layers the bottom ring has ``2·3^Q``
sites and the top tensor ``t`` (``c0, c1`` out, ``top`` in) couples the two
remaining sites to ``χ_top`` multiplets of total spin ``J``.

A two-site operator on the fine ring ascends to a two-site operator on the
coarse ring through three channels (``left``, ``centre``, ``right``): the
bond next to the middle leg of an isometry on either side, and the bond
inside a disentangler. Summing over every bond of a level, all coarse bonds
see the same ascended operator, so the energy is a single trace at the top
against ``ρ(AB) + ρ(BA)``. Densities descend through the adjoint channels.

Optimization sweeps bottom-up: each ``u`` and ``w`` is replaced by minus
the polar factor of its linearized environment (with the gate shifted to be
negative semidefinite), guarded by a backtracking check on the layer
energy; the top tensor is the lowest ``χ_top`` eigenvectors of the top
operator in sector ``J``.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from symtensor import block_linalg, config
from symtensor._observability import counting, logger
from symtensor._types import Direction
from symtensor.block_linalg import BlockDiagMatrix, blockdiag_to_tree, eig, polar_isometry, tree_to_blockdiag
from symtensor.charge_systems import su2_system
from symtensor.dense_oracle import random_invariant
from symtensor.exception import ConvergenceError, FusionRuleError, InvalidArgError
from symtensor.fusion_trees import FusionTree, bipartite
from symtensor.models.heisenberg import blocked_chain_gate, gate_spectrum, two_spin_site
from symtensor.network import contract_network
from symtensor.rep_spaces import FusedLeg, RepSpace
from symtensor.sym_tensor import (
    SymTensor,
    add,
    contract,
    dagger,
    from_json,
    fuse_with_records,
    identity,
    new_tree,
    permute,
    scale,
    split,
    tensors_residual,
)
from symtensor.types import MeraResult, SweepRecord

if TYPE_CHECKING:
    from symtensor.gamma_engine import GammaCache

__all__ = [
    "MeraLayer",
    "MeraState",
    "mera_build",
    "mera_optimize",
    "mera_energy",
    "ascend",
    "descend",
    "layer_energy",
    "top_density",
    "projection_energies",
    "isometry_residual",
    "bond_dimension",
    "CHANNELS",
]

OUT, IN = Direction.OUT, Direction.IN
OPERATOR_TREE = bipartite(2, 2)
U_DIRECTIONS = (OUT, OUT, IN, IN)
W_DIRECTIONS = (OUT, OUT, OUT, IN)
T_DIRECTIONS = (OUT, OUT, IN)
U_GROUPS = (2, 2)
W_GROUPS = (3, 1)
T_GROUPS = (2, 1)

MONOTONE_TOLERANCE = 1e-8
MAX_BACKTRACKS = 6
_ZERO = 1e-14

# Closed networks of one layer: every bond of a channel contracted against
# the density above. Labels are ordered so that ascending elimination keeps
# every intermediate at rank six or less.
CHANNELS: dict[str, dict[str, tuple[int, ...]]] = {
    "left": {
        "wdag_a": (3, 9, 10, 15),
        "wdag_b": (7, 1, 2, 16),
        "udag": (4, 5, 10, 7),
        "h": (9, 4, 11, 6),
        "w_a": (3, 11, 12, 13),
        "w_b": (8, 1, 2, 14),
        "u": (6, 5, 12, 8),
        "rho": (13, 14, 15, 16),
    },
    "centre": {
        "wdag_a": (3, 4, 11, 15),
        "wdag_b": (9, 1, 2, 16),
        "udag": (5, 6, 11, 9),
        "h": (5, 6, 7, 8),
        "w_a": (3, 4, 12, 13),
        "w_b": (10, 1, 2, 14),
        "u": (7, 8, 12, 10),
        "rho": (13, 14, 15, 16),
    },
    "right": {
        "wdag_a": (1, 2, 11, 15),
        "wdag_b": (7, 8, 3, 16),
        "udag": (5, 4, 11, 7),
        "h": (4, 8, 6, 10),
        "w_a": (1, 2, 12, 13),
        "w_b": (9, 10, 3, 14),
        "u": (5, 6, 12, 9),
        "rho": (13, 14, 15, 16),
    },
}

_ROLES = {"wdag_a": "wdag", "wdag_b": "wdag", "udag": "udag", "h": "h", "w_a": "w", "w_b": "w", "u": "u", "rho": "rho"}
_FLIP = (2, 3, 0, 1)


def bond_dimension(space: RepSpace) -> int:
    """``χ = Σ_j (2j+1) d_j``."""
    return space.dim


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeraLayer:
    u: SymTensor
    w: SymTensor


@dataclass(frozen=True)
class MeraState:
    """Tensors of a ternary MERA.

    Attributes:
        site: Space of a bottom site.
        spaces: Space of a coarse site after each layer.
        top_charge: Twice the total spin selected by the top tensor.
        chi_top: Number of multiplets kept at the top.
        layers: Disentangler and isometry per layer, bottom first.
        top: Top tensor ``(c0, c1, top)``.
    """

    site: RepSpace
    spaces: tuple[RepSpace, ...]
    top_charge: int
    chi_top: int
    layers: tuple[MeraLayer, ...]
    top: SymTensor

    @property
    def levels(self) -> int:
        return len(self.layers)

    @property
    def num_sites(self) -> int:
        return 2 * 3**self.levels

    @property
    def bond_dimensions(self) -> list[int]:
        return [bond_dimension(s) for s in self.spaces]

    def tensors(self) -> list[SymTensor]:
        return [t for layer in self.layers for t in (layer.u, layer.w)] + [self.top]

    def to_json(self) -> dict[str, Any]:
        return {
            "format_version": config.TENSOR_FORMAT_VERSION,
            "site": self.site.to_json(),
            "spaces": [s.to_json() for s in self.spaces],
            "top_charge": self.top_charge,
            "chi_top": self.chi_top,
            "layers": [{"u": layer.u.to_json(), "w": layer.w.to_json()} for layer in self.layers],
            "top": self.top.to_json(),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> MeraState:
        if data.get("format_version") != config.TENSOR_FORMAT_VERSION:
            raise InvalidArgError(f"unsupported MERA format version {data.get('format_version')!r}")
        return cls(
            RepSpace.from_json(data["site"]),
            tuple(RepSpace.from_json(s) for s in data["spaces"]),
            int(data["top_charge"]),
            int(data["chi_top"]),
            tuple(MeraLayer(from_json(layer["u"]), from_json(layer["w"])) for layer in data["layers"]),
            from_json(data["top"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> MeraState:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Matrix views
# ---------------------------------------------------------------------------


def _to_matrix(
    t: SymTensor, groups: Sequence[int], cache: GammaCache | None = None
) -> tuple[BlockDiagMatrix, list[FusedLeg]]:
    fused, records = fuse_with_records(t, list(groups), cache=cache)
    return tree_to_blockdiag(fused), records


def _from_matrix(
    m: BlockDiagMatrix, records: Sequence[FusedLeg], tree: FusionTree, cache: GammaCache | None = None
) -> SymTensor:
    x = blockdiag_to_tree(m, (OUT, records[1].fused_direction))
    x = split(x, 1, records[1], cache=cache)
    x = split(x, 0, records[0], cache=cache)
    return new_tree(x, tree, cache)


def isometry_residual(t: SymTensor, groups: Sequence[int]) -> float:
    """``max |B_c† B_c - 1|`` over the charges of the input group; 1 for a missing block."""
    m, _ = _to_matrix(t, groups)
    worst = 0.0
    for c, deg in m.cols.sectors:
        block = m.blocks.get(c)
        if block is None or block.shape[1] != deg:
            worst = max(worst, 1.0)
            continue
        worst = max(worst, float(np.max(np.abs(block.conj().T @ block - np.eye(deg)))))
    return worst


def _random_isometry(
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction],
    groups: Sequence[int],
    tree: FusionTree,
    rng: np.random.Generator,
    name: str,
) -> SymTensor:
    """Blockwise QR of a random invariant tensor; charges that cannot be filled are warned about."""
    t = random_invariant(spaces, directions, tree, rng=rng)
    m, records = _to_matrix(t, groups)
    q, _ = block_linalg.qr(m)
    blocks = {}
    for c, deg in m.cols.sectors:
        qc = q.blocks.get(c)
        if qc is None or qc.shape[1] < deg:
            available = 0 if qc is None else qc.shape[1]
            message = f"{name}: sector {c} needs {deg} states but the fused legs provide {available}"
            logger.warning(message)
            warnings.warn(message, RuntimeWarning, stacklevel=3)
            if qc is None:
                continue
            qc = np.pad(qc, ((0, 0), (0, deg - qc.shape[1])))
        blocks[c] = qc
    return _from_matrix(BlockDiagMatrix(m.rows, m.cols, blocks), records, tree)


def mera_build(
    levels: int = 1,
    assignments: Sequence[RepSpace] | None = None,
    top_charge: int = 0,
    chi_top: int = 1,
    rng: np.random.Generator | None = None,
    site: RepSpace | None = None,
) -> MeraState:
    """Random isometric MERA.

    Args:
        levels: Number of layers ``Q``; the bottom ring has ``2·3^Q`` sites.
        assignments: Coarse site space after each layer; all equal to the
            bottom site space by default.
        top_charge: Twice the total spin of the top index.
        chi_top: Multiplets kept at the top.

    Raises:
        InvalidArgError: Bad level count, assignment list or ``chi_top``.
        FusionRuleError: The top charge cannot be reached.
    """
    if levels < 1:
        raise InvalidArgError(f"a MERA needs at least one layer, got {levels}")
    if chi_top < 1:
        raise InvalidArgError(f"chi_top must be positive, got {chi_top}")
    rng = rng or np.random.default_rng()
    site = site or two_spin_site()
    spaces = tuple(assignments) if assignments is not None else (site,) * levels
    if len(spaces) != levels:
        raise InvalidArgError(f"{levels} layers need {levels} assignments, got {len(spaces)}")
    layers = []
    below = site
    for q, above in enumerate(spaces):
        u = _random_isometry([below] * 4, U_DIRECTIONS, U_GROUPS, OPERATOR_TREE, rng, f"disentangler {q}")
        w = _random_isometry([below] * 3 + [above], W_DIRECTIONS, W_GROUPS, bipartite(3, 1), rng, f"isometry {q}")
        layers.append(MeraLayer(u, w))
        below = above
    top_space = RepSpace.from_dict(su2_system(), {top_charge: chi_top})
    try:
        top = _random_isometry([below, below, top_space], T_DIRECTIONS, T_GROUPS, bipartite(2, 1), rng, "top")
    except FusionRuleError as exc:
        raise FusionRuleError(f"top charge {top_charge} is not reachable from {below!r} x {below!r}") from exc
    state = MeraState(site, spaces, top_charge, chi_top, tuple(layers), top)
    logger.info("built MERA: %d layers, bond dimensions %s, 2J=%d, chi_top=%d", levels, state.bond_dimensions,
                top_charge, chi_top)
    return state


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


def _roles(layer: MeraLayer, h: SymTensor | None = None, rho: SymTensor | None = None) -> dict[str, SymTensor]:
    roles = {"u": layer.u, "udag": dagger(layer.u), "w": layer.w, "wdag": dagger(layer.w)}
    if h is not None:
        roles["h"] = h
    if rho is not None:
        roles["rho"] = rho
    return roles


def _network(
    channel: str,
    roles: Mapping[str, SymTensor],
    remove: str | None = None,
    open_order: Sequence[int] | None = None,
    cache: GammaCache | None = None,
) -> Any:
    labels = CHANNELS[channel]
    relabel: dict[int, int] = {}
    if remove is not None:
        legs = labels[remove]
        for n, leg in enumerate(open_order if open_order is not None else range(len(legs))):
            relabel[legs[leg]] = -(n + 1)
    names = [name for name in labels if name != remove]
    tensors = [roles[_ROLES[name]] for name in names]
    legs = [[relabel.get(x, x) for x in labels[name]] for name in names]
    return contract_network(tensors, legs, cache=cache)


def _operator(t: SymTensor, cache: GammaCache | None = None) -> SymTensor:
    return new_tree(t, OPERATOR_TREE, cache)


def _sum(parts: Sequence[SymTensor], cache: GammaCache | None = None) -> SymTensor:
    total = _operator(parts[0], cache)
    for part in parts[1:]:
        total = add(total, _operator(part, cache))
    return total


def ascend(layer: MeraLayer, h: SymTensor, cache: GammaCache | None = None) -> SymTensor:
    """Two-site operator on the coarse ring collecting every fine bond of one coarse bond."""
    roles = _roles(layer, h=h)
    return _sum([_network(ch, roles, "rho", _FLIP, cache) for ch in CHANNELS], cache)


def descend(layer: MeraLayer, rho: SymTensor, cache: GammaCache | None = None) -> SymTensor:
    """Sum of the two-site densities of every fine bond, given the summed coarse density."""
    roles = _roles(layer, rho=rho)
    return _sum([_network(ch, roles, "h", _FLIP, cache) for ch in CHANNELS], cache)


def layer_energy(layer: MeraLayer, h: SymTensor, rho: SymTensor, cache: GammaCache | None = None) -> float:
    """``Tr(ρ · ascend(h))`` for one layer."""
    roles = _roles(layer, h=h, rho=rho)
    return float(np.real(sum(_network(ch, roles, cache=cache) for ch in CHANNELS)))


def top_density(top: SymTensor, cache: GammaCache | None = None) -> SymTensor:
    """``ρ(AB) + ρ(BA)`` of the two top sites, summed over the kept top states."""
    rho = _operator(contract(top, dagger(top), [(2, 2)], cache), cache)
    return add(rho, permute(rho, (1, 0, 3, 2), OPERATOR_TREE, cache))


def _operator_identity(space: RepSpace) -> SymTensor:
    eye = identity(space)
    return permute(contract(eye, eye, []), (0, 2, 1, 3), OPERATOR_TREE)


def _top_operator(h: SymTensor, cache: GammaCache | None = None) -> SymTensor:
    h = _operator(h, cache)
    return add(h, permute(h, (1, 0, 3, 2), OPERATOR_TREE, cache))


def _prepare_gate(state: MeraState, gate: SymTensor | None) -> SymTensor:
    gate = blocked_chain_gate() if gate is None else gate
    if gate.spaces != (state.site,) * 4 or gate.directions != U_DIRECTIONS:
        raise InvalidArgError(f"gate legs {gate.spaces} do not act on two sites {state.site!r}")
    return _operator(gate)


def mera_energy(state: MeraState, gate: SymTensor | None = None, cache: GammaCache | None = None) -> float:
    """Energy of the kept top multiplets, each multiplet counted once."""
    h = _prepare_gate(state, gate)
    for layer in state.layers:
        h = ascend(layer, h, cache)
    rho = _operator(contract(state.top, dagger(state.top), [(2, 2)], cache), cache)
    value = contract_network([rho, _top_operator(h, cache)], [[3, 4, 1, 2], [1, 2, 3, 4]], cache=cache)
    return float(np.real(value)) / (state.top_charge + 1)


def projection_energies(state: MeraState, gate: SymTensor | None = None) -> np.ndarray:
    """Energy of every top state on the dense realization, one per ``m_J`` and multiplet."""
    h = _prepare_gate(state, gate)
    for layer in state.layers:
        h = ascend(layer, h)
    top_h = _top_operator(h).to_dense()
    d = top_h.shape[0]
    matrix = top_h.reshape(d * d, d * d)
    t = state.top.to_dense().reshape(d * d, -1)
    return np.real(np.einsum("ix,ij,jx->x", t.conj(), matrix, t))


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------


def _checked(m: BlockDiagMatrix, what: str) -> float:
    total = 0.0
    for c, block in m.blocks.items():
        if not np.all(np.isfinite(block)):
            raise ConvergenceError(f"{what} environment has non-finite entries in sector {c}")
        total += float(np.vdot(block, block).real)
    return float(np.sqrt(total))


def _polar_update(
    old: SymTensor,
    pieces: Sequence[SymTensor],
    groups: Sequence[int],
    energy_of: Callable[[SymTensor], float],
    e_old: float,
    what: str,
    cache: GammaCache | None,
) -> tuple[SymTensor, float]:
    env, records = _to_matrix(dagger(pieces[0]), groups, cache)
    for piece in pieces[1:]:
        env = block_linalg.add(env, _to_matrix(dagger(piece), groups, cache)[0])
    if _checked(env, what) <= _ZERO:
        return old, e_old
    current, _ = _to_matrix(old, groups, cache)
    target = block_linalg.scale(polar_isometry(env), -1.0)
    tolerance = MONOTONE_TOLERANCE * max(1.0, abs(e_old))
    alpha = 1.0
    for _ in range(MAX_BACKTRACKS):
        mix = target if alpha == 1.0 else polar_isometry(
            block_linalg.add(block_linalg.scale(target, alpha), block_linalg.scale(current, 1.0 - alpha))
        )
        blocks = {**current.blocks, **mix.blocks}
        candidate = _from_matrix(BlockDiagMatrix(current.rows, current.cols, blocks), records, old.tree, cache)
        e_new = energy_of(candidate)
        if e_new <= e_old + tolerance:
            return candidate, e_new
        alpha /= 2
    logger.debug("%s update rejected after %d backtracking steps", what, MAX_BACKTRACKS)
    return old, e_old


def _update_layer(layer: MeraLayer, h: SymTensor, rho: SymTensor, cache: GammaCache | None) -> MeraLayer:
    e_old = layer_energy(layer, h, rho, cache)

    roles = _roles(layer, h=h, rho=rho)
    u_env = [_network(ch, roles, "u", cache=cache) for ch in CHANNELS]
    u, e_old = _polar_update(
        layer.u, u_env, U_GROUPS, lambda c: layer_energy(replace(layer, u=c), h, rho, cache), e_old, "u", cache
    )
    layer = replace(layer, u=u)

    roles = _roles(layer, h=h, rho=rho)
    w_env = [_network(ch, roles, name, cache=cache) for ch in CHANNELS for name in ("w_a", "w_b")]
    w, _ = _polar_update(
        layer.w, w_env, W_GROUPS, lambda c: layer_energy(replace(layer, w=c), h, rho, cache), e_old, "w", cache
    )
    return replace(layer, w=w)


def _update_top(state: MeraState, h: SymTensor, cache: GammaCache | None) -> tuple[SymTensor, np.ndarray]:
    m, records = _to_matrix(_top_operator(h, cache), (2, 2), cache)
    result = eig(m)
    values = result.values.get(state.top_charge)
    if values is None or len(values) < state.chi_top:
        raise FusionRuleError(f"top operator has fewer than {state.chi_top} states with 2J={state.top_charge}")
    kept = values[: state.chi_top]
    if np.ptp(values) <= _ZERO:
        return state.top, kept
    vectors = result.vectors.blocks[state.top_charge][:, : state.chi_top]
    top_space = state.top.spaces[2]
    t = blockdiag_to_tree(BlockDiagMatrix(m.rows, top_space, {state.top_charge: vectors}), (OUT, IN))
    t = split(t, 0, records[0], cache=cache)
    return new_tree(t, state.top.tree, cache), kept


def _densities(state: MeraState, cache: GammaCache | None) -> list[SymTensor]:
    """Summed density above each layer, bottom layer first."""
    rhos = [top_density(state.top, cache)]
    for layer in reversed(state.layers[1:]):
        rhos.append(descend(layer, rhos[-1], cache))
    return rhos[::-1]


def _residuals(state: MeraState) -> tuple[float, float]:
    iso = isometry_residual(state.top, T_GROUPS)
    for layer in state.layers:
        iso = max(iso, isometry_residual(layer.u, U_GROUPS), isometry_residual(layer.w, W_GROUPS))
    return iso, tensors_residual(state.tensors())


def mera_optimize(
    state: MeraState,
    gate: SymTensor | None = None,
    sweeps: int = 100,
    cache: GammaCache | None = None,
    callback: Callable[[SweepRecord], None] | None = None,
) -> tuple[MeraState, MeraResult]:
    """Minimize the energy of the kept top multiplets.

    Args:
        state: Initial tensors (see :func:`mera_build`).
        gate: Two-site term of the bottom ring; the blocked Heisenberg term
            by default.
        sweeps: Number of bottom-up sweeps.
        callback: Called with each sweep's record.

    Returns:
        The optimized state and the per-sweep trace. Energies count each
        kept multiplet once.

    Raises:
        ConvergenceError: An environment became non-finite.
    """
    h0 = _prepare_gate(state, gate)
    spectrum = gate_spectrum(h0)
    shift = max(float(np.max(v)) for v in spectrum.values())
    h0 = add(h0, scale(_operator_identity(state.site), -shift))
    offset = shift * state.num_sites * state.chi_top

    energies: list[float] = []
    records: list[SweepRecord] = []
    kept = np.zeros(state.chi_top)
    for sweep in range(1, sweeps + 1):
        with counting() as delta:
            rhos = _densities(state, cache)
            h = h0
            layers = list(state.layers)
            for q, layer in enumerate(layers):
                layers[q] = _update_layer(layer, h, rhos[q], cache)
                h = ascend(layers[q], h, cache)
            state = replace(state, layers=tuple(layers))
            top, kept = _update_top(state, h, cache)
            state = replace(state, top=top)
        energy = float(np.sum(kept)) + offset
        if energies and energy > energies[-1] + MONOTONE_TOLERANCE * max(1.0, abs(energies[-1])):
            message = f"sweep {sweep}: energy rose from {energies[-1]:.12f} to {energy:.12f}"
            logger.warning(message)
            warnings.warn(message, RuntimeWarning, stacklevel=2)
        iso, inv = _residuals(state)
        record = SweepRecord(sweep, energy, iso, inv, delta["spin_networks"])
        energies.append(energy)
        records.append(record)
        logger.info(
            "sweep %d: energy %.12f, isometry %.1e, invariance %.1e, spin networks %d",
            sweep, energy, iso, inv, record.spin_networks,
        )
        if callback is not None:
            callback(record)
    shift_per_multiplet = shift * state.num_sites
    return state, MeraResult(energies, records, np.asarray(kept) + shift_per_multiplet)
