"""Property suites run by ``symtensor verify``.

Each check draws a few random instances, compares the symmetric engine with
a dense or closed-form reference and reports the worst residual.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from symtensor import block_linalg, config
from symtensor._observability import logger
from symtensor._types import Direction
from symtensor.block_linalg import BlockDiagMatrix
from symtensor.charge_systems import su2_system, u1_system, z2_fermion_system
from symtensor.dense_oracle import (
    dense_contract,
    dense_fuse,
    dense_reverse,
    graded_permute,
    invariance_residual,
    random_invariant,
)
from symtensor.exception import FusionRuleError
from symtensor.fusion_trees import left_comb, right_comb
from symtensor.gamma_engine import gamma_dense, gamma_permute, gamma_recouple
from symtensor.models import (
    dense_sector_spectra,
    exact_diag,
    gate_spectrum,
    heisenberg_gate,
    isometry_residual,
    mera_build,
    mera_optimize,
)
from symtensor.rep_spaces import RepSpace
from symtensor.su2_kernels import cg_block, wigner_6j
from symtensor.sym_tensor import SymTensor, contract, from_dense, fuse_with_records, permute, reverse

OUT, IN, IN_R = Direction.OUT, Direction.IN, Direction.IN_R
SUITES = ("kernels", "tensors", "linalg", "models")
TOLERANCE = 1e-9
MERA_TOLERANCE = 1e-6

Check = Callable[[np.random.Generator], tuple[int, float]]


@dataclass
class CheckResult:
    name: str
    suite: str
    instances: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual)) and self.max_residual <= self.tolerance

    def to_json(self) -> dict[str, Any]:
        return {**asdict(self), "passed": self.passed}


def _spaces(rng: np.random.Generator, system_name: str, k: int) -> list[RepSpace]:
    if system_name == "su2":
        integer = [{0: 1, 2: 1}, {0: 1, 2: 2}, {0: 2, 2: 1, 4: 1}]
        half = [{1: 1}, {1: 2, 3: 1}]
        picks = [(integer + half)[int(rng.integers(len(integer) + len(half)))] for _ in range(k - 1)]
        # an even number of half-integer legs can reach the trivial root
        last = half if sum(p in half for p in picks) % 2 else integer
        picks.append(last[int(rng.integers(len(last)))])
        return [RepSpace.from_dict(su2_system(), p) for p in picks]
    if system_name == "u1":
        system = u1_system()
        pool = [{-1: 1, 0: 2, 1: 1}, {0: 1, 1: 2}, {-1: 2, 1: 1}]
    else:
        system = z2_fermion_system()
        pool = [{0: 1, 1: 1}, {0: 2, 1: 1}, {0: 1, 1: 2}]
    return [RepSpace.from_dict(system, pool[int(rng.integers(len(pool)))]) for _ in range(k)]


def _tensor(rng: np.random.Generator, system_name: str, k: int, directions: tuple[Direction, ...]) -> SymTensor:
    for _ in range(20):
        spaces = _spaces(rng, system_name, k)
        try:
            return random_invariant(spaces, directions, left_comb(k), rng=rng)
        except FusionRuleError:
            continue
    raise FusionRuleError(f"no invariant {system_name} tensor of rank {k} found")


# ── kernels ──


def _cg_orthogonality(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for ta, tb in itertools.product(range(5), repeat=2):
        dim = (ta + 1) * (tb + 1)
        columns = [cg_block(ta, tb, tc).reshape(dim, tc + 1) for tc in range(abs(ta - tb), ta + tb + 1, 2)]
        v = np.concatenate(columns, axis=1)
        worst = max(worst, float(np.max(np.abs(v.T @ v - np.eye(v.shape[1])))))
        count += 1
    return count, worst


def _six_j_symmetry(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for _ in range(40):
        a, b, c, d, e, f = (int(x) for x in rng.integers(0, 5, size=6))
        value = wigner_6j(a, b, c, d, e, f)
        for other in (wigner_6j(b, a, c, e, d, f), wigner_6j(a, e, f, d, b, c), wigner_6j(d, e, c, a, b, f)):
            worst = max(worst, abs(value - other))
        count += 1
    return count, worst


def _gamma_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for system_name in ("su2", "u1", "z2f"):
        for _ in range(3):
            spaces = _spaces(rng, system_name, 4)
            perm = tuple(int(p) for p in rng.permutation(4))
            cases = [
                (gamma_recouple(left_comb(4), right_comb(4), spaces), left_comb(4), tuple(range(4)), right_comb(4)),
                (gamma_permute(left_comb(4), perm, left_comb(4), spaces), left_comb(4), perm, left_comb(4)),
            ]
            for fast, tree_in, p, tree_out in cases:
                slow = gamma_dense(tree_in, p, tree_out, spaces)
                for path in set(fast.entries) | set(slow.entries):
                    targets = {q for q, _ in fast.entries.get(path, ())} | {q for q, _ in slow.entries.get(path, ())}
                    for q in targets:
                        worst = max(worst, abs(fast.coefficient(path, q) - slow.coefficient(path, q)))
                count += 1
    return count, worst


# ── tensors ──


def _dense_round_trip(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for system_name in ("su2", "u1", "z2f"):
        t = _tensor(rng, system_name, 4, (OUT, OUT, IN, IN_R))
        x = t.to_dense()
        back = from_dense(x, t.spaces, t.directions)
        worst = max(worst, float(np.max(np.abs(back.to_dense() - x), initial=0.0)))
        worst = max(worst, invariance_residual(x, t.spaces, t.directions))
        count += 1
    return count, worst


def _permute_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for system_name in ("su2", "u1", "z2f"):
        t = _tensor(rng, system_name, 4, (OUT, IN, OUT, IN))
        perm = tuple(int(p) for p in rng.permutation(4))
        expected = graded_permute(t.to_dense(), perm, t.spaces)
        worst = max(worst, float(np.max(np.abs(permute(t, perm).to_dense() - expected), initial=0.0)))
        count += 1
    return count, worst


def _fuse_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for system_name in ("su2", "u1"):
        t = _tensor(rng, system_name, 4, (OUT, OUT, IN, IN))
        fused, records = fuse_with_records(t, [2, 2])
        expected = dense_fuse(dense_fuse(t.to_dense(), 2, records[1]), 0, records[0])
        worst = max(worst, float(np.max(np.abs(fused.to_dense() - expected), initial=0.0)))
        count += 1
    return count, worst


def _contract_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    for system_name in ("su2", "u1", "z2f"):
        a = _tensor(rng, system_name, 3, (OUT, OUT, IN))
        b = random_invariant([a.spaces[1], a.spaces[1]], (IN, OUT), rng=rng)
        c = contract(a, b, [(1, 0)])
        expected = dense_contract(a.to_dense(), b.to_dense(), [(1, 0)], (a.spaces, b.spaces))
        worst = max(worst, float(np.max(np.abs(c.to_dense() - expected), initial=0.0)))
        count += 1
    return count, worst


def _reverse_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst, count = 0.0, 0
    t = _tensor(rng, "su2", 3, (OUT, OUT, IN))
    for new in (IN, IN_R):
        r = reverse(t, {0: new})
        expected = dense_reverse(t.to_dense(), 0, t.tree_spaces[0], OUT, new)
        worst = max(worst, float(np.max(np.abs(r.to_dense() - expected), initial=0.0)))
        worst = max(worst, invariance_residual(r.to_dense(), r.spaces, r.directions))
        count += 1
    return count, worst


# ── linalg ──


def _block_matrix(rng: np.random.Generator, rows: RepSpace, cols: RepSpace) -> BlockDiagMatrix:
    shared = [c for c in rows.charges if c in cols]
    blocks = {c: rng.standard_normal((rows.degeneracy(c), cols.degeneracy(c))) for c in shared}
    return BlockDiagMatrix(rows, cols, blocks)


def _matmul_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    space = RepSpace.from_dict(su2_system(), {0: 2, 2: 3, 4: 1})
    worst = 0.0
    for _ in range(3):
        m, n = _block_matrix(rng, space, space), _block_matrix(rng, space, space)
        worst = max(worst, float(np.max(np.abs(block_linalg.matmul(m, n).dense() - m.dense() @ n.dense()))))
    return 3, worst


def _svd_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    rows = RepSpace.from_dict(su2_system(), {0: 3, 2: 2, 4: 2})
    cols = RepSpace.from_dict(su2_system(), {0: 2, 2: 3, 4: 1})
    worst = 0.0
    for _ in range(3):
        m = _block_matrix(rng, rows, cols)
        u, s, v = block_linalg.svd(m)
        worst = max(worst, float(np.max(np.abs((u @ s @ v).dense() - m.dense()))))
        values = np.sort(np.diag(s.dense()))[::-1]
        dense = np.linalg.svd(m.dense(), compute_uv=False)[: len(values)]
        worst = max(worst, float(np.max(np.abs(values - dense))))
    return 3, worst


def _polar_isometry(rng: np.random.Generator) -> tuple[int, float]:
    rows = RepSpace.from_dict(su2_system(), {0: 4, 2: 3})
    cols = RepSpace.from_dict(su2_system(), {0: 2, 2: 2})
    worst = 0.0
    for _ in range(3):
        w = block_linalg.polar_isometry(_block_matrix(rng, rows, cols))
        for c, block in w.blocks.items():
            worst = max(worst, float(np.max(np.abs(block.T @ block - np.eye(cols.degeneracy(c))))))
    return 3, worst


# ── models ──


def _gate_spectrum(rng: np.random.Generator) -> tuple[int, float]:
    values = gate_spectrum(heisenberg_gate())
    return 1, max(abs(float(values[0][0]) + 3.0), abs(float(values[2][0]) - 1.0))


def _ed_against_dense(rng: np.random.Generator) -> tuple[int, float]:
    worst = 0.0
    for length in (4, 6):
        for fast, slow in zip(exact_diag(length), dense_sector_spectra(length)):
            worst = max(worst, float(np.max(np.abs(fast.energies - slow.energies))))
    return 2, worst


def _mera_sweeps(rng: np.random.Generator) -> tuple[int, float]:
    state = mera_build(1, rng=rng)
    state, result = mera_optimize(state, sweeps=3)
    rises = [max(0.0, b - a) for a, b in zip(result.energies, result.energies[1:])]
    iso = max(isometry_residual(layer.u, (2, 2)) for layer in state.layers)
    return len(result.energies), max([iso, *rises])


CHECKS: dict[str, list[tuple[str, Check, float]]] = {
    "kernels": [
        ("cg_orthogonality", _cg_orthogonality, TOLERANCE),
        ("six_j_symmetry", _six_j_symmetry, TOLERANCE),
        ("gamma_against_dense", _gamma_against_dense, TOLERANCE),
    ],
    "tensors": [
        ("dense_round_trip", _dense_round_trip, TOLERANCE),
        ("permute_against_dense", _permute_against_dense, TOLERANCE),
        ("fuse_against_dense", _fuse_against_dense, TOLERANCE),
        ("contract_against_dense", _contract_against_dense, TOLERANCE),
        ("reverse_against_dense", _reverse_against_dense, TOLERANCE),
    ],
    "linalg": [
        ("matmul_against_dense", _matmul_against_dense, TOLERANCE),
        ("svd_against_dense", _svd_against_dense, TOLERANCE),
        ("polar_isometry", _polar_isometry, TOLERANCE),
    ],
    "models": [
        ("gate_spectrum", _gate_spectrum, TOLERANCE),
        ("ed_against_dense", _ed_against_dense, TOLERANCE),
        ("mera_sweeps", _mera_sweeps, MERA_TOLERANCE),
    ],
}


def run_suites(suites: list[str], seed: int | None = None) -> list[CheckResult]:
    results = []
    for suite in suites:
        for name, check, tolerance in CHECKS[suite]:
            rng = np.random.default_rng(seed)
            instances, residual = check(rng)
            result = CheckResult(name, suite, instances, residual, tolerance)
            logger.info("verify %s/%s: %d instances, residual %.2e", suite, name, instances, residual)
            results.append(result)
    return results


def verify_report(results: list[CheckResult]) -> dict[str, Any]:
    return {
        "format_version": config.REPORT_FORMAT_VERSION,
        "passed": all(r.passed for r in results),
        "properties": [r.to_json() for r in results],
    }
