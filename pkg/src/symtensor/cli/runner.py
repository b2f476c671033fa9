"""Benchmark and solver runs behind the command line."""

from __future__ import annotations

import statistics
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from symtensor import block_linalg, config
from symtensor._observability import counting, logger
from symtensor._types import Direction
from symtensor.block_linalg import BlockDiagMatrix
from symtensor.charge_systems import su2_system
from symtensor.dense_oracle import random_invariant
from symtensor.exception import InvalidArgError
from symtensor.fusion_trees import left_comb
from symtensor.models import exact_diag, ground_sector, mera_build, mera_optimize
from symtensor.rep_spaces import RepSpace
from symtensor.sym_tensor import fuse, permute

if TYPE_CHECKING:
    from symtensor.cli.config import EdConfig, MeraConfig
    from symtensor.gamma_engine import GammaCache

BENCH_OPS = ("matmul", "svd", "permute", "fuse")
BENCH_MODES = ("sym", "dense")

PERMUTATION = (2, 3, 1, 0)
MERA_TARGET = 0.02
ED_REFERENCE_MAX_SPINS = 16

# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------


@dataclass
class BenchResult:
    """Timings and deterministic work counts of one ``(op, mode, q, d)`` combination."""

    op: str
    mode: str
    q: int
    d: int
    reps: int
    seconds: list[float] = field(default_factory=list)
    flops: int = 0

    @property
    def mean_seconds(self) -> float:
        return statistics.mean(self.seconds) if self.seconds else 0.0

    @property
    def min_seconds(self) -> float:
        return min(self.seconds) if self.seconds else 0.0

    def row(self) -> dict[str, Any]:
        return {
            "format_version": config.REPORT_FORMAT_VERSION,
            "op": self.op,
            "mode": self.mode,
            "q": self.q,
            "d": self.d,
            "reps": self.reps,
            "seconds": f"{self.mean_seconds:.6e}",
            "flops": self.flops,
        }


# ---------------------------------------------------------------------------
# Benchmark inputs
# ---------------------------------------------------------------------------


def bench_space(q: int, d: int) -> RepSpace:
    """Spins ``0 .. q-1``, each with degeneracy ``d``."""
    if q < 1 or d < 1:
        raise InvalidArgError(f"charges and degeneracy must be positive, got q={q}, d={d}")
    return RepSpace.from_dict(su2_system(), {2 * j: d for j in range(q)})


def _random_matrix(space: RepSpace, rng: np.random.Generator) -> BlockDiagMatrix:
    return BlockDiagMatrix(space, space, {c: rng.standard_normal((k, k)) for c, k in space.sectors})


def _work(op: str, mode: str, q: int, d: int, rng: np.random.Generator) -> Callable[[], Any]:
    """Closure running the operation once; its counter delta is the reported work."""
    space = bench_space(q, d)
    if op in ("matmul", "svd"):
        m = _random_matrix(space, rng)
        n = _random_matrix(space, rng)
        if mode == "sym":
            return (lambda: block_linalg.matmul(m, n)) if op == "matmul" else (lambda: block_linalg.svd(m))
        dm, dn = m.dense(), n.dense()
        return (lambda: dm @ dn) if op == "matmul" else (lambda: np.linalg.svd(dm))
    directions = (Direction.OUT, Direction.OUT, Direction.IN, Direction.IN)
    t = random_invariant([space] * 4, directions, left_comb(4), rng=rng)
    if mode == "sym":
        return (lambda: permute(t, PERMUTATION)) if op == "permute" else (lambda: fuse(t, [2, 2]))
    x = t.to_dense()
    dim = x.shape[0]
    if op == "permute":
        return lambda: np.ascontiguousarray(np.transpose(x, PERMUTATION))
    return lambda: np.ascontiguousarray(x).reshape(dim * dim, dim * dim).copy()


def _dense_work(op: str, q: int, d: int) -> int:
    dim = bench_space(q, d).dim
    if op == "matmul":
        return dim**3
    if op == "svd":
        return dim**3
    return dim**4


def run_bench(
    op: str, q: int, d: int, reps: int, modes: tuple[str, ...] = BENCH_MODES, seed: int | None = None
) -> list[BenchResult]:
    """Time ``op`` in each mode.

    ``flops`` is deterministic: for the symmetric mode it is the sum of the
    ``block_flops`` and ``gamma_coefficients_touched`` counters of a single
    run; for the dense mode it is the multiply-add (matmul, svd) or entry
    (permute, fuse) count of the dense realization.

    Raises:
        InvalidArgError: Unknown op or mode, or non-positive sizes.
    """
    if op not in BENCH_OPS:
        raise InvalidArgError(f"unknown op {op!r}; expected one of {BENCH_OPS}")
    if reps < 1:
        raise InvalidArgError(f"reps must be positive, got {reps}")
    results = []
    for mode in modes:
        if mode not in BENCH_MODES:
            raise InvalidArgError(f"unknown mode {mode!r}; expected one of {BENCH_MODES}")
        rng = np.random.default_rng(seed)
        run = _work(op, mode, q, d, rng)
        result = BenchResult(op, mode, q, d, reps)
        with counting() as delta:
            run()
        if mode == "sym":
            result.flops = delta["block_flops"] + delta["gamma_coefficients_touched"]
        else:
            result.flops = _dense_work(op, q, d)
        for _ in range(reps):
            start = time.perf_counter()
            run()
            result.seconds.append(time.perf_counter() - start)
        logger.info("bench %s/%s q=%d d=%d: %.3e s, %d flops", op, mode, q, d, result.mean_seconds, result.flops)
        results.append(result)
    return results


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def run_ed(cfg: EdConfig, cache: GammaCache | None = None, threads: int = 1) -> dict[str, Any]:
    with counting() as delta:
        spectra = exact_diag(cfg.length, cfg.periodic, cfg.sectors, cfg.method, cache, threads)
    twice_j, energy = ground_sector(spectra)
    return {
        "format_version": config.REPORT_FORMAT_VERSION,
        "kind": "ed",
        "length": cfg.length,
        "periodic": cfg.periodic,
        "method": cfg.method,
        "sectors": [
            {
                "twice_j": s.charge,
                "multiplicity": s.multiplicity,
                "count": len(s.energies),
                "energies": [float(e) for e in s.energies],
            }
            for s in spectra
        ],
        "ground": {"twice_j": twice_j, "energy": energy},
        "counters": dict(delta),
    }


def _ed_reference(num_spins: int, twice_j: int, chi_top: int, cache: GammaCache | None) -> float | None:
    if num_spins > ED_REFERENCE_MAX_SPINS or twice_j > num_spins or (num_spins - twice_j) % 2:
        return None
    (spectrum,) = exact_diag(num_spins, True, [twice_j], cache=cache)
    if len(spectrum.energies) < chi_top:
        return None
    return float(np.sum(spectrum.energies[:chi_top]))


def run_mera(cfg: MeraConfig, seed: int | None = None, cache: GammaCache | None = None) -> dict[str, Any]:
    """Build and optimize a MERA; compare with exact diagonalization when it is affordable."""
    rng = np.random.default_rng(seed)
    with counting() as delta:
        state = mera_build(cfg.levels, cfg.spaces(), cfg.top_charge, cfg.chi_top, rng)
        state, result = mera_optimize(state, sweeps=cfg.sweeps, cache=cache)
    energies = result.energies
    monotone = all(b <= a + 1e-8 * max(1.0, abs(a)) for a, b in zip(energies, energies[1:]))
    report: dict[str, Any] = {
        "format_version": config.REPORT_FORMAT_VERSION,
        "kind": "mera",
        "levels": cfg.levels,
        "spins": 2 * state.num_sites,
        "bond_dimensions": state.bond_dimensions,
        "top_charge": cfg.top_charge,
        "chi_top": cfg.chi_top,
        "energies": energies,
        "multiplet_energies": [float(e) for e in result.multiplet_energies],
        "sweeps": [record._asdict() for record in result.sweeps],
        "monotone": monotone,
        "counters": dict(delta),
    }
    if cfg.compare_ed and energies:
        reference = _ed_reference(2 * state.num_sites, cfg.top_charge, cfg.chi_top, cache)
        if reference is not None:
            final = energies[-1]
            error = abs(final - reference) / abs(reference) if reference else abs(final)
            report["ed_reference"] = reference
            report["relative_error"] = error
            report["variational"] = final >= reference - 1e-8 * max(1.0, abs(reference))
            report["target_met"] = error <= MERA_TARGET
    return report
