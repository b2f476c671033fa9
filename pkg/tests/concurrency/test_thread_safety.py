"""Multi-threaded safety of the shared memo tables, the gamma cache and the counters."""

import queue
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

import symtensor
from symtensor._cache import Memo
from symtensor._observability import bump
from symtensor.fusion_trees import bipartite, left_comb, paired_comb, right_comb, tree_node_index
from symtensor.gamma_engine import GammaCache, cached_gamma
from symtensor.models import exact_diag, spin_half
from symtensor.su2_kernels import cg_block, clear_kernel_caches, wigner_6j
from tests.concurrency.utils import _drain
from tests.helpers import all_out

pytestmark = pytest.mark.concurrency

NUM_THREADS = 8


def _run_threads(target, num_threads=NUM_THREADS):
    """Start ``num_threads`` threads on ``target(thread_id)`` behind a barrier; return the errors raised."""
    errors = queue.SimpleQueue()
    barrier = threading.Barrier(num_threads)

    def run(tid):
        try:
            barrier.wait()
            target(tid)
        except Exception as e:
            errors.put(e)

    threads = [threading.Thread(target=run, args=(t,)) for t in range(num_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return errors


class TestMemo:
    def test_every_caller_gets_the_stored_value(self):
        memo = Memo("test")
        seen = queue.SimpleQueue()

        def worker(tid):
            for key in range(20):
                seen.put((key, memo.get(key, lambda: object())))

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent memo reads: {_drain(errors)}"
        by_key = {}
        for key, value in _drain(seen):
            by_key.setdefault(key, set()).add(id(value))
        assert len(memo) == 20
        assert all(len(ids) == 1 for ids in by_key.values())

    def test_kernels_from_cold_caches(self):
        args = [(ta, tb, tc) for ta in range(4) for tb in range(4) for tc in range(abs(ta - tb), ta + tb + 1, 2)]
        expected = {a: cg_block(*a).copy() for a in args}
        six_j = {(a, b): wigner_6j(*a, *b) for a in args for b in args[:5]}
        clear_kernel_caches()

        def worker(tid):
            for a in args[tid % 3 :] + args[: tid % 3]:
                np.testing.assert_allclose(cg_block(*a), expected[a], atol=1e-14)
            for (a, b), value in six_j.items():
                assert wigner_6j(*a, *b) == value

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent kernel builds: {_drain(errors)}"

    def test_node_index_from_many_threads(self):
        trees = [left_comb(k) for k in range(2, 9)] + [right_comb(k) for k in range(2, 9)] + [bipartite(3, 4)]

        def worker(tid):
            for tree in trees[tid:] + trees[:tid]:
                shapes = list(range(tree.k))
                for n, (left, right) in enumerate(tree.nodes):
                    shapes.append((shapes[left], shapes[right]))
                    assert tree_node_index(tree, shapes[-1]) == n

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent node lookups: {_drain(errors)}"


# ── gamma cache ────────────────────────────────────────────


class TestGammaCache:
    def _args(self):
        return left_comb(4), (1, 0, 3, 2), paired_comb(4, 1), [spin_half()] * 4, all_out(4), 0

    def test_concurrent_builds_share_one_map(self, tmp_path):
        cache = GammaCache(tmp_path / "gamma")
        results = queue.SimpleQueue()

        def worker(tid):
            results.put(cached_gamma(*self._args(), cache=cache))

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent gamma builds: {_drain(errors)}"
        maps = _drain(results)
        assert len(maps) == NUM_THREADS
        assert all(m is maps[0] for m in maps)
        stats = cache.stats()
        assert stats["entries"] == 1
        assert stats["hits"] + stats["misses"] == NUM_THREADS
        assert stats["corrupt_files"] == 0

    def test_persisted_file_is_readable_after_racing_writers(self, tmp_path):
        cache = GammaCache(tmp_path / "gamma")
        errors = _run_threads(lambda tid: cached_gamma(*self._args(), cache=cache))
        assert errors.empty(), f"Errors during concurrent gamma writes: {_drain(errors)}"
        assert len(list((tmp_path / "gamma").glob("gamma-*.json"))) == 1
        assert not list((tmp_path / "gamma").glob("*.tmp"))

        fresh = GammaCache(tmp_path / "gamma")
        loaded = cached_gamma(*self._args(), cache=fresh)
        assert fresh.stats()["disk_loads"] == 1
        assert loaded.entries == cached_gamma(*self._args(), cache=cache).entries

    def test_many_keys(self):
        cache = GammaCache()
        perms = [(1, 0, 2, 3), (0, 2, 1, 3), (3, 2, 1, 0), (2, 3, 0, 1)]
        half = [spin_half()] * 4

        def worker(tid):
            for perm in perms[tid % 4 :] + perms[: tid % 4]:
                cached_gamma(left_comb(4), perm, left_comb(4), half, all_out(4), 0, cache)

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent gamma builds: {_drain(errors)}"
        assert len(cache) == len(perms)


# ── counters and solvers ───────────────────────────────────


class TestCounters:
    def test_bumps_are_not_lost(self, counters_reset):
        increments = 1000

        def worker(tid):
            for _ in range(increments):
                bump("kernel_evaluations")

        errors = _run_threads(worker)
        assert errors.empty(), f"Errors during concurrent bumps: {_drain(errors)}"
        assert symtensor.counters()["kernel_evaluations"] == NUM_THREADS * increments


class TestExactDiag:
    def test_parallel_solves_agree(self, cache):
        reference = exact_diag(8, cache=cache)
        with ThreadPoolExecutor(max_workers=4) as pool:
            runs = list(pool.map(lambda _: exact_diag(8, threads=2, cache=cache), range(4)))
        for spectra in runs:
            for a, b in zip(spectra, reference):
                assert a.charge == b.charge
                np.testing.assert_allclose(a.energies, b.energies, atol=1e-10)
