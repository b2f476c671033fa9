"""Shared test utilities: random spaces, random invariant tensors and dense comparisons."""

import numpy as np

from symtensor import OUT, RepSpace
from symtensor.charge_systems import su2_system, u1_system, z2_fermion_system
from symtensor.dense_oracle import random_invariant
from symtensor.exception import FusionRuleError
from symtensor.fusion_trees import left_comb

SU2_INTEGER = [{0: 1, 2: 1}, {0: 1, 2: 2}, {0: 2, 2: 1, 4: 1}]
SU2_HALF = [{1: 1}, {1: 2, 3: 1}]
U1_POOL = [{-1: 1, 0: 2, 1: 1}, {0: 1, 1: 2}, {-1: 2, 1: 1}]
Z2F_POOL = [{0: 1, 1: 1}, {0: 2, 1: 1}, {0: 1, 1: 2}]


def su2(sectors):
    return RepSpace.from_dict(su2_system(), sectors)


def u1(sectors):
    return RepSpace.from_dict(u1_system(), sectors)


def z2f(sectors):
    return RepSpace.from_dict(z2_fermion_system(), sectors)


def random_spaces(rng, system_name, k):
    """``k`` small spaces of one system; SU(2) picks keep an even number of half-integer legs."""
    if system_name == "su2":
        picks = [(SU2_INTEGER + SU2_HALF)[int(rng.integers(5))] for _ in range(k - 1)]
        last = SU2_HALF if sum(p in SU2_HALF for p in picks) % 2 else SU2_INTEGER
        picks.append(last[int(rng.integers(len(last)))])
        return [su2(p) for p in picks]
    pool, make = (U1_POOL, u1) if system_name == "u1" else (Z2F_POOL, z2f)
    return [make(pool[int(rng.integers(len(pool)))]) for _ in range(k)]


def random_tensor(rng, system_name, directions, tree=None):
    """Random invariant tensor over random spaces, retrying until a path reaches the root."""
    k = len(directions)
    for _ in range(50):
        try:
            return random_invariant(random_spaces(rng, system_name, k), directions, tree or left_comb(k), rng=rng)
        except FusionRuleError:
            continue
    raise AssertionError(f"no invariant {system_name} tensor with legs {directions}")


def max_abs(x):
    return float(np.max(np.abs(x), initial=0.0))


def all_out(k):
    return (OUT,) * k
