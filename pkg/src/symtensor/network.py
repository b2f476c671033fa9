"""Contraction of small tensor networks given in ncon notation."""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from typing import TYPE_CHECKING, Any, Union

from symtensor._observability import logger
from symtensor.exception import InvalidArgError
from symtensor.sym_tensor import SymTensor, contract, contract_scalar, identity, permute, scale

if TYPE_CHECKING:
    from symtensor.gamma_engine import GammaCache

__all__ = ["contract_network", "check_labels"]

NetworkResult = Union[SymTensor, Any]


def check_labels(tensors: Sequence[SymTensor], labels: Sequence[Sequence[int]]) -> list[int]:
    """Validate ``labels`` and return the positive labels in contraction order.

    Raises:
        InvalidArgError: A label list does not match its tensor, a positive
            label does not occur exactly twice, or the open labels are not
            ``-1 .. -n``.
    """
    if len(tensors) != len(labels):
        raise InvalidArgError(f"{len(tensors)} tensors but {len(labels)} label lists")
    if not tensors:
        raise InvalidArgError("empty network")
    counts: Counter[int] = Counter()
    for n, (t, legs) in enumerate(zip(tensors, labels)):
        if len(legs) != t.rank:
            raise InvalidArgError(f"tensor {n} has rank {t.rank} but {len(legs)} labels")
        counts.update(int(x) for x in legs)
    if 0 in counts:
        raise InvalidArgError("label 0 is not allowed")
    bad = sorted(x for x, c in counts.items() if x > 0 and c != 2)
    if bad:
        raise InvalidArgError(f"contracted labels {bad} must occur exactly twice")
    open_ = sorted((x for x in counts if x < 0), reverse=True)
    if open_ != list(range(-1, -len(open_) - 1, -1)) or any(counts[x] != 1 for x in open_):
        raise InvalidArgError(f"open labels must be -1..-{len(open_)}, each once; got {open_}")
    return sorted(x for x in counts if x > 0)


def _trace(t: SymTensor, i: int, j: int, cache: GammaCache | None) -> NetworkResult:
    # contract both legs with the identity on their space
    out_leg, in_leg = (i, j) if not t.directions[i].incoming else (j, i)
    eye = identity(t.spaces[out_leg])
    pairs = [(out_leg, 1), (in_leg, 0)]
    if t.rank == 2:
        return contract_scalar(t, eye, pairs, cache)
    return contract(t, eye, pairs, cache)


def contract_network(
    tensors: Sequence[SymTensor],
    labels: Sequence[Sequence[int]],
    order: Sequence[int] | None = None,
    cache: GammaCache | None = None,
) -> NetworkResult:
    """Contract a network of invariant tensors.

    Each tensor gets one label per leg. Positive labels appear twice and are
    summed over; negative labels stay open and the result's legs are ordered
    ``-1, -2, ...``. Positive labels are eliminated in ``order`` (ascending by
    default); all labels shared by the pair of tensors being joined go in one
    contraction. Disconnected pieces are joined by outer products at the end.

    Returns:
        A :class:`SymTensor`, or a scalar when no label stays open.
    """
    todo = check_labels(tensors, labels)
    if order is not None:
        if sorted(order) != todo:
            raise InvalidArgError(f"order {list(order)} does not list the contracted labels {todo}")
        todo = list(order)
    live: list[NetworkResult] = list(tensors)
    legs: list[list[int]] = [[int(x) for x in ls] for ls in labels]
    factor: Any = 1.0
    done: set[int] = set()
    for label in todo:
        if label in done:
            continue
        holders = [n for n, ls in enumerate(legs) if label in ls]
        if len(holders) == 1:
            n = holders[0]
            ls = legs[n]
            i, j = (p for p, x in enumerate(ls) if x == label)
            live[n] = _trace(live[n], i, j, cache)
            legs[n] = [x for x in ls if x != label]
            done.add(label)
            continue
        a, b = holders
        shared = [x for x in legs[a] if x in legs[b] and x > 0]
        pairs = [(legs[a].index(x), legs[b].index(x)) for x in shared]
        logger.debug("network: joining tensors %d and %d over labels %s", a, b, shared)
        rest_a = [x for x in legs[a] if x not in shared]
        rest_b = [x for x in legs[b] if x not in shared]
        if not rest_a and not rest_b:
            factor = factor * contract_scalar(live[a], live[b], pairs, cache)
            merged: NetworkResult | None = None
        else:
            merged = contract(live[a], live[b], pairs, cache)
        done.update(shared)
        keep = [n for n in range(len(live)) if n not in (a, b)]
        new_live = [live[n] for n in keep]
        new_legs = [legs[n] for n in keep]
        if merged is not None:
            new_live.append(merged)
            new_legs.append(rest_a + rest_b)
        live, legs = new_live, new_legs

    # scalars left behind by full traces
    tensors_left = []
    for item, ls in zip(live, legs):
        if isinstance(item, SymTensor):
            tensors_left.append((item, ls))
        else:
            factor = factor * item
    if not tensors_left:
        return factor
    result, result_legs = tensors_left[0]
    for t, ls in tensors_left[1:]:
        result = contract(result, t, [], cache)
        result_legs = result_legs + ls
    perm = [result_legs.index(-(n + 1)) for n in range(len(result_legs))]
    result = permute(result, perm, cache=cache)
    return result if factor == 1.0 else scale(result, factor)
