"""Scalar kernels of SU(2) representation theory.

Every spin argument is passed as twice its value (``1`` is spin one half),
and every projection likewise as twice ``m``. Clebsch-Gordan and 6-j values
are evaluated by Racah sums over exact rationals, then rounded once.

Basis order inside an irrep is ascending in ``m``: row ``i`` of any matrix
returned here corresponds to ``twice_m = 2*i - twice_j``.

Example:
    ```python
    from symtensor import su2_kernels as k

    k.cg_coefficient(1, 1, 1, -1, 0, 0)  # 1/sqrt(2)
    k.recoupling_f(1, 1, 1, 1, 0, 0)     # -1/2
    ```
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from symtensor._cache import Memo
from symtensor._observability import bump

__all__ = [
    "Spin",
    "SpinProjection",
    "triangle",
    "cg_coefficient",
    "cg_block",
    "wigner_3j",
    "wigner_6j",
    "recoupling_f",
    "swap_r",
    "omega",
    "cup",
    "cap",
    "cup_transpose_phase",
    "generators",
    "kernel_cache_info",
    "clear_kernel_caches",
]


class Spin(NamedTuple):
    """An SU(2) irrep label."""

    twice_j: int

    @property
    def dim(self) -> int:
        return self.twice_j + 1

    @property
    def value(self) -> float:
        return self.twice_j / 2

    def projections(self) -> list[SpinProjection]:
        return [SpinProjection(2 * i - self.twice_j) for i in range(self.dim)]


class SpinProjection(NamedTuple):
    """A spin projection ``m`` stored as ``twice_m``."""

    twice_m: int

    def valid_for(self, spin: Spin) -> bool:
        return abs(self.twice_m) <= spin.twice_j and (self.twice_m - spin.twice_j) % 2 == 0


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def triangle(ta: int, tb: int, tc: int) -> bool:
    """Check ``|a-b| <= c <= a+b`` with ``a+b+c`` integer, all in twice units."""
    return ta >= 0 and tb >= 0 and tc >= 0 and abs(ta - tb) <= tc <= ta + tb and (ta + tb + tc) % 2 == 0


def _delta_sq(ta: int, tb: int, tc: int) -> Fraction:
    return Fraction(
        _fact((ta + tb - tc) // 2) * _fact((ta - tb + tc) // 2) * _fact((-ta + tb + tc) // 2),
        _fact((ta + tb + tc) // 2 + 1),
    )


def _signed_sqrt(square: Fraction, sign_source: Fraction) -> float:
    if sign_source == 0:
        return 0.0
    value = math.sqrt(square * sign_source * sign_source)
    return value if sign_source > 0 else -value


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients
# ---------------------------------------------------------------------------


def cg_coefficient(ta: int, tma: int, tb: int, tmb: int, tc: int, tmc: int) -> float:
    """Return ``<j_a m_a; j_b m_b | j_c m_c>`` in the Condon-Shortley convention.

    Zero when the triangle rule or ``m_c = m_a + m_b`` fails.
    """
    if tmc != tma + tmb or not triangle(ta, tb, tc):
        return 0.0
    if abs(tma) > ta or abs(tmb) > tb or abs(tmc) > tc:
        return 0.0
    bump("kernel_evaluations")
    pref = Fraction(tc + 1) * _delta_sq(ta, tb, tc) * (
        _fact((tc + tmc) // 2)
        * _fact((tc - tmc) // 2)
        * _fact((ta - tma) // 2)
        * _fact((ta + tma) // 2)
        * _fact((tb - tmb) // 2)
        * _fact((tb + tmb) // 2)
    )
    # summation bounds keep every factorial argument non-negative
    k_min = max(0, (tb - tc - tma) // 2, (ta - tc + tmb) // 2)
    k_max = min((ta + tb - tc) // 2, (ta - tma) // 2, (tb + tmb) // 2)
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denom = (
            _fact(k)
            * _fact((ta + tb - tc) // 2 - k)
            * _fact((ta - tma) // 2 - k)
            * _fact((tb + tmb) // 2 - k)
            * _fact((tc - tb + tma) // 2 + k)
            * _fact((tc - ta - tmb) // 2 + k)
        )
        total += Fraction((-1) ** k, denom)
    return _signed_sqrt(pref, total)


_cg_blocks: Memo[np.ndarray] = Memo("cg_block")


def cg_block(ta: int, tb: int, tc: int) -> np.ndarray:
    """Dense ``(2j_a+1, 2j_b+1, 2j_c+1)`` array of Clebsch-Gordan coefficients.

    Incompatible triples give an all-zero block. The array is read-only and
    shared between callers.
    """

    def build() -> np.ndarray:
        block = np.zeros((ta + 1, tb + 1, tc + 1))
        if triangle(ta, tb, tc):
            for i in range(ta + 1):
                tma = 2 * i - ta
                for j in range(tb + 1):
                    tmb = 2 * j - tb
                    tmc = tma + tmb
                    if abs(tmc) <= tc:
                        block[i, j, (tmc + tc) // 2] = cg_coefficient(ta, tma, tb, tmb, tc, tmc)
        block.setflags(write=False)
        return block

    return _cg_blocks.get((ta, tb, tc), build)


def wigner_3j(ta: int, tma: int, tb: int, tmb: int, tc: int, tmc: int) -> float:
    """The Wigner 3-j symbol, derived from :func:`cg_coefficient`."""
    if tma + tmb + tmc != 0:
        return 0.0
    phase = -1 if ((ta - tb - tmc) // 2) % 2 else 1
    return phase * cg_coefficient(ta, tma, tb, tmb, tc, -tmc) / math.sqrt(tc + 1)


# ---------------------------------------------------------------------------
# Recoupling
# ---------------------------------------------------------------------------

_six_j: Memo[float] = Memo("wigner_6j")


def wigner_6j(ta: int, tb: int, tc: int, td: int, te: int, tf: int) -> float:
    """The 6-j symbol ``{a b c; d e f}`` by the Racah sum."""
    triads = ((ta, tb, tc), (ta, te, tf), (td, tb, tf), (td, te, tc))
    if not all(triangle(*t) for t in triads):
        return 0.0

    def build() -> float:
        bump("kernel_evaluations")
        deltas = Fraction(1)
        for t in triads:
            deltas *= _delta_sq(*t)
        sums = [sum(t) // 2 for t in triads]
        pairs = [(ta + tb + td + te) // 2, (tb + tc + te + tf) // 2, (tc + ta + tf + td) // 2]
        total = Fraction(0)
        for z in range(max(sums), min(pairs) + 1):
            denom = 1
            for s in sums:
                denom *= _fact(z - s)
            for p in pairs:
                denom *= _fact(p - z)
            total += Fraction((-1) ** z * _fact(z + 1), denom)
        return _signed_sqrt(deltas, total)

    return _six_j.get((ta, tb, tc, td, te, tf), build)


def recoupling_f(ta: int, tb: int, tc: int, td: int, te: int, tf: int) -> float:
    """Recoupling coefficient ``F^{ef}_{abcd} = <(a(bc)f)d | ((ab)e c)d>``.

    Equal to ``(-1)**(a+b+c+d) * sqrt((2e+1)(2f+1)) * {a b e; c d f}``.
    """
    six = wigner_6j(ta, tb, te, tc, td, tf)
    if six == 0.0:
        return 0.0
    phase = -1 if ((ta + tb + tc + td) // 2) % 2 else 1
    return phase * math.sqrt((te + 1) * (tf + 1)) * six


def swap_r(ta: int, tb: int, tc: int) -> float:
    """Swap factor ``(-1)**(a+b-c)`` picked up when two fused legs exchange."""
    return -1.0 if ((ta + tb - tc) // 2) % 2 else 1.0


# ---------------------------------------------------------------------------
# Bending tensors and generators
# ---------------------------------------------------------------------------


def omega(tj: int) -> np.ndarray:
    """Reverse-diagonal ``omega_j`` with ``(omega)_{m,-m} = (-1)**(j-m)/sqrt(2j+1)``."""
    dim = tj + 1
    out = np.zeros((dim, dim))
    for i in range(dim):
        tm = 2 * i - tj
        out[i, dim - 1 - i] = (-1) ** ((tj - tm) // 2) / math.sqrt(dim)
    return out


def cup(tj: int) -> np.ndarray:
    return math.sqrt(tj + 1) * omega(tj)


def cap(tj: int) -> np.ndarray:
    return cup_transpose_phase(tj) * cup(tj)


def cup_transpose_phase(tj: int) -> float:
    """``(-1)**(2j)``: the sign relating ``cup.T`` (and ``cap``) to ``cup``."""
    return -1.0 if tj % 2 else 1.0


def generators(tj: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin matrices ``(Jx, Jy, Jz)`` of irrep ``j``; ``Jy`` is complex."""
    dim = tj + 1
    ms = np.array([(2 * i - tj) / 2 for i in range(dim)])
    j = tj / 2
    raising = np.zeros((dim, dim))
    for i in range(dim - 1):
        raising[i + 1, i] = math.sqrt(j * (j + 1) - ms[i] * (ms[i] + 1))
    lowering = raising.T
    jx = (raising + lowering) / 2
    jy = (raising - lowering) / 2j
    jz = np.diag(ms)
    return jx, jy, jz


def kernel_cache_info() -> dict[str, int]:
    """Number of memoized entries per kernel table."""
    return {
        "cg_block": len(_cg_blocks),
        "wigner_6j": len(_six_j),
        "cg_coefficient_factorials": _fact.cache_info().currsize,
    }


def clear_kernel_caches() -> None:
    _cg_blocks.clear()
    _six_j.clear()
