"""Charge systems: fusion rules, recoupling and swap data per symmetry.

A :class:`ChargeSystem` is what every higher layer talks to, so tensors,
trees and recoupling maps are written once for SU(2), U(1) and fermion
parity alike. Instances are immutable singletons compared by name.
"""

from __future__ import annotations

import abc
from typing import ClassVar

import numpy as np

from symtensor import su2_kernels
from symtensor.exception import InvalidArgError

__all__ = [
    "ChargeSystem",
    "SU2System",
    "U1System",
    "Z2FermionSystem",
    "su2_system",
    "u1_system",
    "z2_fermion_system",
    "system_by_name",
    "SYSTEM_NAMES",
]

_ONE = np.ones((1, 1, 1))
_ONE.setflags(write=False)
_EYE1 = np.ones((1, 1))
_EYE1.setflags(write=False)


class ChargeSystem(abc.ABC):
    """Multiplicity-free fusion data for one symmetry.

    Charges are ints, totally ordered by their integer value; the trivial
    charge is always ``0``.
    """

    name: ClassVar[str]
    abelian: ClassVar[bool]
    graded: ClassVar[bool] = False
    trivial: ClassVar[int] = 0

    @abc.abstractmethod
    def valid(self, c: int) -> bool: ...

    @abc.abstractmethod
    def fuse(self, a: int, b: int) -> tuple[int, ...]:
        """Charges in ``a ⊗ b``, ascending, each at most once."""

    @abc.abstractmethod
    def dim(self, c: int) -> int: ...

    @abc.abstractmethod
    def dual(self, c: int) -> int: ...

    @abc.abstractmethod
    def f_coeff(self, a: int, b: int, c: int, d: int, e: int, f: int) -> float:
        """Recoupling ``F^{ef}_{abcd}`` between ``((ab)e c)d`` and ``(a(bc)f)d``."""

    @abc.abstractmethod
    def r_coeff(self, a: int, b: int, c: int) -> float:
        """Swap factor for exchanging the two inputs of ``a ⊗ b -> c``."""

    def fusion_tensor(self, a: int, b: int, c: int) -> np.ndarray:
        """Structural node ``(dim a, dim b, dim c)`` of the fusion ``a ⊗ b -> c``."""
        return _ONE if c in self.fuse(a, b) else np.zeros((1, 1, 1))

    def cup(self, c: int) -> np.ndarray:
        """Bending matrix turning an outgoing leg of charge ``c`` into an incoming one."""
        return _EYE1

    def cup_transpose_phase(self, c: int) -> float:
        return 1.0

    def allowed(self, a: int, b: int, c: int) -> bool:
        return c in self.fuse(a, b)

    def combine(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorized fusion of Abelian charge arrays."""
        raise InvalidArgError(f"{self.name} is not Abelian")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ChargeSystem) and other.name == self.name

    def __hash__(self) -> int:
        return hash(self.name)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"

    def __reduce__(self) -> tuple[object, tuple[str]]:
        return system_by_name, (self.name,)


class SU2System(ChargeSystem):
    """SU(2) with charges stored as twice-j."""

    name = "su2"
    abelian = False

    def valid(self, c: int) -> bool:
        return isinstance(c, int) and c >= 0

    def fuse(self, a: int, b: int) -> tuple[int, ...]:
        return tuple(range(abs(a - b), a + b + 1, 2))

    def dim(self, c: int) -> int:
        return c + 1

    def dual(self, c: int) -> int:
        return c

    def f_coeff(self, a: int, b: int, c: int, d: int, e: int, f: int) -> float:
        return su2_kernels.recoupling_f(a, b, c, d, e, f)

    def r_coeff(self, a: int, b: int, c: int) -> float:
        return su2_kernels.swap_r(a, b, c)

    def fusion_tensor(self, a: int, b: int, c: int) -> np.ndarray:
        return su2_kernels.cg_block(a, b, c)

    def cup(self, c: int) -> np.ndarray:
        return su2_kernels.cup(c)

    def cup_transpose_phase(self, c: int) -> float:
        return su2_kernels.cup_transpose_phase(c)

    def allowed(self, a: int, b: int, c: int) -> bool:
        return su2_kernels.triangle(a, b, c)


class _AbelianSystem(ChargeSystem):
    abelian = True

    def dim(self, c: int) -> int:
        return 1

    def f_coeff(self, a: int, b: int, c: int, d: int, e: int, f: int) -> float:
        ok = self.allowed(a, b, e) and self.allowed(e, c, d) and self.allowed(b, c, f) and self.allowed(a, f, d)
        return 1.0 if ok else 0.0


class U1System(_AbelianSystem):
    """U(1) with integer charges fusing by addition."""

    name = "u1"

    def valid(self, c: int) -> bool:
        return isinstance(c, int)

    def fuse(self, a: int, b: int) -> tuple[int, ...]:
        return (a + b,)

    def dual(self, c: int) -> int:
        return -c

    def r_coeff(self, a: int, b: int, c: int) -> float:
        return 1.0

    def combine(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.add.outer(x, y)


class Z2FermionSystem(_AbelianSystem):
    """Fermion parity: charges ``0``/``1``, odd-odd swaps carry ``-1``."""

    name = "z2f"
    graded = True

    def valid(self, c: int) -> bool:
        return c in (0, 1)

    def fuse(self, a: int, b: int) -> tuple[int, ...]:
        return ((a + b) % 2,)

    def dual(self, c: int) -> int:
        return c

    def r_coeff(self, a: int, b: int, c: int) -> float:
        return -1.0 if a == 1 and b == 1 else 1.0

    def combine(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.add.outer(x, y) % 2


_SU2 = SU2System()
_U1 = U1System()
_Z2F = Z2FermionSystem()

SYSTEM_NAMES = ("su2", "u1", "z2f")


def su2_system() -> ChargeSystem:
    return _SU2


def u1_system() -> ChargeSystem:
    return _U1


def z2_fermion_system() -> ChargeSystem:
    return _Z2F


def system_by_name(name: str) -> ChargeSystem:
    """Look up a charge system by its config name (``"su2"``, ``"u1"``, ``"z2f"``)."""
    try:
        return {"su2": _SU2, "u1": _U1, "z2f": _Z2F}[name]
    except KeyError:
        raise InvalidArgError(f"unknown charge system {name!r}; expected one of {', '.join(SYSTEM_NAMES)}") from None
