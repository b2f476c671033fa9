"""Shared type aliases for symtensor."""

from __future__ import annotations

import enum
from typing import Any

__all__ = ["Charge", "TwiceJ", "Direction", "OUT", "IN", "IN_R"]

Charge = int
"""A charge label of some :class:`~symtensor.charge_systems.ChargeSystem`.

SU(2) charges are spins stored as twice-j (``1`` is spin one half), U(1)
charges are plain integers and fermion parity uses ``0``/``1``.
"""

TwiceJ = int
"""Twice a spin or spin projection, so half-integers stay exact."""


class Direction(enum.Enum):
    """Leg direction of a tensor index.

    ``IN`` legs are bent with the transposed cup, ``IN_R`` legs with the cup
    itself; the two differ by ``(-1)**(2j)`` per leaf.
    """

    OUT = "out"
    IN = "in"
    IN_R = "in_r"

    @property
    def incoming(self) -> bool:
        return self is not Direction.OUT

    def flipped(self) -> Direction:
        """Direction seen from the other end of a contracted leg."""
        return Direction.IN if self is Direction.OUT else Direction.OUT


OUT = Direction.OUT
IN = Direction.IN
IN_R = Direction.IN_R


_UNSET: Any = object()
"""Sentinel for unset optional parameters."""
