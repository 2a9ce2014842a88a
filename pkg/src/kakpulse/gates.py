"""Primitive gate vocabulary for a linear chain.

Only three gate kinds exist: single-spin rotations, nearest-neighbour
ZZ coupling evolutions, and global phases.  Gate *lists* are always in
time order (first element acts first); the matrix of a list is the
reversed product.

Conventions
-----------
* ``LocalRotation(q, axis, angle)`` realizes ``exp(-1j * angle * I_axis)``
  on spin ``q`` with ``I_axis = sigma_axis / 2``; angles are radians and
  a ``2*pi`` rotation equals ``-1``.
* ``CouplingEvolution(left, angle)`` realizes
  ``exp(-1j * angle * I_z I_z)`` on the pair ``(left, left + 1)``.  Note
  the period in ``angle`` is ``8*pi`` and the value at ``4*pi`` is
  ``-identity``, because the generator has eigenvalues ``+-1/4``.
* ``GlobalPhase(phi)`` multiplies by ``exp(1j * phi)``.

Spins are 1-based; spin 1 is the leftmost Kronecker factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import ValidationError

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class LocalRotation:
    """``exp(-1j * angle * sigma_axis / 2)`` on one spin."""

    qubit: int
    axis: str
    angle: float

    def __post_init__(self):
        if self.qubit < 1:
            raise ValidationError(f"spin index must be >= 1, got {self.qubit}")
        if self.axis not in AXES:
            raise ValidationError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not math.isfinite(self.angle):
            raise ValidationError("rotation angle must be finite")

    def inverse(self) -> "LocalRotation":
        return LocalRotation(self.qubit, self.axis, -self.angle)


@dataclass(frozen=True)
class CouplingEvolution:
    """``exp(-1j * angle * I_z I_z)`` on the pair ``(left, left + 1)``."""

    left: int
    angle: float

    def __post_init__(self):
        if self.left < 1:
            raise ValidationError(f"pair index must be >= 1, got {self.left}")
        if not math.isfinite(self.angle):
            raise ValidationError("coupling angle must be finite")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.left, self.left + 1)

    def inverse(self) -> "CouplingEvolution":
        return CouplingEvolution(self.left, -self.angle)


@dataclass(frozen=True)
class GlobalPhase:
    """Multiply the circuit by ``exp(1j * phi)``."""

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValidationError("phase must be finite")

    def inverse(self) -> "GlobalPhase":
        return GlobalPhase(-self.phi)


Gate = Union[LocalRotation, CouplingEvolution, GlobalPhase]


def inverse_gate_list(gates: list[Gate]) -> list[Gate]:
    """Time-ordered inverse of a time-ordered gate list."""
    return [g.inverse() for g in reversed(gates)]


def gate_list_spin_bound(gates: list[Gate]) -> int:
    """Largest spin index touched (0 for a purely global list)."""
    top = 0
    for g in gates:
        if isinstance(g, LocalRotation):
            top = max(top, g.qubit)
        elif isinstance(g, CouplingEvolution):
            top = max(top, g.left + 1)
    return top


def gate_list_to_json(gates: list[Gate]) -> list[dict]:
    """Serialize a time-ordered gate list."""
    out = []
    for g in gates:
        if isinstance(g, LocalRotation):
            out.append({"kind": "local", "q": g.qubit, "axis": g.axis,
                        "angle": g.angle})
        elif isinstance(g, CouplingEvolution):
            out.append({"kind": "zz", "pair": [g.left, g.left + 1],
                        "angle": g.angle})
        elif isinstance(g, GlobalPhase):
            out.append({"kind": "phase", "phi": g.phi})
        else:
            raise ValidationError(f"unknown gate object {g!r}")
    return out


def gate_list_from_json(data: list[dict]) -> list[Gate]:
    if not isinstance(data, list):
        raise ValidationError("gate list must be a JSON array")
    out: list[Gate] = []
    for k, item in enumerate(data):
        try:
            kind = item["kind"]
            if kind == "local":
                out.append(LocalRotation(int(item["q"]), str(item["axis"]),
                                         float(item["angle"])))
            elif kind == "zz":
                left, right = (int(v) for v in item["pair"])
                if right != left + 1:
                    raise ValidationError(
                        f"coupling pair must be adjacent, got [{left}, {right}]")
                out.append(CouplingEvolution(left, float(item["angle"])))
            elif kind == "phase":
                out.append(GlobalPhase(float(item["phi"])))
            else:
                raise ValidationError(f"unknown gate kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed gate at index {k}: {exc}") from exc
    return out
