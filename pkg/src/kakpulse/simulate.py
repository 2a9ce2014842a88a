"""Dense reference simulators and fidelity reporting.

These are deliberately simple (full 2^n x 2^n products) so that they can
serve as an independent check of the compiler's output; nothing here
shares code with the factorization routines beyond the gate dataclasses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .gates import CouplingEvolution, Gate, GlobalPhase, LocalRotation, \
    gate_list_spin_bound
from .linalg import check_square, spin_count
from .pulses import Delay, HardPulse, PulseProgram

_SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def local_rotation_matrix(n: int, qubit: int, axis: str, angle: float) -> np.ndarray:
    """Dense ``exp(-1j*angle*sigma_axis/2)`` embedded on spin ``qubit``."""
    if not 1 <= qubit <= n:
        raise DimensionError(f"spin {qubit} outside 1..{n}")
    half = angle / 2
    rot = math.cos(half) * np.eye(2) - 1j * math.sin(half) * _SIGMA[axis]
    return np.kron(np.kron(np.eye(2 ** (qubit - 1)), rot),
                   np.eye(2 ** (n - qubit)))


def _z_signs(n: int, qubit: int) -> np.ndarray:
    """Diagonal of sigma_z on ``qubit`` (1-based, MSB first)."""
    idx = np.arange(2 ** n)
    bit = (idx >> (n - qubit)) & 1
    return 1.0 - 2.0 * bit


def coupling_diagonal(n: int, left: int, angle: float) -> np.ndarray:
    """Diagonal of ``exp(-1j*angle*IzIz)`` on pair ``(left, left+1)``."""
    if not 1 <= left <= n - 1:
        raise DimensionError(f"pair ({left},{left + 1}) outside chain of {n}")
    zz = _z_signs(n, left) * _z_signs(n, left + 1) / 4.0
    return np.exp(-1j * angle * zz)


def gate_list_unitary(gates: list[Gate], n: int) -> np.ndarray:
    """Matrix of a time-ordered gate list on ``n`` spins."""
    if n < 1:
        raise ValidationError(f"need at least one spin, got {n}")
    need = gate_list_spin_bound(gates)
    if need > n:
        raise DimensionError(f"gate list touches spin {need} but n={n}")
    dim = 2 ** n
    out = np.eye(dim, dtype=complex)
    for g in gates:  # time order: later gates multiply from the left
        if isinstance(g, LocalRotation):
            out = local_rotation_matrix(n, g.qubit, g.axis, g.angle) @ out
        elif isinstance(g, CouplingEvolution):
            out = coupling_diagonal(n, g.left, g.angle)[:, None] * out
        elif isinstance(g, GlobalPhase):
            out = np.exp(1j * g.phi) * out
        else:
            raise ValidationError(f"unknown gate object {g!r}")
    return out


def drift_diagonal(program_chain) -> np.ndarray:
    """Diagonal of the always-on coupling Hamiltonian, in rad/s."""
    n = program_chain.n
    h = np.zeros(2 ** n)
    for left in range(1, n):
        h += 2 * math.pi * program_chain.coupling(left) * \
            _z_signs(n, left) * _z_signs(n, left + 1) / 4.0
    return h


def pulse_program_unitary(program: PulseProgram) -> np.ndarray:
    """Matrix of a pulse program: hard pulses interleaved with drift."""
    n = program.chain.n
    drift = drift_diagonal(program.chain)
    out = np.eye(2 ** n, dtype=complex)
    for e in program.events:
        if isinstance(e, HardPulse):
            out = local_rotation_matrix(n, e.qubit, e.axis, e.angle) @ out
        elif isinstance(e, Delay):
            out = np.exp(-1j * e.duration * drift)[:, None] * out
        else:
            raise ValidationError(f"unknown event object {e!r}")
    return np.exp(1j * program.phase) * out


@dataclass(frozen=True)
class FidelityReport:
    """Phase-insensitive closeness of two unitaries."""

    frobenius: float
    fidelity: float
    dim: int

    def __str__(self) -> str:
        return (f"fidelity {self.fidelity:.12f}, "
                f"phase-free Frobenius distance {self.frobenius:.3e}")

    def to_json_dict(self) -> dict:
        return {"dfro": self.frobenius, "fid": self.fidelity, "dim": self.dim}


def distance(u: np.ndarray, v: np.ndarray) -> FidelityReport:
    """Compare two same-dimension operators up to global phase.

    ``fidelity = |tr(u^dag v)| / dim``.  The Frobenius distance is
    minimized over a global phase; it equals
    ``sqrt(2*dim - 2*|tr(u^dag v)|)`` for unitary inputs but is computed
    from the explicitly phase-aligned difference, which stays accurate
    down to machine precision where the trace formula would cancel.
    """
    u = check_square(u, "first operator")
    v = check_square(v, "second operator")
    if u.shape != v.shape:
        raise DimensionError(f"shape mismatch {u.shape} vs {v.shape}")
    dim = u.shape[0]
    spin_count(dim)
    t = complex(np.trace(v.conj().T @ u))
    phase = np.exp(-1j * np.angle(t)) if t else 1.0
    return FidelityReport(
        frobenius=float(np.linalg.norm(u * phase - v)),
        fidelity=min(abs(t) / dim, 1.0),  # rounding can nudge |tr| past dim
        dim=dim)
