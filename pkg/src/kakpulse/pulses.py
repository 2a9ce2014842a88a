"""Rewrite product-operator exponentials into chain-native gates and pulses.

Two layers live here:

* A symbolic rewrite engine that turns ``exp(-1j * theta * B_P)`` for an
  arbitrary string ``P`` into single-spin rotations plus
  nearest-neighbour ZZ coupling evolutions.  The engine conjugates the
  target string down to a single adjacent ZZ pair using two kinds of
  exactly-tracked moves: local frame rotations (to turn letters into Z)
  and ``pi`` two-spin evolutions (to shorten the support or walk it
  across gaps).  All bookkeeping is done on letters and signs, never
  numerically, so the output is exact up to floating-point rotation
  angles.
* A scheduler that lowers a time-ordered gate list onto a concrete
  chain with always-on couplings, inserting spin-echo refocusing pulses
  so that exactly one coupling is active during each delay.

The scheduler's refocusing rule: while pair ``(k, k+1)`` evolves, every
spin at odd distance from the pair is flipped with a ``pi`` x-pulse at
the half-time and flipped back at the end.  A coupling ``(j, j+1)`` then
sees exactly one flipped endpoint whenever ``j != k``, so it cancels,
while the target pair sees none.  Each flipped spin contributes
``(-1)`` (two ``-i sigma_x`` factors), which is tracked in the program's
global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DimensionError, RangeError, ValidationError
from .gates import AXES, CouplingEvolution, Gate, GlobalPhase, LocalRotation
from .paulis import CartanElement, PauliString, _letter_product

_PI = math.pi
_HALF_PI = math.pi / 2

# Right-handed cross products among lowercase axis letters.
_CROSS = {
    ("x", "y"): ("z", 1), ("y", "z"): ("x", 1), ("z", "x"): ("y", 1),
    ("y", "x"): ("z", -1), ("z", "y"): ("x", -1), ("x", "z"): ("y", -1),
}

# Frame rotation R with Ad_R(sigma_z) = sigma_letter.
_FRAME_FOR_LETTER = {
    "X": ("y", _HALF_PI),
    "Y": ("x", -_HALF_PI),
}


def _ad_local(axis: str, angle: float, letter: str) -> tuple[int, str]:
    """Adjoint action of ``exp(-1j*angle*sigma_axis/2)`` on ``sigma_letter``.

    Only quarter and half turns occur in the rewrite, so the result is
    always another signed letter.
    """
    b = letter.lower()
    if b == axis:
        return 1, letter
    c, eps = _CROSS[(axis, b)]
    if math.isclose(angle, _HALF_PI):
        return eps, c.upper()
    if math.isclose(angle, -_HALF_PI):
        return -eps, c.upper()
    if math.isclose(abs(angle), _PI):
        return -1, letter
    raise ValidationError(f"unsupported symbolic rotation angle {angle}")


@dataclass
class _PairOp:
    """Conjugator ``exp(-1j * sign * pi * I_(a,la) I_(b,lb))``."""

    a: int
    la: str
    b: int
    lb: str
    sign: int

    def dagger(self) -> "_PairOp":
        return _PairOp(self.a, self.la, self.b, self.lb, -self.sign)


@dataclass
class _LocalOp:
    """Conjugator ``exp(-1j * angle * sigma_axis / 2)`` on spin ``q``."""

    q: int
    axis: str
    angle: float

    def dagger(self) -> "_LocalOp":
        return _LocalOp(self.q, self.axis, -self.angle)


def _ad_pair(op: _PairOp, term: dict[int, str]) -> tuple[int, dict[int, str]]:
    """Adjoint of a ``pi`` pair conjugator on a signed string.

    For an anticommuting pair the half turn maps the term to
    ``-1j * sign * A @ T``, which is again a single signed string.
    """
    ta, tb = term.get(op.a, "1"), term.get(op.b, "1")
    clashes = sum(1 for x, y in ((op.la, ta), (op.lb, tb))
                  if y != "1" and x != y)
    if clashes % 2 == 0:
        return 1, dict(term)
    phase = 1 + 0j
    out = []
    for x, y in ((op.la, ta), (op.lb, tb)):
        p, c = _letter_product(x, y)
        phase *= p
        out.append(c)
    factor = -1j * op.sign * phase
    sign = int(round(factor.real))
    if abs(factor - sign) > 1e-12 or sign not in (-1, 1):
        raise ValidationError("pair conjugation produced a non-real sign")
    new = dict(term)
    for site, letter in ((op.a, out[0]), (op.b, out[1])):
        if letter == "1":
            new.pop(site, None)
        else:
            new[site] = letter
    return sign, new


def _frame_gates(op: _PairOp) -> tuple[list[LocalRotation], list[LocalRotation]]:
    """Local rotations V with exp(op) = V @ exp(over ZZ) @ V^dag.

    Returns (V, V^dag) as matrix-ordered gate lists.
    """
    fwd: list[LocalRotation] = []
    for site, letter in ((op.a, op.la), (op.b, op.lb)):
        if letter == "Z":
            continue
        axis, angle = _FRAME_FOR_LETTER[letter]
        fwd.append(LocalRotation(site, axis, angle))
    bwd = [g.inverse() for g in reversed(fwd)]
    return fwd, bwd


def _coupling_gates(left: int, angle: float) -> list[Gate]:
    """Matrix-ordered gates for ``exp(-1j*angle*IzIz)`` with the coupling
    angle kept non-negative (negative exponents are wrapped in a spin
    flip, which negates the generator)."""
    if abs(angle) < 1e-15:
        return []
    if angle > 0:
        return [CouplingEvolution(left, angle)]
    return [LocalRotation(left, "x", _PI),
            CouplingEvolution(left, -angle),
            LocalRotation(left, "x", -_PI)]


def _pair_op_gates(op: _PairOp) -> list[Gate]:
    """Matrix-ordered gates realizing exp(-1j*sign*pi*I_(a,la)I_(b,lb))."""
    if op.b != op.a + 1:
        raise ValidationError("pair conjugators must act on adjacent spins")
    fwd, bwd = _frame_gates(op)
    return fwd + _coupling_gates(op.a, op.sign * _PI) + bwd


def _op_gates(op) -> list[Gate]:
    if isinstance(op, _LocalOp):
        return [LocalRotation(op.q, op.axis, op.angle)]
    return _pair_op_gates(op)


def _reduce_to_adjacent_zz(string: PauliString) -> tuple[list, int, int]:
    """Conjugate a weight >= 2 string down to an adjacent ZZ pair.

    Returns ``(ops, left, sign)`` where applying the adjoints of ``ops``
    in order maps ``sigma_string`` to ``sign * sigma_(Z@left, Z@left+1)``.
    """
    ops: list = []
    term = {k: string.letter(k) for k in string.support}
    sign = 1

    def push_local(q: int, axis: str, angle: float):
        nonlocal sign
        op = _LocalOp(q, axis, angle)
        s, new = _ad_local(axis, angle, term[q])
        sign *= s
        term[q] = new
        ops.append(op)

    def push_pair(a: int, la: str, b: int, lb: str, pair_sign: int):
        nonlocal sign, term
        op = _PairOp(a, la, b, lb, pair_sign)
        s, term = _ad_pair(op, term)
        sign *= s
        ops.append(op)

    for site in sorted(term):
        letter = term[site]
        if letter == "X":
            push_local(site, "y", -_HALF_PI)
        elif letter == "Y":
            push_local(site, "x", _HALF_PI)
        if term[site] != "Z":
            raise ValidationError("letter normalization failed")

    while True:
        sites = sorted(term)
        if len(sites) == 2 and sites[1] == sites[0] + 1:
            break
        s1, s2 = sites[0], sites[1]
        if s2 == s1 + 1:
            # Shorten: rotate the right partner to X, then a ZY half turn
            # absorbs the left Z into it.
            push_local(s2, "y", _HALF_PI)
            push_pair(s1, "Z", s2, "Y", -1)
            if sorted(term)[0] != s2:
                raise ValidationError("support shortening failed")
        else:
            # Walk the leftmost Z one site to the right across a gap.
            push_pair(s1, "Y", s1 + 1, "Z", 1)
            push_pair(s1, "X", s1 + 1, "Y", 1)
            push_local(s1 + 1, "y", -_HALF_PI)
    left = sorted(term)[0]
    if term != {left: "Z", left + 1: "Z"}:
        raise ValidationError("reduction did not reach an adjacent ZZ pair")
    return ops, left, sign


def pauli_evolution_gates(string: PauliString | str, angle: float,
                          chain: "ChainSpec | None" = None) -> list[Gate]:
    """Time-ordered gates realizing ``exp(-1j * angle * B_string)``.

    ``B_string`` is the basis-normalized realization (``sigma/2``), so a
    single-letter string compiles to one rotation and the adjacent ZZ
    string compiles to a coupling evolution of ``2 * angle``.  When a
    ``chain`` is given, the string must fit on it.
    """
    s = string if isinstance(string, PauliString) else PauliString(string)
    if not math.isfinite(angle):
        raise ValidationError("evolution angle must be finite")
    if chain is not None and s.n != chain.n:
        raise DimensionError(
            f"string acts on {s.n} spins but the chain has {chain.n}")
    if s.weight == 0:
        raise ValidationError("cannot compile the identity string")
    if s.weight == 1:
        site = s.support[0]
        return [LocalRotation(site, s.letter(site).lower(), angle)]

    ops, left, sign = _reduce_to_adjacent_zz(s)
    # sigma_P = sign * W sigma_ZZ W^dag  with  W = op1^dag ... opm^dag,
    # hence exp(-i th B_P) = W exp(-i th sign B_ZZ) W^dag and
    # B_ZZ = 2 IzIz doubles the coupling angle.
    w: list[Gate] = []
    for op in ops:
        w.extend(_op_gates(op.dagger()))
    w_dag: list[Gate] = []
    for op in reversed(ops):
        w_dag.extend(_op_gates(op))
    matrix_order = w + _coupling_gates(left, 2 * angle * sign) + w_dag
    return list(reversed(matrix_order))


def cartan_evolution_gates(element: CartanElement,
                           chain: "ChainSpec | None" = None, *,
                           atol: float = 1e-12) -> list[Gate]:
    """Time-ordered gates for ``exp(-1j * H)`` with ``H`` a commuting-family
    element.  The family commutes, so the exponential splits into one
    string evolution per coefficient, emitted in canonical family order.
    """
    out: list[Gate] = []
    for s, c in element.items():
        if abs(c) <= atol:
            continue
        out.extend(pauli_evolution_gates(s, c, chain))
    return out


# ---------------------------------------------------------------------------
# Chains and pulse programs


@dataclass(frozen=True)
class ChainSpec:
    """A linear chain: ``n`` spins, always-on couplings ``J[k]`` in Hz for
    each adjacent pair ``(k, k+1)``."""

    n: int
    couplings: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"chain needs at least one spin, got {self.n}")
        if len(self.couplings) != self.n - 1:
            raise DimensionError(
                f"expected {self.n - 1} couplings for {self.n} spins, "
                f"got {len(self.couplings)}")
        for k, j in enumerate(self.couplings, start=1):
            if not (math.isfinite(j) and j > 0):
                raise RangeError(f"coupling J_{k} must be positive, got {j}")

    @classmethod
    def uniform(cls, n: int, j: float = 100.0) -> "ChainSpec":
        return cls(n=n, couplings=(float(j),) * (n - 1))

    def coupling(self, left: int) -> float:
        if not 1 <= left <= self.n - 1:
            raise RangeError(f"pair index {left} outside 1..{self.n - 1}")
        return self.couplings[left - 1]

    def to_json_dict(self) -> dict:
        return {"n": self.n, "J": list(self.couplings)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ChainSpec":
        try:
            return cls(n=int(data["n"]),
                       couplings=tuple(float(x) for x in data["J"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed chain object: {exc}") from exc


@dataclass(frozen=True)
class HardPulse:
    """Instantaneous rotation ``exp(-1j*angle*sigma_axis/2)`` on one spin."""

    qubit: int
    axis: str
    angle: float

    def __post_init__(self):
        if self.qubit < 1:
            raise ValidationError(f"spin index must be >= 1, got {self.qubit}")
        if self.axis not in AXES:
            raise ValidationError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not math.isfinite(self.angle):
            raise ValidationError("pulse angle must be finite")


@dataclass(frozen=True)
class Delay:
    """Free evolution under the chain couplings for ``duration`` seconds."""

    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise RangeError(f"delay must be non-negative, got {self.duration}")


PulseEvent = HardPulse | Delay


@dataclass
class PulseProgram:
    """Time-ordered pulse/delay schedule plus an accumulated global phase."""

    chain: ChainSpec
    events: list[PulseEvent] = field(default_factory=list)
    phase: float = 0.0

    def to_json_dict(self) -> dict:
        events = []
        for e in self.events:
            if isinstance(e, HardPulse):
                events.append({"kind": "pulse", "q": e.qubit, "axis": e.axis,
                               "angle": e.angle})
            else:
                events.append({"kind": "delay", "t": e.duration})
        return {"chain": self.chain.to_json_dict(), "events": events,
                "phase": self.phase}

    @classmethod
    def from_json_dict(cls, data: dict) -> "PulseProgram":
        try:
            chain = ChainSpec.from_json_dict(data["chain"])
            events: list[PulseEvent] = []
            for k, item in enumerate(data.get("events", [])):
                kind = item["kind"]
                if kind == "pulse":
                    events.append(HardPulse(int(item["q"]), str(item["axis"]),
                                            float(item["angle"])))
                elif kind == "delay":
                    events.append(Delay(float(item["t"])))
                else:
                    raise ValidationError(f"unknown event kind {kind!r} at {k}")
            return cls(chain=chain, events=events,
                       phase=float(data.get("phase", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed pulse program: {exc}") from exc


def refocusing_set(n: int, left: int) -> list[int]:
    """Spins flipped while pair ``(left, left+1)`` evolves: all spins at
    odd distance from the pair.  With this set, every other coupling has
    exactly one flipped endpoint and averages away over the two delay
    halves."""
    if not 1 <= left < n:
        raise RangeError(f"pair index {left} outside 1..{n - 1}")
    out = []
    for s in range(1, n + 1):
        if s < left and (left - s) % 2 == 1:
            out.append(s)
        elif s > left + 1 and (s - left - 1) % 2 == 1:
            out.append(s)
    return out


def synthesize_pulses(gates: list[Gate], chain: ChainSpec) -> PulseProgram:
    """Lower a time-ordered gate list onto a chain.

    Local rotations become hard pulses.  Each coupling evolution becomes
    a refocused delay block of duration ``theta / (2*pi*J_k)``; negative
    coupling angles are made positive by adding multiples of ``4*pi``,
    each of which contributes a ``-1`` tracked in the global phase (the
    ZZ evolution has period ``8*pi`` with value ``-identity`` at ``4*pi``).
    """
    program = PulseProgram(chain=chain)
    bound = chain.n
    for g in gates:
        if isinstance(g, GlobalPhase):
            program.phase += g.phi
        elif isinstance(g, LocalRotation):
            if g.qubit > bound:
                raise DimensionError(
                    f"gate on spin {g.qubit} exceeds chain size {bound}")
            program.events.append(HardPulse(g.qubit, g.axis, g.angle))
        elif isinstance(g, CouplingEvolution):
            if g.left + 1 > bound:
                raise DimensionError(
                    f"coupling on pair {g.pair} exceeds chain size {bound}")
            theta = g.angle
            wraps = 0
            while theta < 0:
                theta += 4 * _PI
                wraps += 1
            program.phase += _PI * wraps
            if theta == 0:
                continue
            t = theta / (2 * _PI * chain.coupling(g.left))
            flips = refocusing_set(bound, g.left)
            program.events.append(Delay(t / 2))
            program.events.extend(HardPulse(s, "x", _PI) for s in flips)
            program.events.append(Delay(t / 2))
            program.events.extend(HardPulse(s, "x", _PI) for s in flips)
            program.phase += _PI * len(flips)
        else:
            raise ValidationError(f"unknown gate object {g!r}")
    program.phase = math.remainder(program.phase, 2 * _PI)
    return program


def total_coupling_time(program: PulseProgram) -> float:
    """Sum of all delay durations in seconds."""
    return sum(e.duration for e in program.events if isinstance(e, Delay))


def pulse_count(program: PulseProgram) -> int:
    return sum(1 for e in program.events if isinstance(e, HardPulse))
