"""Abstract two-wire circuit IR and CNOT-count synthesis.

The mid-level representation between the Cartan decomposition and the optical
recipe: ordered single-qubit gates and CNOTs on the POL and OAM wires plus a
global phase.  ``synth_u4`` lowers any 4x4 unitary to at most three CNOTs
with single-qubit gates between them; the CNOT count per interaction follows
the four local-equivalence classes.
"""

from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonCanonicalCoords, DecompositionFailure
from .kak import (
    KakDecomposition,
    WeylCoords,
    interaction_unitary,
    is_weyl_canonical,
    kak_decompose,
)
from .matrices import (
    I2,
    format_real,
    matrix_from_json_obj,
    matrix_to_json_obj,
    normalize_phase,
    phase_distance,
    su4_normalize,
    tensor,
)


class Wire(enum.Enum):
    POL = "pol"
    OAM = "oam"


@dataclass(frozen=True)
class Local:
    wire: Wire
    u: np.ndarray  # 2x2 unitary


@dataclass(frozen=True)
class Cnot:
    control: Wire
    target: Wire

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("Cnot control and target must differ")


AbstractGate = Local | Cnot


@dataclass(frozen=True)
class AbstractCircuit:
    """Ordered gates (first applied first) plus a global phase."""

    gates: tuple[AbstractGate, ...]
    phase: float = 0.0
    numeric_fallback: bool = False

    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if isinstance(g, Cnot))


# CNOT permutation matrices in the fixed basis [H+, H-, V+, V-]
CNOT_POL_OAM = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CNOT_OAM_POL = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)


def gate_unitary(g: AbstractGate) -> np.ndarray:
    if isinstance(g, Local):
        return tensor(g.u, I2) if g.wire is Wire.POL else tensor(I2, g.u)
    return CNOT_POL_OAM if g.control is Wire.POL else CNOT_OAM_POL


def circuit_unitary(c: AbstractCircuit) -> np.ndarray:
    """e^{i phase} times the product of the gates in application order."""
    m = np.eye(4, dtype=complex)
    for g in c.gates:
        m = gate_unitary(g) @ m
    return cmath.exp(1j * c.phase) * m


# ---------------------------------------------------------------------------
# CNOT-count classification
# ---------------------------------------------------------------------------

_CLASS_ATOL = 1e-9


def cnot_class(k: WeylCoords) -> int:
    """Number of CNOTs (0..3) needed for exp(-iH(k)), k canonical.

    Identity class 0; the CNOT point (pi/4, 0, 0) class 1; the kz = 0 plane
    class 2; everything with |kz| > 0 class 3.  The kz < 0 half accounts for
    the mirror local-equivalence classes, which also need three CNOTs.
    """
    kx, ky, kz = k.as_tuple()
    if not is_weyl_canonical(kx, ky, kz):
        raise NonCanonicalCoords(f"coords {k} violate the chamber constraint")
    if abs(kx) < _CLASS_ATOL and abs(ky) < _CLASS_ATOL and abs(kz) < _CLASS_ATOL:
        return 0
    if abs(kx - math.pi / 4) < _CLASS_ATOL and abs(ky) < _CLASS_ATOL and abs(kz) < _CLASS_ATOL:
        return 1
    if abs(kz) < _CLASS_ATOL:
        return 2
    return 3


# ---------------------------------------------------------------------------
# templates: entangling cores with known interaction coordinates
# ---------------------------------------------------------------------------

def _rz(t: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * t), 0], [0, cmath.exp(0.5j * t)]], dtype=complex)


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rx(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _template_gates(k: WeylCoords, count: int) -> tuple[AbstractGate, ...]:
    """Entangling core with exactly ``count`` CNOTs, locally equivalent to
    exp(-iH(k)).

    count 2: CNOT (Rx(2kx) x Rz(2ky)) CNOT equals exp(-i(kx XX + ky ZZ))
    exactly, whose canonical coordinates are (kx, ky, 0).

    count 3: the alternating-orientation three-CNOT core; its canonical
    coordinates are (pi/4 - d/2, pi/4 - b/2, pi/4 - a/2) for middle rotations
    Rz(d), Ry(b), Ry(a), verified against the decomposition oracle.
    """
    kx, ky, kz = k.as_tuple()
    if count == 0:
        return ()
    if count == 1:
        return (Cnot(Wire.POL, Wire.OAM),)
    if count == 2:
        return (
            Cnot(Wire.POL, Wire.OAM),
            Local(Wire.POL, _rx(2 * kx)),
            Local(Wire.OAM, _rz(2 * ky)),
            Cnot(Wire.POL, Wire.OAM),
        )
    d = math.pi / 2 - 2 * kx
    b = math.pi / 2 - 2 * ky
    a = math.pi / 2 - 2 * kz
    return (
        Cnot(Wire.OAM, Wire.POL),
        Local(Wire.POL, _rz(d)),
        Local(Wire.OAM, _ry(b)),
        Cnot(Wire.POL, Wire.OAM),
        Local(Wire.OAM, _ry(a)),
        Cnot(Wire.OAM, Wire.POL),
    )


def _dress_to_target(
    gates: tuple[AbstractGate, ...], target: np.ndarray, atol: float
) -> AbstractCircuit | None:
    """Wrap an entangling core in outer locals so it equals ``target`` exactly.

    Both the core and the target are Cartan-decomposed; equal canonical
    coordinates let the local layers be composed.  Returns None when the
    result misses ``target`` by more than ``atol``.
    """
    w = circuit_unitary(AbstractCircuit(gates=gates))
    try:
        dw = kak_decompose(w)
        dg = kak_decompose(target)
    except DecompositionFailure:
        return None
    if max(
        abs(a - b) for a, b in zip(dw.coords.as_tuple(), dg.coords.as_tuple())
    ) > 1e-7:
        return None
    left_pol = dw.left_pol.conj().T @ dg.left_pol
    left_oam = dw.left_oam.conj().T @ dg.left_oam
    right_pol = dg.right_pol @ dw.right_pol.conj().T
    right_oam = dg.right_oam @ dw.right_oam.conj().T
    circuit = AbstractCircuit(
        gates=(
            Local(Wire.POL, left_pol),
            Local(Wire.OAM, left_oam),
            *gates,
            Local(Wire.POL, right_pol),
            Local(Wire.OAM, right_oam),
        ),
        phase=normalize_phase(dg.phase - dw.phase),
    )
    if phase_distance(circuit_unitary(circuit), target) > atol:
        return None
    return simplify(circuit)


def _numeric_fit(
    gates: tuple[AbstractGate, ...], target: np.ndarray, atol: float
) -> AbstractCircuit | None:
    """Fallback: fit the outer local layers by bounded quasi-Newton.

    Deterministically seeded; only reached if the closed-form dressing failed
    validation, which signals a numerically hostile input rather than a
    normal path.
    """
    from scipy.optimize import minimize

    core = circuit_unitary(AbstractCircuit(gates=gates))

    def su2(p):
        # ZYZ Euler angles
        return _rz(p[0]) @ _ry(p[1]) @ _rz(p[2])

    def build(p):
        return tensor(su2(p[0:3]), su2(p[3:6])) @ core @ tensor(su2(p[6:9]), su2(p[9:12]))

    def loss(p):
        m = build(p)
        t = abs(np.trace(m.conj().T @ target))
        return 16.0 - t * t

    best = None
    for seed in range(4):
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(-math.pi, math.pi, size=12)
        res = minimize(loss, x0, method="L-BFGS-B")
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < 1e-18:
            break
    if best is None or best.fun > 1e-14:
        return None
    p = best.x
    m = build(p)
    phase = -cmath.phase(np.trace(m.conj().T @ target))
    circuit = AbstractCircuit(
        gates=(
            Local(Wire.POL, su2(p[6:9])),
            Local(Wire.OAM, su2(p[9:12])),
            *gates,
            Local(Wire.POL, su2(p[0:3])),
            Local(Wire.OAM, su2(p[3:6])),
        ),
        phase=normalize_phase(phase),
        numeric_fallback=True,
    )
    if phase_distance(circuit_unitary(circuit), target) > atol:
        return None
    return simplify(circuit)


def synth_interaction(k: WeylCoords, atol: float = 1e-9) -> AbstractCircuit:
    """Circuit for exp(-iH(k)) using exactly cnot_class(k) CNOTs.

    The middle-gate angles are closed-form in (kx, ky, kz); every output is
    validated against ``interaction_unitary`` and falls back to a numeric fit
    (flagged on the circuit) should validation ever fail.
    """
    count = cnot_class(k)
    target = interaction_unitary(k)
    gates = _template_gates(k, count)
    if count == 0:
        return AbstractCircuit(gates=(), phase=0.0)
    circuit = _dress_to_target(gates, target, atol)
    if circuit is None:
        circuit = _numeric_fit(gates, target, atol)
    if circuit is None:
        raise DecompositionFailure(
            f"interaction synthesis failed for coords {k}", matrix=target
        )
    return circuit


def synth_u4(u: np.ndarray, atol: float = 1e-9) -> AbstractCircuit:
    """Full synthesis: phase extraction, Cartan decomposition, interaction
    lowering, local-gate merging.  The result reproduces ``u`` exactly
    (recorded phase included) within ``atol``."""
    u = np.asarray(u, dtype=complex)
    d = kak_decompose(u)
    inner = synth_interaction(d.coords, atol=atol)
    circuit = AbstractCircuit(
        gates=(
            Local(Wire.POL, d.left_pol),
            Local(Wire.OAM, d.left_oam),
            *inner.gates,
            Local(Wire.POL, d.right_pol),
            Local(Wire.OAM, d.right_oam),
        ),
        phase=normalize_phase(d.phase + inner.phase),
        numeric_fallback=inner.numeric_fallback,
    )
    circuit = simplify(circuit)
    if phase_distance(circuit_unitary(circuit), u) > atol:
        raise DecompositionFailure("synthesized circuit failed validation", matrix=u)
    return circuit


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

_IDENTITY_ATOL = 1e-10


def _local_phase_if_identity(u: np.ndarray) -> float | None:
    """If u = e^{i a} I within 1e-10, return a, else None."""
    t = np.trace(u)
    if abs(t) == 0.0:
        return None
    phase = t / abs(t)
    if float(np.linalg.norm(u - phase * np.eye(2), ord="fro")) < _IDENTITY_ATOL:
        return cmath.phase(t)
    return None


def simplify(c: AbstractCircuit) -> AbstractCircuit:
    """Merge adjacent same-wire locals, drop identity locals into the phase.

    Preserves ``circuit_unitary`` within 1e-10 and is idempotent: locals are
    accumulated per wire between CNOTs and flushed in fixed POL-then-OAM
    order.
    """
    phase = c.phase
    out: list[AbstractGate] = []
    pending: dict[Wire, np.ndarray] = {}

    def flush():
        nonlocal phase
        for wire in (Wire.POL, Wire.OAM):
            u = pending.pop(wire, None)
            if u is None:
                continue
            a = _local_phase_if_identity(u)
            if a is not None:
                phase += a
            else:
                out.append(Local(wire, u))

    for g in c.gates:
        if isinstance(g, Local):
            u = pending.get(g.wire)
            pending[g.wire] = g.u @ u if u is not None else g.u
        else:
            flush()
            out.append(g)
    flush()
    return AbstractCircuit(
        gates=tuple(out),
        phase=normalize_phase(phase),
        numeric_fallback=c.numeric_fallback,
    )


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------

def circuit_to_json_obj(c: AbstractCircuit) -> dict:
    gates = []
    for g in c.gates:
        if isinstance(g, Local):
            gates.append({"kind": "local", "wire": g.wire.value, "u": matrix_to_json_obj(g.u)})
        else:
            gates.append({"kind": "cnot", "control": g.control.value, "target": g.target.value})
    return {"phase": format_real(c.phase), "gates": gates}


def circuit_to_json(c: AbstractCircuit) -> str:
    return json.dumps(circuit_to_json_obj(c))


def circuit_from_json_obj(obj: dict) -> AbstractCircuit:
    gates: list[AbstractGate] = []
    for g in obj["gates"]:
        if g["kind"] == "local":
            u, _ = matrix_from_json_obj(g["u"])
            gates.append(Local(Wire(g["wire"]), u))
        elif g["kind"] == "cnot":
            gates.append(Cnot(Wire(g["control"]), Wire(g["target"])))
        else:
            raise ValueError(f"unknown gate kind {g['kind']!r}")
    return AbstractCircuit(gates=tuple(gates), phase=float(obj.get("phase", 0.0)))


def circuit_from_json(text: str) -> AbstractCircuit:
    return circuit_from_json_obj(json.loads(text))
