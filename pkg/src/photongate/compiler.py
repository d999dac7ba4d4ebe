"""Lower abstract circuits to ordered optical element recipes.

Each abstract CNOT becomes either the Mach-Zehnder CNOT (exactly the
POL-control permutation) or the Sagnac interferometer wrapped in single-qubit
correction gates; the corrections come from solving the local-equivalence
dressing of the model matrix against the wanted CNOT orientation (both are
Cartan-decomposed once and the local layers composed).  All single-qubit
gates, corrections included, are merged wire-by-wire before being expanded
into wave plates, converters, and Dove prisms; the circuit's global phase and
every projective decomposition residual accumulate into the recipe phase.

Correction layers are not unique: twisting by any pair of locals that
stabilizes the interferometer unitary gives another valid wrapping.  A small
precomputed family of such twists is tried per CNOT and the cheapest (by
surface count) merged lowering wins; AUTO additionally chooses per CNOT
between the two interferometers.
"""

from __future__ import annotations

import cmath
import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .circuits import AbstractCircuit, Cnot, Local, Wire, CNOT_POL_OAM, CNOT_OAM_POL, circuit_unitary, simplify
from .elements import (
    ComponentCatalog,
    Element,
    MzCnot,
    Recipe,
    SagnacCnot,
    element_unitary,
    mz_cnot_unitary,
    sagnac_model_unitary,
)
from .errors import DecompositionFailure
from .kak import kak_decompose
from .matrices import I2, normalize_phase, phase_distance, tensor
from .waveplates import decompose_oam, decompose_pol


class CnotImpl(enum.Enum):
    SAGNAC = "sagnac"
    MZ = "mz"
    AUTO = "auto"


@dataclass(frozen=True)
class _Lowering:
    """One way to realize an abstract CNOT orientation physically.

    e^{i phase} (right_pol x right_oam) ELEM (left_pol x left_oam) = CNOT.
    """

    element: Element
    left_pol: np.ndarray
    left_oam: np.ndarray
    right_pol: np.ndarray
    right_oam: np.ndarray
    phase: float


def _kron_split(m: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Factor a 4x4 as pol x oam if it is one (rank-1 realignment test)."""
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    if s[1] > 1e-10:
        return None
    a = (u[:, 0] * math.sqrt(s[0])).reshape(2, 2)
    b = (vh[0, :] * math.sqrt(s[0])).reshape(2, 2)
    return a, b


def _base_lowering(elem: Element, target: np.ndarray) -> _Lowering:
    e_mat = element_unitary(elem)
    if np.allclose(e_mat, target, atol=1e-14):
        return _Lowering(elem, I2, I2, I2, I2, 0.0)
    de = kak_decompose(e_mat)
    dt = kak_decompose(target)
    return _Lowering(
        element=elem,
        left_pol=de.left_pol.conj().T @ dt.left_pol,
        left_oam=de.left_oam.conj().T @ dt.left_oam,
        right_pol=dt.right_pol @ de.right_pol.conj().T,
        right_oam=dt.right_oam @ de.right_oam.conj().T,
        phase=normalize_phase(dt.phase - de.phase),
    )


def _rz(t: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * t), 0], [0, cmath.exp(0.5j * t)]], dtype=complex)


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_TWIST_POOL = [
    I2,
    _rz(math.pi / 2),
    _rz(math.pi),
    _rz(-math.pi / 2),
    _SX,
    _SX @ _rz(math.pi / 2),
    np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
]


def _lowering_variants(elem: Element, target: np.ndarray) -> tuple[_Lowering, ...]:
    """The base dressing plus stabilizer twists of the element unitary.

    For candidate locals (a x b), keep those where ELEM (a x b) ELEM^dag is
    itself local: then right-side corrections can absorb the twist and the
    wrapped product still equals the target CNOT.
    """
    base = _base_lowering(elem, target)
    e_mat = element_unitary(elem)
    e_dag = e_mat.conj().T
    variants = [base]
    seen = set()
    for a, b in itertools.product(_TWIST_POOL, _TWIST_POOL):
        ab = tensor(a, b)
        moved = e_mat @ ab @ e_dag
        split = _kron_split(moved)
        if split is None:
            continue
        c_pol, c_oam = split
        lowering = _Lowering(
            element=elem,
            left_pol=a.conj().T @ base.left_pol,
            left_oam=b.conj().T @ base.left_oam,
            right_pol=base.right_pol @ c_pol,
            right_oam=base.right_oam @ c_oam,
            phase=base.phase,
        )
        key = np.round(
            np.concatenate(
                [
                    lowering.left_pol.ravel(),
                    lowering.left_oam.ravel(),
                    lowering.right_pol.ravel(),
                    lowering.right_oam.ravel(),
                ]
            ),
            10,
        ).tobytes()
        if key in seen:
            continue
        seen.add(key)
        variants.append(lowering)
        if len(variants) >= 12:
            break
    return tuple(variants)


_LOWERING_CACHE: dict[tuple[str, Wire], tuple[_Lowering, ...]] = {}


def _lowerings_for(kind: str, control: Wire) -> tuple[_Lowering, ...]:
    key = (kind, control)
    if key not in _LOWERING_CACHE:
        target = CNOT_POL_OAM if control is Wire.POL else CNOT_OAM_POL
        elem = MzCnot() if kind == "mz" else SagnacCnot()
        _LOWERING_CACHE[key] = _lowering_variants(elem, target)
    return _LOWERING_CACHE[key]


# ---------------------------------------------------------------------------
# the compile walk
# ---------------------------------------------------------------------------

def _emit_locals(
    pol: np.ndarray, oam: np.ndarray, catalog: ComponentCatalog
) -> tuple[list[Element], float, int]:
    """Expand a pending pol/oam local pair into elements.

    Returns (elements, phase, surfaces)."""
    out: list[Element] = []
    phase = 0.0
    pol_elems, pol_phase = decompose_pol(pol)
    oam_elems, oam_phase = decompose_oam(oam)
    out.extend(pol_elems)
    out.extend(oam_elems)
    phase += pol_phase + oam_phase
    surfaces = sum(catalog.surfaces_of(e) for e in out)
    return out, phase, surfaces


def _segments(c: AbstractCircuit) -> tuple[list[tuple[np.ndarray, np.ndarray]], list[Wire]]:
    """Split the circuit at its CNOTs.

    Returns the merged (pol, oam) local pair of every gap (one more gap than
    CNOTs) and the control wire of each CNOT.
    """
    segs: list[tuple[np.ndarray, np.ndarray]] = []
    controls: list[Wire] = []
    pol = np.array(I2)
    oam = np.array(I2)
    for g in c.gates:
        if isinstance(g, Local):
            if g.wire is Wire.POL:
                pol = g.u @ pol
            else:
                oam = g.u @ oam
        else:
            segs.append((pol, oam))
            controls.append(g.control)
            pol = np.array(I2)
            oam = np.array(I2)
    segs.append((pol, oam))
    return segs, controls


def compile_circuit(
    c: AbstractCircuit,
    impl: CnotImpl = CnotImpl.AUTO,
    catalog: ComponentCatalog | None = None,
    atol: float = 1e-9,
) -> Recipe:
    """Lower an abstract circuit to a physical recipe.

    ``impl`` selects the CNOT realization; AUTO admits both interferometers
    per CNOT.  Because every single-qubit layer merges only with its two
    neighboring CNOT corrections, the total surface count is a sum of
    adjacent-pair terms, and a Viterbi pass over (implementation, correction
    variant) choices per CNOT finds the cheapest recipe exactly.  The result
    is validated against the circuit unitary before being returned.
    """
    catalog = catalog or ComponentCatalog()
    c = simplify(c)
    segs, controls = _segments(c)
    n = len(controls)
    kinds = ("mz", "sagnac") if impl is CnotImpl.AUTO else (impl.value,)

    from .simulate import simulate_unitary

    target = circuit_unitary(c)

    if n == 0:
        els, ph, _ = _emit_locals(segs[0][0], segs[0][1], catalog)
        recipe = Recipe(
            elements=tuple(els),
            phase=normalize_phase(c.phase + ph),
            catalog=catalog,
            numeric_fallback=c.numeric_fallback,
        )
    else:
        pools = [
            [low for k in kinds for low in _lowerings_for(k, ctl)] for ctl in controls
        ]

        def gap_cost(i: int, prev: _Lowering | None, nxt: _Lowering | None) -> int:
            pol, oam = segs[i]
            if prev is not None:
                pol = pol @ prev.right_pol
                oam = oam @ prev.right_oam
            if nxt is not None:
                pol = nxt.left_pol @ pol
                oam = nxt.left_oam @ oam
            _, _, surf = _emit_locals(pol, oam, catalog)
            return surf

        # Viterbi over per-CNOT variant choices; gap i couples choices i-1, i.
        costs = [gap_cost(0, None, v) for v in pools[0]]
        back: list[list[int]] = []
        for i in range(1, n):
            new_costs = []
            back_i = []
            for v in pools[i]:
                best_j, best_c = 0, None
                for j, u in enumerate(pools[i - 1]):
                    cst = costs[j] + gap_cost(i, u, v)
                    if best_c is None or cst < best_c:
                        best_j, best_c = j, cst
                new_costs.append(best_c)
                back_i.append(best_j)
            costs = new_costs
            back.append(back_i)
        finals = [
            costs[j] + gap_cost(n, u, None) for j, u in enumerate(pools[n - 1])
        ]
        j = int(np.argmin(finals))
        path = [j]
        for back_i in reversed(back):
            path.append(back_i[path[-1]])
        path.reverse()
        chosen = [pools[i][path[i]] for i in range(n)]

        elements: list[Element] = []
        phase = c.phase
        prev: _Lowering | None = None
        for i, low in enumerate(chosen):
            pol, oam = segs[i]
            if prev is not None:
                pol = pol @ prev.right_pol
                oam = oam @ prev.right_oam
            pol = low.left_pol @ pol
            oam = low.left_oam @ oam
            els, ph, _ = _emit_locals(pol, oam, catalog)
            elements.extend(els)
            elements.append(low.element)
            phase += ph + low.phase
            prev = low
        pol, oam = segs[n]
        pol = pol @ prev.right_pol
        oam = oam @ prev.right_oam
        els, ph, _ = _emit_locals(pol, oam, catalog)
        elements.extend(els)
        phase += ph
        recipe = Recipe(
            elements=tuple(elements),
            phase=normalize_phase(phase),
            catalog=catalog,
            numeric_fallback=c.numeric_fallback,
        )

    if phase_distance(simulate_unitary(recipe), target) > atol:
        raise DecompositionFailure(
            "compiled recipe failed validation against the circuit", matrix=target
        )
    return recipe
