"""Single-qubit gates as minimal optical element sequences.

Polarization gates become wave plates (any SU(2) needs at most a
quarter/half/quarter triple); OAM gates become mode converters and Dove
prisms.  On the Bloch sphere every available element is a half or quarter
turn about an axis confined to a great circle:

* wave plates: axes (sin 2t, 0, cos 2t) in the x-z plane,
* converters / Dove prisms (circular-pole OAM basis): equatorial axes
  (cos 2t, +-sin 2t, 0).

Gates are matched projectively (quaternions up to sign); every returned
sequence is re-composed and the global residual phase handed back for
absorption into the recipe phase.  Sequences are searched cheapest-first so
recognizable gates come out as single elements, with the closed-form
quarter/half/quarter solve as the always-available fallback.
"""

from __future__ import annotations

import cmath
import math
from typing import Callable

import numpy as np

from .errors import ConvergenceFailure
from .elements import (
    DovePrism,
    Element,
    HalfPiConverter,
    Hwp,
    PolPhase,
    Qwp,
    element_unitary,
)

_MATCH_ATOL = 1e-10


# ---------------------------------------------------------------------------
# quaternions: u = w I - i (x sx + y sy + z sz)
# ---------------------------------------------------------------------------

def _su2_to_quat(u: np.ndarray) -> np.ndarray:
    return np.array(
        [
            u[0, 0].real + u[1, 1].real,
            -(u[0, 1].imag + u[1, 0].imag),
            u[1, 0].real - u[0, 1].real,
            u[1, 1].imag - u[0, 0].imag,
        ]
    ) / 2.0


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, v1 = a[0], a[1:]
    w2, v2 = b[0], b[1:]
    return np.concatenate(
        ([w1 * w2 - v1 @ v2], w1 * v2 + w2 * v1 + np.cross(v1, v2))
    )


def _quat_mul_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, v1 = a[:, :1], a[:, 1:]
    w2, v2 = b[:, :1], b[:, 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return np.concatenate([w, v], axis=1)


def _strip_phase(u: np.ndarray) -> tuple[float, np.ndarray]:
    """u = e^{i phi} su2 with det(su2) = 1; returns (phi, su2)."""
    det = np.linalg.det(u)
    phi = cmath.phase(det) / 2.0
    return phi, u * cmath.exp(-1j * phi)


# ---------------------------------------------------------------------------
# element families, parametrized by the Bloch axis angle A (element angle A/2)
# ---------------------------------------------------------------------------

def _quat_half(axis_angle: float) -> np.ndarray:
    return np.array([0.0, math.sin(axis_angle), 0.0, math.cos(axis_angle)])


def _quat_quarter(axis_angle: float) -> np.ndarray:
    s = math.sqrt(0.5)
    return np.array(
        [s, s * math.sin(axis_angle), 0.0, s * math.cos(axis_angle)]
    )


def _quat_zrot(phi: float) -> np.ndarray:
    # su2 part of PolPhase(phi) = diag(1, e^{i phi})
    return np.array([math.cos(phi / 2), 0.0, 0.0, math.sin(phi / 2)])


# Family descriptors for the polarization solver: each maps the solved axis
# angle to a concrete element.  OAM targets are rotated into this same x-z
# axis convention first (see _OAM_TO_POL below), so one solver serves both.
_POL_FAMILIES: dict[str, tuple[Callable[[float], np.ndarray], Callable[[float], Element]]] = {
    "half": (_quat_half, lambda a: Hwp(a / 2.0)),
    "quarter": (_quat_quarter, lambda a: Qwp(a / 2.0)),
    "zrot": (_quat_zrot, lambda a: PolPhase(a)),
}

_OAM_ELEMENT_MAKERS = {
    "half": lambda a: DovePrism(-a / 2.0),
    "quarter": lambda a: HalfPiConverter(a / 2.0),
}

# Rotation taking the equatorial OAM axis family (cos A, sin A, 0) onto the
# wave-plate family (sin A, 0, cos A): the cyclic map x->z, y->x, z->y.
_OAM_TO_POL = np.array([0.5, -0.5, -0.5, -0.5])
_OAM_TO_POL_INV = np.array([0.5, 0.5, 0.5, 0.5])


def _conj_quat(r: np.ndarray, q: np.ndarray) -> np.ndarray:
    r_inv = np.array([r[0], -r[1], -r[2], -r[3]])
    return _quat_mul(_quat_mul(r, q), r_inv)


# ---------------------------------------------------------------------------
# sequence solving
# ---------------------------------------------------------------------------

def _overlap(q1: np.ndarray, q2: np.ndarray) -> float:
    return abs(float(q1 @ q2))


def _compose_family_quat(kinds: tuple[str, ...], angles: np.ndarray) -> np.ndarray:
    """Quaternion of the matrix product; kinds/angles listed first-applied first."""
    q = np.array([1.0, 0.0, 0.0, 0.0])
    for kind, a in zip(kinds, angles):
        q = _quat_mul(_POL_FAMILIES[kind][0](a), q)
    return q


def _feasible(kinds: tuple[str, ...], t: np.ndarray) -> bool:
    """Cheap necessary conditions for the target to lie in a family's range.

    Derived from the composite quaternion forms; a True here is not
    sufficient (the solve still verifies), it only prunes hopeless attempts.
    """
    w, x, y, z = t
    eps = 1e-8
    if kinds == ("zrot",):
        return x * x + y * y < eps
    if kinds == ("half",):
        return w * w + y * y < eps
    if kinds == ("quarter",):
        return (abs(w) - math.sqrt(0.5)) ** 2 + y * y < eps
    if kinds == ("half", "half"):
        return x * x + z * z < eps
    if kinds in (("half", "quarter"), ("quarter", "half")):
        return abs(w * w + y * y - 0.5) < eps
    if kinds == ("quarter", "quarter"):
        return min(
            abs((1 - 2 * w) ** 2 + 4 * y * y - 1), abs((1 + 2 * w) ** 2 + 4 * y * y - 1)
        ) < eps
    if kinds in (("zrot", "half"), ("half", "zrot")):
        return min(abs(w * x - y * z), abs(w * x + y * z)) < eps
    if kinds in (("zrot", "quarter"), ("quarter", "zrot")):
        return min(
            abs(2 * (w * x - y * z) ** 2 - (x * x + y * y)),
            abs(2 * (w * x + y * z) ** 2 - (x * x + y * y)),
        ) < eps
    return True


def _residual(kinds: tuple[str, ...], angles: np.ndarray, target: np.ndarray) -> np.ndarray:
    q = _compose_family_quat(kinds, angles)
    r_plus = q - target
    r_minus = q + target
    return r_plus if r_plus @ r_plus <= r_minus @ r_minus else r_minus


def _solve_angles(kinds: tuple[str, ...], target: np.ndarray) -> np.ndarray | None:
    """Fit axis angles so the family product matches ``target`` up to sign.

    Deterministic coarse grid seed followed by Gauss-Newton on the quaternion
    difference (the difference, not 1 - overlap^2, whose cancellation floors
    angle precision near 1e-8).  A miss simply means the target is outside
    this family's reachable set.
    """
    n = len(kinds)
    grid = np.linspace(0.0, 2.0 * math.pi, 96 if n == 1 else 18, endpoint=False)
    if n == 1:
        candidates = grid[:, None]
    else:
        candidates = np.stack(np.meshgrid(grid, grid), axis=-1).reshape(-1, 2)
    # vectorized coarse scan: compose family quaternions over the whole grid
    qs = None
    for j, kind in enumerate(kinds):
        fam = _POL_FAMILIES[kind][0]
        batch = np.stack([fam(a) for a in candidates[:, j]])
        qs = batch if qs is None else _quat_mul_batch(batch, qs)
    f_all = np.minimum(
        np.sum((qs - target) ** 2, axis=1), np.sum((qs + target) ** 2, axis=1)
    )
    x = np.asarray(candidates[int(np.argmin(f_all))], dtype=float)
    h = 1e-7
    for _ in range(24):
        r = _residual(kinds, x, target)
        f = float(r @ r)
        if f < 1e-26:
            break
        jac = np.empty((4, n))
        for j in range(n):
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            jac[:, j] = (_residual(kinds, xp, target) - _residual(kinds, xm, target)) / (2 * h)
        jtj = jac.T @ jac + 1e-12 * np.eye(n)
        try:
            step = np.linalg.solve(jtj, jac.T @ r)
        except np.linalg.LinAlgError:
            return None
        x_new = x - step
        if float(_residual(kinds, x_new, target) @ _residual(kinds, x_new, target)) >= f:
            # halve once; a second failure means a dead end for this family
            x_new = x - 0.5 * step
            if float(_residual(kinds, x_new, target) @ _residual(kinds, x_new, target)) >= f:
                break
        x = x_new
    r = _residual(kinds, x, target)
    if float(r @ r) > 1e-22:
        return None
    # Prefer the +target representative: a pi shift of any half-turn axis
    # flips the composite sign, keeping generator inputs at their own angle.
    q = _compose_family_quat(kinds, x)
    if np.sum((q + target) ** 2) < np.sum((q - target) ** 2) and "half" in kinds:
        x = x.copy()
        x[kinds.index("half")] += math.pi
    return x


def _general_triple(target: np.ndarray) -> np.ndarray:
    """Closed-form quarter/half/quarter axis angles for any target quaternion.

    With u1 = A - B, u2 = B - C (axis angles A, B, C applied last-to-first),
    the composite quaternion satisfies

        w = -(cos u1 + cos u2)/2,   y = -(sin u1 + sin u2)/2,

    fixing u1, u2 up to the half-sum/half-difference split; the remaining
    in-plane components rotate rigidly with B, which a single atan2 pins.
    """
    w, x, y, z = target
    s_ang = math.atan2(-y, -w)
    c_dl = min(1.0, math.sqrt(w * w + y * y))
    dl = math.acos(c_dl)
    u1, u2 = s_ang + dl, s_ang - dl

    def plane(a):  # axis-angle -> (x, z) pair
        return np.array([math.sin(a), math.cos(a)])

    v0 = 0.5 * (
        -math.cos(u2) * plane(u1)
        + (1.0 + math.cos(u1 + u2)) * plane(0.0)
        - math.cos(u1) * plane(-u2)
    )
    if np.hypot(*v0) < 1e-12:
        b_ang = 0.0
    else:
        b_ang = math.atan2(x, z) - math.atan2(v0[0], v0[1])
    return np.array([b_ang - u2, b_ang, b_ang + u1])  # C, B, A (first applied first)


#: Candidate sequences tried cheapest-first: (kinds first-applied-first, cost).
_POL_LADDER: tuple[tuple[tuple[str, ...], int], ...] = (
    (("zrot",), 1),
    (("half",), 2),
    (("quarter",), 2),
    (("zrot", "half"), 3),
    (("half", "zrot"), 3),
    (("zrot", "quarter"), 3),
    (("quarter", "zrot"), 3),
    (("half", "half"), 4),
    (("half", "quarter"), 4),
    (("quarter", "half"), 4),
    (("quarter", "quarter"), 4),
)

_OAM_LADDER: tuple[tuple[tuple[str, ...], int], ...] = (
    (("half",), 2),
    (("quarter",), 4),
    (("half", "half"), 4),
    (("half", "quarter"), 6),
    (("quarter", "half"), 6),
    (("quarter", "quarter"), 8),
)


_POL_IX = np.ix_((0, 2), (0, 2))  # rows H+, V+: the polarization 2x2 action


def element_qubit_action(e: Element, oam: bool) -> np.ndarray:
    """The element's 2x2 action on its own qubit."""
    full = element_unitary(e)
    return full[0:2, 0:2] if oam else full[_POL_IX]


def _finalize(
    u: np.ndarray, kinds: tuple[str, ...], angles: np.ndarray, oam: bool
) -> tuple[list[Element], float] | None:
    elements: list[Element] = []
    for kind, a in zip(kinds, angles):
        make = _OAM_ELEMENT_MAKERS[kind] if oam else _POL_FAMILIES[kind][1]
        elements.append(make(float(a)))
    prod = np.eye(2, dtype=complex)
    for e in elements:
        prod = element_qubit_action(e, oam) @ prod
    t = np.trace(prod.conj().T @ u)
    if abs(t) < 1e-12:
        return None
    phase = cmath.phase(t)
    if float(np.linalg.norm(u - cmath.exp(1j * phase) * prod, ord="fro")) > _MATCH_ATOL:
        return None
    return elements, phase


_DECOMPOSE_CACHE: dict[tuple[bytes, bool], tuple[tuple[Element, ...], float]] = {}


def _decompose(u: np.ndarray, oam: bool) -> tuple[list[Element], float]:
    u = np.asarray(u, dtype=complex)
    key = (np.round(u, 13).tobytes(), oam)
    hit = _DECOMPOSE_CACHE.get(key)
    if hit is not None:
        return list(hit[0]), hit[1]
    out = _decompose_uncached(u, oam)
    if len(_DECOMPOSE_CACHE) > 20000:
        _DECOMPOSE_CACHE.clear()
    _DECOMPOSE_CACHE[key] = (tuple(out[0]), out[1])
    return out


def _decompose_uncached(u: np.ndarray, oam: bool) -> tuple[list[Element], float]:
    phi, su2 = _strip_phase(u)
    q = _su2_to_quat(su2)

    # identity up to phase
    if abs(q[0]) > 1.0 - 1e-13:
        return [], cmath.phase(np.trace(u) / 2.0)

    q_solve = _conj_quat(_OAM_TO_POL, q) if oam else q
    ladder = _OAM_LADDER if oam else _POL_LADDER
    for kinds, _cost in ladder:
        if not _feasible(kinds, q_solve):
            continue
        angles = _solve_angles(kinds, q_solve)
        if angles is None:
            continue
        done = _finalize(u, kinds, angles, oam)
        if done is not None:
            return done
    # guaranteed closed-form fallback: quarter/half/quarter
    for sign in (1.0, -1.0):
        angles = _general_triple(sign * q_solve)
        done = _finalize(u, ("quarter", "half", "quarter"), angles, oam)
        if done is not None:
            return done
    raise ConvergenceFailure(
        "single-qubit element decomposition failed; input was likely not unitary"
    )


def decompose_pol(u: np.ndarray) -> tuple[list[Element], float]:
    """Wave-plate sequence for a polarization gate.

    Returns ``(elements, residual)`` with
    u = e^{i residual} * (composed polarization action of the elements).
    At most three plates (plus at most one PolPhase where the gate's
    diagonal structure makes that cheaper), first applied first.
    """
    return _decompose(u, oam=False)


def decompose_oam(u: np.ndarray) -> tuple[list[Element], float]:
    """Mode-converter / Dove-prism sequence for an OAM gate.

    Dove prisms substitute for pi converters throughout: both realize the
    same half-turn family and the prism has fewer surfaces.  At most three
    elements, first applied first.
    """
    return _decompose(u, oam=True)
