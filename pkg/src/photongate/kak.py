"""Cartan (KAK) decomposition of two-qubit unitaries.

Any U in U(4) factors as

    U = e^{i theta} (R_pol x R_oam) * exp(-i H) * (L_pol x L_oam),

with H = kx XX + ky YY + kz ZZ.  This module computes that factorization via
the magic (Bell-like) basis, canonicalizes the interaction coordinates into
the Weyl chamber, and exposes the Makhlin-style local invariants.

Magic basis convention (columns are the Bell-like states):

    Q = 1/sqrt(2) * [[1, 0, 0, i],
                     [0, i, 1, 0],
                     [0, i,-1, 0],
                     [1, 0, 0,-i]]

In this basis tensor-product unitaries become real orthogonal matrices and
exp(-i H) becomes diagonal with eigenvalues e^{-i h_j},
h = (kx-ky+kz, kx+ky-kz, -kx-ky-kz, -kx+ky+kz).

Chamber note: coordinates are folded into pi/4 >= kx >= ky >= |kz|, with
kz >= 0 enforced whenever kx is at the pi/4 boundary.  A strictly nonnegative
kz for kx < pi/4 is not reachable by single-qubit dressings (the kz < 0 points
form the mirror local-equivalence class), so exact reassembly forces the
|kz| form of the constraint.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DecompositionFailure
from .matrices import (
    I2,
    SX,
    SY,
    SZ,
    format_real,
    normalize_phase,
    phase_distance,
    su4_normalize,
    tensor,
)

MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]],
    dtype=complex,
) * math.sqrt(0.5)
MAGIC_DAG = MAGIC.conj().T

# Diagonal images of XX, YY, ZZ in the magic basis, as sign vectors.
_VX = np.array([1.0, 1.0, -1.0, -1.0])
_VY = np.array([-1.0, 1.0, -1.0, 1.0])
_VZ = np.array([1.0, -1.0, -1.0, 1.0])

_PAULIS = (SX, SY, SZ)

#: Slack for chamber membership comparisons.
CHAMBER_ATOL = 1e-12


@dataclass(frozen=True)
class WeylCoords:
    """Interaction coefficients (radians) of XX, YY, ZZ in H."""

    kx: float
    ky: float
    kz: float
    canonical: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.kx, self.ky, self.kz)

    def to_json_obj(self) -> dict:
        return {
            "kx": format_real(self.kx),
            "ky": format_real(self.ky),
            "kz": format_real(self.kz),
        }


@dataclass(frozen=True)
class LocalInvariants:
    """Makhlin-style invariants; equal for locally equivalent gates."""

    g1: complex
    g2: float


@dataclass(frozen=True)
class KakDecomposition:
    """U = e^{i phase} (right_pol x right_oam) e^{-iH(coords)} (left_pol x left_oam).

    The left pair is applied first, the right pair last.
    """

    phase: float
    left_pol: np.ndarray
    left_oam: np.ndarray
    coords: WeylCoords
    right_pol: np.ndarray
    right_oam: np.ndarray


def is_weyl_canonical(kx: float, ky: float, kz: float, atol: float = 1e-9) -> bool:
    """Chamber membership: pi/4 >= kx >= ky >= |kz|; kz >= 0 at kx = pi/4."""
    if not (math.pi / 4 + atol >= kx >= ky - atol and ky >= abs(kz) - atol):
        return False
    if ky < -atol:
        return False
    if kx >= math.pi / 4 - atol and kz < -atol:
        return False
    return True


def interaction_unitary(k: WeylCoords | tuple[float, float, float]) -> np.ndarray:
    """exp(-i (kx XX + ky YY + kz ZZ)) in closed form via the magic basis."""
    kx, ky, kz = k.as_tuple() if isinstance(k, WeylCoords) else k
    h = kx * _VX + ky * _VY + kz * _VZ
    return (MAGIC * np.exp(-1j * h)) @ MAGIC_DAG


def local_invariants(u: np.ndarray) -> LocalInvariants:
    """g1 = tr^2(m)/(16 det u), g2 = (tr^2(m) - tr(m^2))/(4 det u), m = M^T M."""
    u = np.asarray(u, dtype=complex)
    m = MAGIC_DAG @ u @ MAGIC
    mm = m.T @ m
    det = np.linalg.det(u)
    tr = np.trace(mm)
    g1 = tr * tr / (16.0 * det)
    g2 = (tr * tr - np.trace(mm @ mm)) / (4.0 * det)
    return LocalInvariants(g1=complex(g1), g2=float(g2.real))


# ---------------------------------------------------------------------------
# simultaneous diagonalization of the symmetric unitary M^T M
# ---------------------------------------------------------------------------

# Deterministic mixing weights; 0, 1 and the golden-ratio irrationals make
# accidental eigenvalue collisions of Re + lambda*Im simultaneously for all
# weights impossible in practice.  Never randomized.
_LAMBDA_SWEEP = (0.0, 1.0, 0.6180339887498949, 1.618033988749895, 0.3819660112501051)

_DIAG_ATOL = 1e-9


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - np.diag(np.diagonal(a)))))


def _joint_diagonalizer(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Real orthogonal P with P^T a P and P^T b P diagonal, or None."""
    for lam in _LAMBDA_SWEEP:
        _, p = np.linalg.eigh(a + lam * b)
        if (
            _off_diagonal_norm(p.T @ a @ p) < _DIAG_ATOL
            and _off_diagonal_norm(p.T @ b @ p) < _DIAG_ATOL
        ):
            return p
    # Nested fallback: diagonalize a, then b restricted to a's eigenspaces.
    for gtol in (1e-12, 1e-9, 1e-6):
        vals, p = np.linalg.eigh(a)
        cols = []
        i = 0
        while i < 4:
            j = i + 1
            while j < 4 and vals[j] - vals[i] < gtol:
                j += 1
            block = p[:, i:j]
            if j - i > 1:
                _, w = np.linalg.eigh(block.T @ b @ block)
                block = block @ w
            cols.append(block)
            i = j
        p = np.hstack(cols)
        if (
            _off_diagonal_norm(p.T @ a @ p) < _DIAG_ATOL
            and _off_diagonal_norm(p.T @ b @ p) < _DIAG_ATOL
        ):
            return p
    return None


def _kron_factor(matrix: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split a 4x4 tensor-product unitary into (g, f1, f2), det(f1)=det(f2)=1.

    Standard peeling around the largest-magnitude entry; valid only when the
    input really is a Kronecker product (guaranteed here by construction).
    """
    a, b = max(
        ((i, j) for i in range(4) for j in range(4)),
        key=lambda t: abs(matrix[t]),
    )
    f1 = np.zeros((2, 2), dtype=complex)
    f2 = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            f1[(a >> 1) ^ i, (b >> 1) ^ j] = matrix[a ^ (i << 1), b ^ (j << 1)]
            f2[(a & 1) ^ i, (b & 1) ^ j] = matrix[a ^ i, b ^ j]
    f1 /= np.sqrt(np.linalg.det(f1)) or 1
    f2 /= np.sqrt(np.linalg.det(f2)) or 1
    g = matrix[a, b] / (f1[a >> 1, b >> 1] * f2[a & 1, b & 1])
    return complex(g), f1, f2


def _so4_to_su2_pair(o: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Map SO(4) in the magic basis to (phase, A, B) with Q o Q† = phase*(A x B)."""
    ab = MAGIC @ o @ MAGIC_DAG
    return _kron_factor(ab)


# ---------------------------------------------------------------------------
# canonicalization into the Weyl chamber
# ---------------------------------------------------------------------------

# Single-qubit Cliffords that exchange two Pauli axes (fixing the third up to
# sign): index m swaps the other two axes.
_AXIS_SWAPPERS = {
    (0, 1): cmath.exp(-1j * math.pi / 4) * np.array([[1, 0], [0, 1j]], dtype=complex),  # e^{-i pi/4 Z}
    (1, 2): math.sqrt(0.5) * np.array([[1, -1j], [-1j, 1]], dtype=complex),  # e^{-i pi/4 X}
    (0, 2): math.sqrt(0.5) * np.array([[1, -1], [1, 1]], dtype=complex),  # e^{-i pi/4 Y}
}


class _Canonicalizer:
    """Folds raw coordinates into the chamber while tracking the dressing.

    Maintains e^{i phase} (Rp x Ro) exp(-iH(k)) (Lp x Lo) invariant under
    every move.
    """

    def __init__(self, k, lp, lo, rp, ro, phase):
        self.k = [float(k[0]), float(k[1]), float(k[2])]
        self.lp = np.array(lp, dtype=complex)
        self.lo = np.array(lo, dtype=complex)
        self.rp = np.array(rp, dtype=complex)
        self.ro = np.array(ro, dtype=complex)
        self.phase = float(phase)

    def shift(self, j: int, steps: int) -> None:
        # k_j += steps*pi/2 with G(k_old) = i^steps (s_j x s_j)^steps G(k_new)
        self.k[j] += steps * math.pi / 2
        self.phase += steps * math.pi / 2
        if steps % 2:
            pauli = _PAULIS[j]
            self.rp = self.rp @ pauli
            self.ro = self.ro @ pauli

    def swap(self, j: int, l: int) -> None:
        key = (min(j, l), max(j, l))
        s = _AXIS_SWAPPERS[key]
        sd = s.conj().T
        self.k[j], self.k[l] = self.k[l], self.k[j]
        self.rp = self.rp @ s
        self.ro = self.ro @ s
        self.lp = sd @ self.lp
        self.lo = sd @ self.lo

    def negate(self, j: int, l: int) -> None:
        m = 3 - j - l  # the remaining axis
        pauli = _PAULIS[m]
        self.k[j] = -self.k[j]
        self.k[l] = -self.k[l]
        self.ro = self.ro @ pauli
        self.lo = pauli @ self.lo

    def shift_into_range(self, j: int) -> None:
        while self.k[j] <= -math.pi / 4:
            self.shift(j, +1)
        while self.k[j] > math.pi / 4:
            self.shift(j, -1)

    def run(self, atol: float = 1e-9) -> None:
        for j in range(3):
            self.shift_into_range(j)
        # sort descending by magnitude
        k = self.k
        if abs(k[0]) < abs(k[1]):
            self.swap(0, 1)
        if abs(k[1]) < abs(k[2]):
            self.swap(1, 2)
        if abs(k[0]) < abs(k[1]):
            self.swap(0, 1)
        # push all negativity into kz
        if self.k[0] < 0:
            self.negate(0, 2)
        if self.k[1] < 0:
            self.negate(1, 2)
        self.shift_into_range(2)
        # resolve the mirror ambiguity at the kx = pi/4 boundary toward kz >= 0
        if self.k[0] > math.pi / 4 - atol and self.k[2] < 0:
            self.shift(0, -1)
            self.negate(0, 2)


def canonicalize(
    raw: WeylCoords | tuple[float, float, float],
    left_pol: np.ndarray = I2,
    left_oam: np.ndarray = I2,
    right_pol: np.ndarray = I2,
    right_oam: np.ndarray = I2,
    phase: float = 0.0,
) -> KakDecomposition:
    """Fold raw coordinates into the Weyl chamber, absorbing the corrections.

    The output satisfies: e^{i phase'}(Rp' x Ro') exp(-iH(k')) (Lp' x Lo')
    equals the same product formed from the inputs.
    """
    k = raw.as_tuple() if isinstance(raw, WeylCoords) else raw
    c = _Canonicalizer(k, left_pol, left_oam, right_pol, right_oam, phase)
    c.run()
    kx, ky, kz = c.k
    coords = WeylCoords(kx, ky, kz, canonical=is_weyl_canonical(kx, ky, kz))
    return KakDecomposition(
        phase=normalize_phase(c.phase),
        left_pol=c.lp,
        left_oam=c.lo,
        coords=coords,
        right_pol=c.rp,
        right_oam=c.ro,
    )


def kak_decompose(u: np.ndarray, atol: float = 1e-9) -> KakDecomposition:
    """Cartan decomposition of a (possibly globally phased) 4x4 unitary.

    Conjugates into the magic basis, jointly diagonalizes the real and
    imaginary parts of M^T M with a real orthogonal matrix, splits the
    eigenphases into interaction coordinates plus local gates, and
    canonicalizes.  Degenerate spectra are handled by the deterministic
    weight sweep in the joint diagonalizer.

    Raises:
        DecompositionFailure: joint diagonalization failed or the recovered
            orthogonal factor was not real; the offending input is attached.
    """
    u = np.asarray(u, dtype=complex)
    theta, s = su4_normalize(u)
    m_mat = MAGIC_DAG @ s @ MAGIC
    mm = m_mat.T @ m_mat

    p = _joint_diagonalizer(mm.real, mm.imag)
    if p is None:
        raise DecompositionFailure(
            "failed to jointly diagonalize Re/Im of M^T M", matrix=u
        )
    if np.linalg.det(p) < 0:
        p = p.copy()
        p[:, 0] = -p[:, 0]

    d_sq = np.diagonal(p.T @ mm @ p)
    lam = np.angle(d_sq) / 2.0
    # det(D) must be +1: total eigenphase is 0 mod pi, fix odd multiples
    n = round(float(np.sum(lam)) / math.pi)
    if n % 2:
        lam = lam.copy()
        lam[0] -= math.pi if lam[0] > 0 else -math.pi

    d_conj = np.exp(-1j * lam)
    o1 = m_mat @ p * d_conj[np.newaxis, :]
    if float(np.max(np.abs(o1.imag))) > 1e-8:
        raise DecompositionFailure(
            "orthogonal factor of the magic-basis image is not real", matrix=u
        )
    o1 = o1.real
    o2 = p.T

    # eigenphases -> global phase + raw interaction coordinates
    # lam_j = -(w + kx vx_j + ky vy_j + kz vz_j); the sign vectors are
    # mutually orthogonal with norm^2 = 4.
    w = -float(np.sum(lam)) / 4.0
    kx = -float(lam @ _VX) / 4.0
    ky = -float(lam @ _VY) / 4.0
    kz = -float(lam @ _VZ) / 4.0

    g1, a_pol, a_oam = _so4_to_su2_pair(o1)
    g2, b_pol, b_oam = _so4_to_su2_pair(o2)

    phase = theta - w + cmath.phase(g1) + cmath.phase(g2)
    result = canonicalize(
        (kx, ky, kz),
        left_pol=b_pol,
        left_oam=b_oam,
        right_pol=a_pol,
        right_oam=a_oam,
        phase=phase,
    )
    if phase_distance(reassemble(result), u) > atol:
        raise DecompositionFailure(
            "decomposition round-trip exceeded tolerance", matrix=u
        )
    return result


def reassemble(d: KakDecomposition) -> np.ndarray:
    """e^{i phase} (right_pol x right_oam) exp(-iH) (left_pol x left_oam)."""
    return (
        cmath.exp(1j * d.phase)
        * tensor(d.right_pol, d.right_oam)
        @ interaction_unitary(d.coords)
        @ tensor(d.left_pol, d.left_oam)
    )
