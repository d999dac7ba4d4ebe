"""Complex matrix foundation for the two-qubit photon space.

Everything downstream works on plain ``numpy.ndarray`` values in the fixed
basis ``[H+, H-, V+, V-]``: polarization is the first (slower) tensor factor,
the orbital-angular-momentum qubit the second.  Matrices are validated at the
boundaries (construction helpers, JSON ingest) rather than wrapped in classes;
all functions here are pure.
"""

from __future__ import annotations

import cmath
import json
import math
from typing import Iterable

import numpy as np

from .errors import UnitarityError

#: Tolerance for U†U = I on construction of a unitary.
ATOL_CONSTRUCT = 1e-12
#: Looser tolerance used when ingesting hand-typed matrices from JSON.
ATOL_INGEST = 1e-8

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

#: Index of each basis state in the fixed ordering.
BASIS_LABELS = ("h+", "h-", "v+", "v-")


def is_unitary(m: np.ndarray, atol: float = ATOL_CONSTRUCT) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol))


def _checked(m: np.ndarray, dim: int, atol: float) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise UnitarityError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
    defect = float(np.max(np.abs(m.conj().T @ m - np.eye(dim))))
    if defect > atol:
        raise UnitarityError(
            f"matrix is not unitary within {atol:g} (defect {defect:.3e})"
        )
    return m


def unitary2(entries: Iterable, atol: float = ATOL_CONSTRUCT) -> np.ndarray:
    """Validate and return a 2x2 unitary as a complex ndarray."""
    return _checked(np.array(list(entries) if not isinstance(entries, np.ndarray) else entries), 2, atol)


def unitary4(entries: Iterable, atol: float = ATOL_CONSTRUCT) -> np.ndarray:
    """Validate and return a 4x4 unitary in basis [H+, H-, V+, V-]."""
    return _checked(np.array(list(entries) if not isinstance(entries, np.ndarray) else entries), 4, atol)


def statevec4(amplitudes: Iterable, normalized: bool = True) -> np.ndarray:
    """A 4-component state vector in basis [H+, H-, V+, V-]."""
    v = np.asarray(list(amplitudes) if not isinstance(amplitudes, np.ndarray) else amplitudes, dtype=complex)
    if v.shape != (4,):
        raise ValueError(f"state vector must have 4 amplitudes, got shape {v.shape}")
    if normalized and abs(np.vdot(v, v).real - 1.0) > ATOL_CONSTRUCT:
        raise ValueError("state vector is not normalized within 1e-12")
    return v


def normalize_phase(theta: float) -> float:
    """Reduce an angle to the canonical global-phase range [0, 2*pi)."""
    theta = math.fmod(float(theta), 2.0 * math.pi)
    if theta < 0.0:
        theta += 2.0 * math.pi
    if theta >= 2.0 * math.pi:  # fmod edge
        theta -= 2.0 * math.pi
    return theta


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with polarization as the first (slow) factor.

    ``tensor(a, b)`` acts with ``a`` on the polarization qubit and ``b`` on
    the OAM qubit, producing rows in the order H+, H-, V+, V-.
    """
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over phi of ||u - e^{i phi} v||_F; sqrt(8 - 2|tr(u† v)|) for 4x4.

    Zero exactly when ``u`` and ``v`` agree up to a global phase.  Evaluated
    at the minimizing phase phi* = arg tr(u† v) as an actual matrix norm:
    the explicit sqrt(2d - 2|tr|) form loses half the significant digits to
    cancellation near zero, which would bury ~1e-12 discrepancies under a
    ~1e-8 noise floor.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    t = np.trace(u.conj().T @ v)
    phase = t / abs(t) if abs(t) > 0.0 else 1.0
    return float(np.linalg.norm(u - phase * v, ord="fro"))


def process_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|tr(u† v)|^2 / d^2, in [0, 1]; equals 1 iff u = e^{i phi} v."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d = u.shape[0]
    t = abs(np.trace(u.conj().T @ v))
    return min(1.0, (t * t) / (d * d))


def su4_normalize(u: np.ndarray) -> tuple[float, np.ndarray]:
    """Split a U(4) matrix into (theta, s) with u = e^{i theta} s and det(s) = 1.

    theta = arg(det u)/4 has a four-fold ambiguity; the representative in
    [0, pi/2) is chosen so output is deterministic.
    """
    u = np.asarray(u, dtype=complex)
    theta = cmath.phase(np.linalg.det(u)) / 4.0
    while theta < 0.0:
        theta += math.pi / 2.0
    while theta >= math.pi / 2.0:
        theta -= math.pi / 2.0
    s = np.exp(-1j * theta) * u
    return theta, s


def random_su4(seed: int) -> np.ndarray:
    """Seeded Haar-random special unitary on the two-qubit space.

    QR orthonormalization of a complex Gaussian matrix with the standard
    phase correction (Mezzadri), then determinant normalized into SU(4).
    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    # fold the residual determinant phase into SU(4)
    q = q * np.exp(-1j * cmath.phase(np.linalg.det(q)) / 4.0)
    return q


def random_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) drawn from an existing generator."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q * np.exp(-1j * cmath.phase(np.linalg.det(q)) / 2.0)


# ---------------------------------------------------------------------------
# JSON encoding: {"matrix": [[[re, im] x n] x n]}
# ---------------------------------------------------------------------------

def matrix_to_json_obj(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "matrix": [[[float(c.real), float(c.imag)] for c in row] for row in m]
    }


def matrix_to_json(m: np.ndarray) -> str:
    return json.dumps(matrix_to_json_obj(m))


def matrix_from_json_obj(obj: dict) -> tuple[np.ndarray, bool]:
    """Parse the unitary JSON encoding, re-orthonormalizing slightly-off input.

    Returns ``(u, adjusted)``.  Input failing unitarity at 1e-8 is rejected;
    input inside 1e-8 but outside the construction tolerance is projected to
    the nearest unitary (polar decomposition) and flagged ``adjusted=True`` so
    callers can report the correction -- it is never silent.
    """
    try:
        rows = obj["matrix"]
        m = np.array([[complex(c[0], c[1]) for c in row] for row in rows])
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise UnitarityError(f"malformed matrix JSON: {exc}") from exc
    if m.shape not in ((2, 2), (4, 4)):
        raise UnitarityError(f"matrix must be 2x2 or 4x4, got shape {m.shape}")
    n = m.shape[0]
    defect = float(np.max(np.abs(m.conj().T @ m - np.eye(n))))
    if defect > ATOL_INGEST:
        raise UnitarityError(
            f"matrix is not unitary within ingest tolerance {ATOL_INGEST:g} "
            f"(defect {defect:.3e})"
        )
    adjusted = False
    if defect > ATOL_CONSTRUCT:
        # nearest unitary via SVD polar factor
        w, _, vh = np.linalg.svd(m)
        m = w @ vh
        adjusted = True
    return m, adjusted


def matrix_from_json(text: str) -> tuple[np.ndarray, bool]:
    return matrix_from_json_obj(json.loads(text))


def format_real(x: float) -> float:
    """Round a real to 12 significant digits for deterministic JSON output."""
    if x == 0.0 or not math.isfinite(x):
        return 0.0 if x == 0.0 else x
    return float(f"{x:.12g}")
