"""Exact matrix simulation of recipes and verification reports."""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass

import numpy as np

from .elements import Recipe, element_unitary, surface_count, transmission
from .matrices import format_real, phase_distance, process_fidelity


@dataclass(frozen=True)
class VerificationReport:
    fidelity: float
    phase_distance: float
    transmission: float
    cnot_count: int
    surface_count: int
    numerically_synthesized: bool

    def to_json_obj(self) -> dict:
        return {
            "fidelity": format_real(self.fidelity),
            "phase_distance": format_real(self.phase_distance),
            "transmission": format_real(self.transmission),
            "cnot_count": int(self.cnot_count),
            "surface_count": int(self.surface_count),
            "numerically_synthesized": bool(self.numerically_synthesized),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)


def simulate_unitary(r: Recipe) -> np.ndarray:
    """e^{i phase} times the ordered product of element unitaries (lossless)."""
    m = np.eye(4, dtype=complex)
    for e in r.elements:
        m = element_unitary(e) @ m
    return cmath.exp(1j * r.phase) * m


def apply_state(r: Recipe, s: np.ndarray) -> np.ndarray:
    """Propagate a normalized state vector through the recipe."""
    return simulate_unitary(r) @ np.asarray(s, dtype=complex)


def verify(r: Recipe, target: np.ndarray) -> VerificationReport:
    """Compare a recipe's exact simulated unitary against a target."""
    u = simulate_unitary(r)
    return VerificationReport(
        fidelity=process_fidelity(u, target),
        phase_distance=phase_distance(u, target),
        transmission=transmission(r),
        cnot_count=r.cnot_count(),
        surface_count=surface_count(r),
        numerically_synthesized=r.numeric_fallback,
    )
