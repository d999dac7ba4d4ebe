"""Optical elements, their Jones-level unitaries, catalogs, and recipes.

Conventions (fixed once; the devices admit several self-consistent sign
choices and all downstream fidelities are independent of the choice):

* ``Hwp(theta)``: polarization reflection about the axis at ``theta``,
  [[cos 2t, sin 2t], [sin 2t, -cos 2t]], OAM untouched.
* ``Qwp(theta)``: rotation-conjugated diag(1, i) on polarization.
* ``PiConverter(theta)`` / ``HalfPiConverter(theta)``: the same two 2x2 forms
  acting on the OAM qubit after conjugation by the circular<->linear basis
  change B = (1/sqrt 2)[[1, 1], [i, -i]]; the l = +-1 states are the
  circular-equivalent poles of the OAM Bloch sphere.
* ``DovePrism(alpha)``: |l> -> e^{-2 i l alpha} |-l>, i.e.
  [[0, e^{2ia}], [e^{-2ia}, 0]] on OAM.
* ``PolPhase(phi)``: diag(1, 1, e^{i phi}, e^{i phi}) (phase on V).
* ``SagnacCnot``: the direction-resolved Sagnac interferometer model (H and V
  counter-propagate through the pi/8 Dove prism with opposite effective
  sign); locally equivalent to CNOT.
* ``MzCnot``: ideal Mach-Zehnder CNOT, polarization control, OAM target.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .matrices import I2, format_real, normalize_phase, tensor


# ---------------------------------------------------------------------------
# element types
# ---------------------------------------------------------------------------

def _reduced_angle(angle: float) -> float:
    """Element angles live on [0, pi): both plate forms have period pi."""
    a = math.fmod(float(angle), math.pi)
    if a < 0.0:
        a += math.pi
    return a if a < math.pi else 0.0


@dataclass(frozen=True)
class Hwp:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", _reduced_angle(self.angle))


@dataclass(frozen=True)
class Qwp:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", _reduced_angle(self.angle))


@dataclass(frozen=True)
class PiConverter:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", _reduced_angle(self.angle))


@dataclass(frozen=True)
class HalfPiConverter:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", _reduced_angle(self.angle))


@dataclass(frozen=True)
class DovePrism:
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", _reduced_angle(self.angle))


@dataclass(frozen=True)
class PolPhase:
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", normalize_phase(self.phi))


@dataclass(frozen=True)
class SagnacCnot:
    pass


@dataclass(frozen=True)
class MzCnot:
    pass


Element = Hwp | Qwp | PiConverter | HalfPiConverter | DovePrism | PolPhase | SagnacCnot | MzCnot

#: JSON type tags, one per element kind.
ELEMENT_TYPE_TAGS = {
    Hwp: "hwp",
    Qwp: "qwp",
    PiConverter: "pi_converter",
    HalfPiConverter: "half_pi_converter",
    DovePrism: "dove",
    SagnacCnot: "sagnac_cnot",
    MzCnot: "mz_cnot",
    PolPhase: "pol_phase",
}
_TAG_TO_TYPE = {v: k for k, v in ELEMENT_TYPE_TAGS.items()}


# ---------------------------------------------------------------------------
# 2x2 building blocks
# ---------------------------------------------------------------------------

#: Circular<->linear change of basis for the OAM qubit: columns are the
#: |+1>, |-1> states expressed in the linear-equivalent (HG-like) basis.
OAM_BASIS_CHANGE = np.array([[1, 1], [1j, -1j]], dtype=complex) / math.sqrt(2)
_B = OAM_BASIS_CHANGE
_B_DAG = _B.conj().T


def hwp_form(theta: float) -> np.ndarray:
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_form(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    return rot @ np.diag([1.0, 1j]) @ rot.T


def dove_form(alpha: float) -> np.ndarray:
    return np.array(
        [[0, cmath.exp(2j * alpha)], [cmath.exp(-2j * alpha), 0]], dtype=complex
    )


def pi_converter_form(theta: float) -> np.ndarray:
    return _B_DAG @ hwp_form(theta) @ _B


def half_pi_converter_form(theta: float) -> np.ndarray:
    return _B_DAG @ qwp_form(theta) @ _B


def sagnac_paper_matrix(l: int) -> np.ndarray:
    """The published Sagnac interferometer matrix, with symbolic OAM index l.

    Antidiagonal blocks with entries e^{-i l pi/2} on the H block and
    -e^{-i l pi/2} on the V block.  Kept as a regression artifact; as printed
    it factorizes into a tensor product for any fixed l, so the compiler
    lowers to the direction-resolved model instead (``sagnac_model_unitary``).
    """
    p = cmath.exp(-1j * l * math.pi / 2)
    return np.array(
        [[0, p, 0, 0], [p, 0, 0, 0], [0, 0, 0, -p], [0, 0, -p, 0]], dtype=complex
    )


def sagnac_model_unitary() -> np.ndarray:
    """Direction-resolved Sagnac CNOT model.

    The polarizing beam splitter sends H and V around the loop in opposite
    directions, so they see the pi/8 Dove prism with opposite effective sign:
    U = |H><H| x D(+pi/8) + |V><V| x D(-pi/8).  Locally equivalent to CNOT
    (canonical coordinates (pi/4, 0, 0)).
    """
    u = np.zeros((4, 4), dtype=complex)
    u[0:2, 0:2] = dove_form(math.pi / 8)
    u[2:4, 2:4] = dove_form(-math.pi / 8)
    return u


def mz_cnot_unitary() -> np.ndarray:
    """Mach-Zehnder CNOT: identity on H, OAM flip on V (pol control)."""
    return np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )


def element_unitary(e: Element) -> np.ndarray:
    """The element's 4x4 action in basis [H+, H-, V+, V-]."""
    if isinstance(e, Hwp):
        return tensor(hwp_form(e.angle), I2)
    if isinstance(e, Qwp):
        return tensor(qwp_form(e.angle), I2)
    if isinstance(e, PiConverter):
        return tensor(I2, pi_converter_form(e.angle))
    if isinstance(e, HalfPiConverter):
        return tensor(I2, half_pi_converter_form(e.angle))
    if isinstance(e, DovePrism):
        return tensor(I2, dove_form(e.angle))
    if isinstance(e, PolPhase):
        return np.diag([1.0, 1.0, cmath.exp(1j * e.phi), cmath.exp(1j * e.phi)])
    if isinstance(e, SagnacCnot):
        return sagnac_model_unitary()
    if isinstance(e, MzCnot):
        return mz_cnot_unitary()
    raise TypeError(f"unknown element {e!r}")


# ---------------------------------------------------------------------------
# catalog, recipe, loss model
# ---------------------------------------------------------------------------

#: Per-element surface counts calibrated to the published totals (a swap
#: recipe of three CNOT gadgets and four wave plates counts ~20 surfaces).
DEFAULT_SURFACES = {
    "hwp": 2,
    "qwp": 2,
    "pi_converter": 4,
    "half_pi_converter": 4,
    "dove": 2,
    "sagnac_cnot": 4,
    "mz_cnot": 4,
    "pol_phase": 1,
}


@dataclass(frozen=True)
class ComponentCatalog:
    """Reflectance per optical surface plus per-element surface counts."""

    reflectance_per_surface: float = 0.01
    surfaces: dict = field(default_factory=lambda: dict(DEFAULT_SURFACES))

    def __post_init__(self):
        r = self.reflectance_per_surface
        if not (0.0 <= r < 1.0):
            raise ValueError(f"reflectance must be in [0, 1), got {r}")
        merged = dict(DEFAULT_SURFACES)
        merged.update(self.surfaces)
        object.__setattr__(self, "surfaces", merged)

    def surfaces_of(self, e: Element) -> int:
        return int(self.surfaces[ELEMENT_TYPE_TAGS[type(e)]])


@dataclass(frozen=True)
class Recipe:
    """Ordered optical elements (first encountered by the photon first)."""

    elements: tuple[Element, ...]
    phase: float = 0.0
    catalog: ComponentCatalog = field(default_factory=ComponentCatalog)
    numeric_fallback: bool = False

    def cnot_count(self) -> int:
        return sum(1 for e in self.elements if isinstance(e, (SagnacCnot, MzCnot)))


def surface_count(r: Recipe) -> int:
    return sum(r.catalog.surfaces_of(e) for e in r.elements)


def transmission(r: Recipe) -> float:
    """(1 - reflectance)^surfaces: independent per-surface loss model."""
    return (1.0 - r.catalog.reflectance_per_surface) ** surface_count(r)


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------

def _element_to_json_obj(e: Element) -> dict:
    tag = ELEMENT_TYPE_TAGS[type(e)]
    if isinstance(e, PolPhase):
        return {"type": tag, "angle_rad": format_real(e.phi)}
    if isinstance(e, (SagnacCnot, MzCnot)):
        return {"type": tag}
    return {"type": tag, "angle_rad": format_real(e.angle)}


def _element_from_json_obj(obj: dict) -> Element:
    cls = _TAG_TO_TYPE.get(obj.get("type"))
    if cls is None:
        raise ValueError(f"unknown element type {obj.get('type')!r}")
    if cls in (SagnacCnot, MzCnot):
        return cls()
    angle = float(obj["angle_rad"])
    if cls is PolPhase:
        return PolPhase(angle)
    return cls(angle)


def recipe_to_json_obj(r: Recipe) -> dict:
    return {
        "phase": format_real(r.phase),
        "catalog": {
            "reflectance": format_real(r.catalog.reflectance_per_surface),
            "surfaces": {k: int(v) for k, v in sorted(r.catalog.surfaces.items())},
        },
        "elements": [_element_to_json_obj(e) for e in r.elements],
        "numeric_fallback": bool(r.numeric_fallback),
    }


def recipe_to_json(r: Recipe) -> str:
    return json.dumps(recipe_to_json_obj(r), indent=2)


def recipe_from_json_obj(obj: dict) -> Recipe:
    cat = obj.get("catalog", {})
    catalog = ComponentCatalog(
        reflectance_per_surface=float(cat.get("reflectance", 0.01)),
        surfaces=dict(cat.get("surfaces", {})),
    )
    elements = tuple(_element_from_json_obj(o) for o in obj.get("elements", []))
    return Recipe(
        elements=elements,
        phase=float(obj.get("phase", 0.0)),
        catalog=catalog,
        numeric_fallback=bool(obj.get("numeric_fallback", False)),
    )


def recipe_from_json(text: str) -> Recipe:
    return recipe_from_json_obj(json.loads(text))
