"""Target materials for the stopping-power engine.

Supported targets are silicon, germanium, and Si(x)Ge(1-x) alloys. An alloy
is described by its silicon mole fraction; elemental mass fractions follow
from the atomic masses (Bragg additivity operates on mass fractions) and the
bulk density interpolates linearly in mole fraction between the elemental
densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError

#: Elemental constants used by the stopping model: atomic number Z, standard
#: atomic weight A (g/mol), mean excitation energy I (eV), and bulk density
#: (g/cm^3).
ELEMENTS = {
    "si": {"z": 14, "a_g_mol": 28.0855, "i_ev": 173.0, "density_g_cm3": 2.329},
    "ge": {"z": 32, "a_g_mol": 72.63, "i_ev": 350.0, "density_g_cm3": 5.323},
}


@dataclass(frozen=True)
class ElementFraction:
    """One elemental component of a target with its mass fraction."""

    symbol: str
    z: int
    a_g_mol: float
    i_ev: float
    mass_fraction: float


@dataclass(frozen=True)
class Material:
    """A silicon-germanium target.

    Attributes
    ----------
    si_mole_fraction:
        Silicon mole fraction x of Si(x)Ge(1-x); 1.0 is pure silicon.
    density_g_cm3:
        Bulk density. Defaults to a linear interpolation in mole fraction
        between the elemental densities; may be overridden.
    components:
        Elemental composition with mass fractions summing to one.
    """

    si_mole_fraction: float
    density_g_cm3: float
    components: tuple[ElementFraction, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 0.0 <= self.si_mole_fraction <= 1.0:
            raise ValidationError(
                f"si_mole_fraction must be in [0, 1], got {self.si_mole_fraction}"
            )
        if self.density_g_cm3 <= 0.0:
            raise ValidationError(
                f"density_g_cm3 must be positive, got {self.density_g_cm3}"
            )
        total = sum(c.mass_fraction for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(
                f"component mass fractions must sum to 1, got {total!r}"
            )

    @property
    def label(self) -> str:
        x = self.si_mole_fraction
        if x == 1.0:
            return "si"
        if x == 0.0:
            return "ge"
        return f"sige:{x:g}"


def silicon_germanium(si_mole_fraction: float,
                      density_g_cm3: float | None = None) -> Material:
    """Build a Si(x)Ge(1-x) target.

    Parameters
    ----------
    si_mole_fraction:
        Silicon mole fraction x in [0, 1].
    density_g_cm3:
        Optional density override; the default interpolates linearly in mole
        fraction between the silicon and germanium bulk densities.

    Returns
    -------
    Material
        Target with elemental mass fractions w_Si = x*A_Si / (x*A_Si +
        (1-x)*A_Ge) and w_Ge = 1 - w_Si.
    """
    x = float(si_mole_fraction)
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"si_mole_fraction must be in [0, 1], got {x}")
    si, ge = ELEMENTS["si"], ELEMENTS["ge"]
    denom = x * si["a_g_mol"] + (1.0 - x) * ge["a_g_mol"]
    w_si = x * si["a_g_mol"] / denom
    if density_g_cm3 is None:
        density_g_cm3 = x * si["density_g_cm3"] + (1.0 - x) * ge["density_g_cm3"]

    components = []
    if w_si > 0.0:
        components.append(ElementFraction("si", si["z"], si["a_g_mol"],
                                          si["i_ev"], w_si))
    if w_si < 1.0:
        components.append(ElementFraction("ge", ge["z"], ge["a_g_mol"],
                                          ge["i_ev"], 1.0 - w_si))
    return Material(si_mole_fraction=x, density_g_cm3=float(density_g_cm3),
                    components=tuple(components))


SILICON = silicon_germanium(1.0)
GERMANIUM = silicon_germanium(0.0)


def parse_material(token: str) -> Material:
    """Parse a CLI-style material string: ``si``, ``ge``, or ``sige:<x>``."""
    text = token.strip().lower()
    if text == "si":
        return SILICON
    if text == "ge":
        return GERMANIUM
    if text.startswith("sige:"):
        try:
            x = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ValidationError(f"bad mole fraction in {token!r}") from exc
        return silicon_germanium(x)
    raise ValidationError(
        f"unknown material {token!r}; expected si, ge, or sige:<x>"
    )
