# Export point for the interface rules, keeps imports clean in main.py and the
# operator module. New rules are registered in FLUX_REGISTRY.

from .base_flux import InterfaceFlux
from .lax_friedrichs_flux import LaxFriedrichsFlux
from .upwind_flux import UpwindFlux
from .errors import ConfigError

FLUX_REGISTRY = {
    "upwind": UpwindFlux,
}


def available_fluxes() -> list:
    return sorted(FLUX_REGISTRY) + ["<float omega>"]


def make_flux(spec) -> InterfaceFlux:
    """Builds a rule from 'upwind', a registered name, or a numeric omega."""
    if isinstance(spec, InterfaceFlux):
        return spec
    if isinstance(spec, (int, float)):
        return LaxFriedrichsFlux(spec)

    text = str(spec).strip().lower()
    if text in FLUX_REGISTRY:
        return FLUX_REGISTRY[text]()
    try:
        return LaxFriedrichsFlux(float(text))
    except ValueError:
        raise ConfigError(f"omega: expected 'upwind' or a number, got '{spec}'")


__all__ = [
    "InterfaceFlux",
    "LaxFriedrichsFlux",
    "UpwindFlux",
    "make_flux",
    "available_fluxes",
]
