import math

from .base_flux import InterfaceFlux
from .errors import ConfigError


class LaxFriedrichsFlux(InterfaceFlux):
    """
    Lax-Friedrichs interface with an adjustable flux-difference factor omega:
    w_l = (1 + omega*nu)/2, w_r = (1 - omega*nu)/2.
    omega = 0 is the plain average; omega = 1/nu is the upwind value.
    """

    def __init__(self, omega: float):
        super().__init__("lax_friedrichs")
        omega = float(omega)
        if not math.isfinite(omega):
            raise ConfigError(f"omega: expected a finite number, got {omega}")
        self.omega = omega

    def weights(self, nu):
        shift = self.omega * nu
        return 0.5 * (1.0 + shift), 0.5 * (1.0 - shift)

    def effective_omega(self, nu):
        return self.omega

    @property
    def label(self):
        return f"{self.omega:.17g}"
