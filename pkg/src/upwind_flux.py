from .base_flux import InterfaceFlux


class UpwindFlux(InterfaceFlux):
    """Takes the trace from the upwind (left) element only; a > 0 is assumed throughout."""

    def __init__(self):
        super().__init__("upwind")

    def weights(self, nu):
        return 1.0, 0.0

    def effective_omega(self, nu):
        if nu <= 0.0:
            raise ValueError("upwind omega = 1/nu needs nu > 0")
        return 1.0 / nu

    @property
    def label(self):
        return "upwind"
