from abc import ABC, abstractmethod


class InterfaceFlux(ABC):
    """
    Abstract Base Class for the rule coupling two element traces at an interface.
    A rule turns the left trace Q^l and right trace Q^r into one constraint value
    G = w_l * Q^l + w_r * Q^r, with w_l + w_r = 1.
    """

    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def weights(self, nu: float) -> tuple[float, float]:
        """
        Returns (w_l, w_r) for the element-width Courant number nu = a*dt/dx.
        Must be implemented by all derived classes.
        """
        pass

    @abstractmethod
    def effective_omega(self, nu: float) -> float:
        """The omega of the equivalent Lax-Friedrichs rule at this nu."""
        pass

    @property
    def label(self) -> str:
        return self.name

    def __repr__(self):
        return f"{self.__class__.__name__}({self.label})"
