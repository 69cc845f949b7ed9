from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.errors import AlphaOutOfRange, ConfigError, InvalidDegree, KindDegreeMismatch

NODE_KINDS = ("chebyshev", "uniform", "alpha")


@dataclass(frozen=True)
class NodeSet:
    """
    Nodes of one element in the centered coordinate chi in [-1/2, 1/2].
    d_min is the smallest gap between neighbouring nodes or between a node and an element edge.
    """
    degree: int
    kind: str
    nodes: np.ndarray
    d_min: float
    alpha: float | None = None

    @property
    def size(self) -> int:
        return self.degree + 1

    @property
    def label(self) -> str:
        if self.kind == "alpha":
            return f"alpha:{self.alpha:g}"
        return self.kind


def parse_kind(text: str) -> Tuple[str, float | None]:
    """Accepts 'chebyshev', 'uniform' or 'alpha:<float>'."""
    text = text.strip().lower()
    if text in ("chebyshev", "uniform"):
        return text, None
    if text.startswith("alpha:"):
        try:
            return "alpha", float(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"nodes: cannot read alpha from '{text}'")
    raise ConfigError(f"nodes: unknown node family '{text}' (expected chebyshev, uniform or alpha:<float>)")


def min_spacing(nodes: np.ndarray) -> float:
    edges = [nodes[0] + 0.5, 0.5 - nodes[-1]]
    gaps = np.diff(nodes)
    return float(min(np.min(edges), np.min(gaps) if gaps.size else np.inf))


def make_nodes(P: int, kind: str = "chebyshev", alpha: float | None = None) -> NodeSet:
    if kind.startswith("alpha:"):
        kind, alpha = parse_kind(kind)
    if P < 0:
        raise InvalidDegree(f"p: degree must be >= 0, got {P}")
    if kind not in NODE_KINDS:
        raise ConfigError(f"nodes: unknown node family '{kind}'")

    if kind == "alpha":
        if P != 1:
            raise KindDegreeMismatch(f"nodes: alpha nodes exist only for p=1, got p={P}")
        if alpha is None or not 0.0 < alpha < 0.5:
            raise AlphaOutOfRange(f"nodes: alpha must lie in (0, 1/2), got {alpha}")
        nodes = np.array([-alpha, alpha])
    elif P == 0:
        nodes = np.zeros(1)
    elif kind == "chebyshev":
        m = np.arange(P + 1)
        nodes = -0.5 * np.cos((m + 0.5) * np.pi / (P + 1))
    else:
        m = np.arange(P + 1)
        nodes = (m + 1) / (P + 2) - 0.5

    # exact mirror symmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    return NodeSet(degree=P, kind=kind, nodes=nodes, d_min=min_spacing(nodes), alpha=alpha)


def vandermonde(points, width: int) -> np.ndarray:
    """entry[r][j] = points[r]**j for j = 0..width-1."""
    if width < 1:
        raise ValueError("vandermonde width must be >= 1")
    return np.vander(np.asarray(points, dtype=float), width, increasing=True)


def eval_monomial(coeffs, chi):
    """Horner evaluation of sum_m coeffs[m] * chi**m."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        raise ValueError("eval_monomial needs at least one coefficient")
    return np.polynomial.polynomial.polyval(chi, coeffs)


def monomial_row(chi: float, width: int) -> np.ndarray:
    return chi ** np.arange(width)
