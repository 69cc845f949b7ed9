"""
Run configuration for the command line.

Values come from three places, highest precedence first: explicit flags, an optional
`key = value` config file (read with python-dotenv without touching os.environ), and the
built-in defaults below. Every value is parsed and checked here so that a bad key is
reported by name before any computation starts.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
from dotenv import dotenv_values

from src.basis import parse_kind
from src.errors import ConfigError, InvalidDegree, KindDegreeMismatch
from src.fluxes import make_flux
from src.operators import CFL_REFERENCES
from src.report_writer import FORMATS

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "convergence", "mea", "dispersion", "vn", "spectrum", "stencil", "omega-sweep")
DISPERSION_MODES = ("exact_symbol", "me_truncated", "both")
BOUNDARY_CONDITIONS = ("periodic", "zero_neighbor")

DEFAULTS: Dict[str, Any] = {
    "p": "1",
    "nodes": "chebyshev",
    "elements": "10",
    "cfl": "0.1",
    "cfl_ref": None,
    "omega": "upwind",
    "t_end": "1.0",
    "terms": "13",
    "history_every": "1",
    "mode": "both",
    "points": "256",
    "bc": "periodic",
    "dx": "1.0",
    "cfls": "0.05:3:0.05",
    "omegas": "-2000:2000:10",
    "orders": "2,3,4",
    "bracket": None,
    "format": "csv",
    "output": None,
    "workers": "1",
}

# command-specific defaults that differ from the global table
COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "convergence": {"elements": "10,20,30,40,50"},
    "spectrum": {"cfls": "0.05:2:0.05", "dx": "0.1"},
    "mea": {"cfl": "0.5"},
    "dispersion": {"cfl": "0.5"},
}


def default_cfl_ref(p: int) -> str:
    # a single center node has d_min = 1/2, so P=0 Courant numbers are quoted per element
    return "element" if p == 0 else "min_spacing"


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def load_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path) as f:
            values = dotenv_values(stream=f)
    except OSError as e:
        raise ConfigError(f"config: cannot read '{path}': {e}")

    loaded = {}
    for key, value in values.items():
        name = normalize_key(key)
        if name not in DEFAULTS:
            raise ConfigError(f"{name}: unknown key in config file '{path}'")
        loaded[name] = value
    logger.debug(f"Loaded {len(loaded)} keys from {path}")
    return loaded


def _as_int(key: str, text) -> int:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got '{text}'")
    if not value.is_integer():
        raise ConfigError(f"{key}: expected an integer, got '{text}'")
    return int(value)


def _as_float(key: str, text) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got '{text}'")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got '{text}'")
    return value


def parse_range(key: str, text: str) -> List[float]:
    """'lo:hi:step' -> [lo, lo+step, ...], hi included when it lies within half a step."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected <lo>:<hi>:<step>, got '{text}'")
    lo, hi, step = (_as_float(key, p) for p in parts)
    if step <= 0 or hi < lo:
        raise ConfigError(f"{key}: need step > 0 and hi >= lo, got '{text}'")
    count = int(math.floor((hi - lo) / step + 0.5)) + 1
    return np.round(lo + step * np.arange(count), 12).tolist()


def parse_list(key: str, text: str, convert) -> List:
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ConfigError(f"{key}: expected a comma separated list, got '{text}'")
    return [convert(key, item) for item in items]


def parse_bracket(key: str, text) -> Tuple[float, float] | None:
    if text is None or str(text).strip() == "":
        return None
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected <lo>:<hi>, got '{text}'")
    lo, hi = (_as_float(key, p) for p in parts)
    if not 0 < lo < hi:
        raise ConfigError(f"{key}: expected 0 < lo < hi, got '{text}'")
    return lo, hi


def _choice(key: str, text, choices) -> str:
    value = str(text).strip()
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {', '.join(choices)}, got '{text}'")
    return value


@dataclass
class RunConfig:
    command: str
    p: int
    nodes: str
    elements: List[int]
    cfl: float
    cfl_ref: str
    omega: str | float
    t_end: float
    terms: int
    history_every: int
    mode: str
    points: int
    bc: str
    dx: float
    cfls: List[float]
    omegas: List[float]
    orders: List[int]
    bracket: Tuple[float, float] | None
    format: str
    output: str | None
    workers: int
    sources: Dict[str, str] = field(default_factory=dict, repr=False)

    @property
    def K(self) -> int:
        return self.elements[0]

    def echo(self) -> Dict[str, Any]:
        """Values that determine the computation, for artifact headers."""
        return {
            "command": self.command,
            "p": self.p,
            "nodes": self.nodes,
            "cfl": self.cfl,
            "cfl_ref": self.cfl_ref,
            "omega": self.omega,
        }

    @classmethod
    def resolve(cls, command: str, flags: Dict[str, Any], config_path: str | None = None) -> "RunConfig":
        """Merges flags (None means not given) over the config file over defaults, then validates."""
        if command not in COMMANDS:
            raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got '{command}'")

        raw = dict(DEFAULTS)
        raw.update(COMMAND_DEFAULTS.get(command, {}))
        sources = {key: "default" for key in raw}

        if config_path:
            for key, value in load_config_file(config_path).items():
                raw[key] = value
                sources[key] = "file"

        for key, value in flags.items():
            name = normalize_key(key)
            if name in DEFAULTS and value is not None:
                raw[name] = value
                sources[name] = "flag"

        config = cls.from_raw(command, raw)
        config.sources = sources
        return config

    @classmethod
    def from_raw(cls, command: str, raw: Dict[str, Any]) -> "RunConfig":
        p = _as_int("p", raw["p"])
        if p < 0:
            raise InvalidDegree(f"p: degree must be >= 0, got {p}")

        nodes = str(raw["nodes"]).strip().lower()
        kind, _ = parse_kind(nodes)
        if kind == "alpha" and p != 1:
            raise KindDegreeMismatch(f"nodes: alpha nodes exist only for p=1, got p={p}")

        elements = parse_list("elements", raw["elements"], _as_int)
        if any(k < 1 for k in elements):
            raise ConfigError(f"elements: every element count must be >= 1, got '{raw['elements']}'")
        if command == "convergence" and len(set(elements)) < 2:
            raise ConfigError("elements: a convergence study needs at least two distinct element counts")
        if command == "simulate" and len(elements) != 1:
            raise ConfigError(f"elements: simulate takes a single element count, got '{raw['elements']}'")

        cfl = _as_float("cfl", raw["cfl"])
        if cfl <= 0:
            raise ConfigError(f"cfl: must be > 0, got {cfl}")

        omega_text = str(raw["omega"]).strip().lower()
        make_flux(omega_text)
        omega = omega_text if omega_text == "upwind" else _as_float("omega", omega_text)

        t_end = _as_float("t_end", raw["t_end"])
        if t_end < 0:
            raise ConfigError(f"t_end: must be >= 0, got {t_end}")

        terms = _as_int("terms", raw["terms"])
        if terms < 2:
            raise ConfigError(f"terms: need at least 2, got {terms}")

        history_every = _as_int("history_every", raw["history_every"])
        if history_every < 1:
            raise ConfigError(f"history_every: must be >= 1, got {history_every}")

        points = _as_int("points", raw["points"])
        if points < 1:
            raise ConfigError(f"points: must be >= 1, got {points}")

        dx = _as_float("dx", raw["dx"])
        if dx <= 0:
            raise ConfigError(f"dx: must be > 0, got {dx}")

        cfls = parse_range("cfls", raw["cfls"])
        if cfls[0] <= 0:
            raise ConfigError(f"cfls: every cfl must be > 0, got '{raw['cfls']}'")

        orders = parse_list("orders", raw["orders"], _as_int)
        if any(m < 1 for m in orders):
            raise ConfigError(f"orders: derivative orders must be >= 1, got '{raw['orders']}'")

        workers = _as_int("workers", raw["workers"])
        if workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {workers}")

        return cls(
            command=command,
            p=p,
            nodes=nodes,
            elements=elements,
            cfl=cfl,
            cfl_ref=_choice("cfl_ref", raw["cfl_ref"] or default_cfl_ref(p), CFL_REFERENCES),
            omega=omega,
            t_end=t_end,
            terms=terms,
            history_every=history_every,
            mode=_choice("mode", raw["mode"], DISPERSION_MODES),
            points=points,
            bc=_choice("bc", raw["bc"], BOUNDARY_CONDITIONS),
            dx=dx,
            cfls=cfls,
            omegas=parse_range("omegas", raw["omegas"]),
            orders=orders,
            bracket=parse_bracket("bracket", raw["bracket"]),
            format=_choice("format", raw["format"], FORMATS),
            output=raw["output"] or None,
            workers=workers,
        )
