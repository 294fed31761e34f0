"""Run configuration: a sectioned key-value file parsed with configparser.

Every section maps to a dataclass; keys are its field names. Values are
converted by field type (``int`` accepts ``0x`` literals). Unknown sections
or keys and unconvertible values raise :class:`ConfigError` carrying the
file line of the offending entry. See ``configs/verify-all.cfg`` for the
documented schema with defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
import re
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import OmegaIndicatrix, Point2D
from .laurent import parse_polynomial
from .testfunctions import BumpFunction

CONFIG_DIR_ENV = "ISINGOBS_CONFIG_DIR"
DEFAULT_CONFIG = "verify-all.cfg"
DEFAULT_SEED = 0x15151

SUITES = (
    "car",
    "pfaffian",
    "symmetry",
    "periodicity",
    "recursion",
    "closability",
    "qomega",
    "locality",
    "reeh-schlieder",
    "assembly",
)


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None, key: str | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        if key:
            where += f" [{key}]"
        super().__init__(f"{where} {msg}".strip())
        self.line = line
        self.key = key


# ------------------------------------------------------------ value parsers


def parse_omega(text: str) -> OmegaIndicatrix:
    """``log(ell)`` or ``power(alpha)``."""
    m = re.fullmatch(r"\s*(log|power)\(\s*([^)]+)\)\s*", text)
    if not m:
        raise ValueError(f"bad omega {text!r}; expected log(ell) or power(alpha)")
    kind, val = m.group(1), float(m.group(2))
    return OmegaIndicatrix.log(val) if kind == "log" else OmegaIndicatrix.power(val)


def parse_bumps(text: str) -> list[BumpFunction]:
    """``t, x1, radius; t, x1, radius; ...``; an empty string is an empty list."""
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        parts = [float(x) for x in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError(f"bump {chunk!r} needs t, x1, radius")
        out.append(BumpFunction(Point2D(parts[0], parts[1]), parts[2]))
    return out


def parse_list(text: str, conv=float) -> list:
    return [conv(x) for x in re.split(r"[,\s]+", text.strip()) if x]


# ------------------------------------------------------------------ sections


@dataclass
class RunSection:
    seed: int = DEFAULT_SEED
    out: str = "reports"
    suites: str = " ".join(SUITES)

    def suite_list(self) -> list[str]:
        return [s for s in re.split(r"[,\s]+", self.suites.strip()) if s]


@dataclass
class ObservableSection:
    """The even k = 1 observable used by the operator suites."""

    k: int = 1
    poly: str = "1:"
    g_center: str = "0.0, 0.0"
    g_radius: float = 0.3
    r: float = 0.5

    def bump(self) -> BumpFunction:
        t, x1 = parse_list(self.g_center)
        return BumpFunction(Point2D(t, x1), self.g_radius)


@dataclass
class TowerSection:
    s: int = 0
    g_center: str = "0.0, 0.0"
    g_radius: float = 0.3
    r: float = 0.5
    omega: str = "power(0.4)"

    def bump(self) -> BumpFunction:
        t, x1 = parse_list(self.g_center)
        return BumpFunction(Point2D(t, x1), self.g_radius)


@dataclass
class CarSection:
    N: int = 32
    theta_max: float = 4.0
    K: int = 4
    tol: float = 1e-12


@dataclass
class PfaffianSection:
    sizes: str = "2, 4, 6"
    samples: int = 20
    tol: float = 1e-10


@dataclass
class SymmetrySection:
    samples: int = 100
    max_even: int = 6
    max_odd: int = 5
    tol: float = 1e-10
    strip: float = 1.0


@dataclass
class RecursionSection:
    samples: int = 10
    radius: float = 0.1
    points: int = 64
    tol3: float = 1e-6
    tol5: float = 1e-5
    even_tol: float = 1e-12


@dataclass
class ClosabilitySection:
    n: int = 0
    M_max: int = 7
    nodes: int = 16
    theta_max: float = 8.0
    control_omega: str = "log(1)"
    even_omega: str = "log(4)"
    even_nodes: str = "48, 96"
    even_theta_max: float = 6.0
    refine_tol: float = 0.02


@dataclass
class QomegaSection:
    sizes: str = "16, 32, 64"
    k: int = 3
    theta_max: float = 4.0
    omega: str = "log(6)"
    variation: float = 0.10


@dataclass
class LocalitySection:
    N: int = 24
    theta_max: float = 3.0
    k_cap: int = 3
    tau: float = 1e-3
    rho_min: float = 10.0
    margin: float = 0.1
    omega: str = "log(6)"
    left: str = "0.0, -1.5, 0.4; 0.3, -1.8, 0.4"
    right: str = "0.0, 1.5, 0.4; -0.3, 1.8, 0.4"
    controls: str = "0.0, 0.0, 0.4"
    arbiter: bool = True
    flipped_metric_control: bool = True


@dataclass
class ReehSchliederSection:
    N: int = 6
    K: int = 2
    theta_max: float = 4.0
    even: int = 50
    odd: int = 20
    threshold: float = 1e-12
    r: float = 0.5


@dataclass
class AssemblySection:
    N: int = 4
    K: int = 3
    theta_max: float = 3.0
    tol: float = 1e-12
    odd_N: int = 3


SECTIONS = {
    "run": RunSection,
    "observable": ObservableSection,
    "tower": TowerSection,
    "car": CarSection,
    "pfaffian": PfaffianSection,
    "symmetry": SymmetrySection,
    "periodicity": SymmetrySection,
    "recursion": RecursionSection,
    "closability": ClosabilitySection,
    "qomega": QomegaSection,
    "locality": LocalitySection,
    "reeh-schlieder": ReehSchliederSection,
    "assembly": AssemblySection,
}

# string fields whose syntax is checked at load time
_CHECKERS = {
    ("observable", "poly"): lambda v: parse_polynomial(v),
    ("tower", "omega"): parse_omega,
    ("closability", "control_omega"): parse_omega,
    ("closability", "even_omega"): parse_omega,
    ("qomega", "omega"): parse_omega,
    ("locality", "omega"): parse_omega,
    ("locality", "left"): parse_bumps,
    ("locality", "right"): parse_bumps,
    ("locality", "controls"): parse_bumps,
    ("pfaffian", "sizes"): lambda v: parse_list(v, int),
    ("qomega", "sizes"): lambda v: parse_list(v, int),
    ("closability", "even_nodes"): lambda v: parse_list(v, int),
    ("observable", "g_center"): lambda v: _pair(v),
    ("tower", "g_center"): lambda v: _pair(v),
}

_TOLERANCE_KEYS = {"tol", "tol3", "tol5", "even_tol", "tau", "threshold", "refine_tol", "variation"}


def _pair(v):
    xs = parse_list(v)
    if len(xs) != 2:
        raise ValueError("expected two numbers")
    return xs


def _convert(tp, raw: str):
    if tp is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tp is int:
        return int(raw.strip(), 0)
    if tp is float:
        return float(raw)
    return raw.strip()


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)
    source: str = "<defaults>"
    text: str = ""

    def __getitem__(self, name: str):
        return self.sections[name]

    @property
    def run(self) -> RunSection:
        return self.sections["run"]

    def canonical(self) -> dict:
        return {name: dataclasses.asdict(sec) for name, sec in sorted(self.sections.items())}

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def default_config() -> RunConfig:
    return RunConfig({name: cls() for name, cls in SECTIONS.items()})


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return no
    return None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys are case sensitive (N vs n)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"syntax error: {exc.message if hasattr(exc, 'message') else exc}",
                          line=line, path=source) from exc
    cfg = default_config()
    cfg.source, cfg.text = source, text
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]", _line_of(text, name, None), path=source)
        cls = SECTIONS[name]
        hints = typing.get_type_hints(cls)
        values = {}
        for key, raw in cp.items(name):
            line = _line_of(text, name, key)
            if key not in hints:
                raise ConfigError(f"unknown key {key!r} in section [{name}]", line, f"{name}.{key}", source)
            try:
                val = _convert(hints[key], raw)
                if (name, key) in _CHECKERS:
                    _CHECKERS[(name, key)](val)
            except ValueError as exc:
                raise ConfigError(f"bad value {raw!r}: {exc}", line, f"{name}.{key}", source) from exc
            if key in _TOLERANCE_KEYS and not val > 0:
                raise ConfigError(f"tolerance must be positive, got {raw!r}", line, f"{name}.{key}", source)
            values[key] = val
        cfg.sections[name] = cls(**values)
    unknown = [s for s in cfg.run.suite_list() if s not in SUITES and s != "all"]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; known: {list(SUITES)}",
                          _line_of(text, "run", "suites"), "run.suites", source)
    return cfg


def resolve_config_path(name: str | None) -> Path | None:
    """An existing path as given, else a file in ``$ISINGOBS_CONFIG_DIR``, else a packaged config."""
    name = name or DEFAULT_CONFIG
    p = Path(name)
    if p.exists():
        return p
    env = os.environ.get(CONFIG_DIR_ENV)
    if env and (Path(env) / name).exists():
        return Path(env) / name
    packaged = resources.files("isingobs") / "configs" / name
    if packaged.is_file():
        return Path(str(packaged))
    return None


def load_config(name: str | None = None) -> RunConfig:
    path = resolve_config_path(name)
    if path is None:
        raise ConfigError(f"config {name!r} not found (also looked in ${CONFIG_DIR_ENV} and packaged configs)")
    return parse_config(path.read_text(), str(path))
