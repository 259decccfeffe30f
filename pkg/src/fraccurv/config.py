"""Configuration documents: schema validation, system construction, hashing."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import jsonschema

from .errors import InvalidSpecError
from .gaps import Window
from .symbolic import Affine, IfsSpec, Lattice, Nonlattice

_NUMBER = {"oneOf": [{"type": "number"}, {"type": "string"}]}

_SYSTEM = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "domain": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
        "maps": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "properties": {
                    "affine": {
                        "type": "object",
                        "properties": {"ratio": _NUMBER, "offset": _NUMBER},
                        "required": ["ratio", "offset"],
                        "additionalProperties": False,
                    }
                },
                "required": ["affine"],
                "additionalProperties": False,
            },
        },
        "lattice": {
            "type": "object",
            "properties": {"type": {"enum": ["lattice", "nonlattice"]}, "a": _NUMBER},
            "required": ["type"],
            "additionalProperties": False,
        },
        "image": {
            "type": "object",
            "properties": {
                "level": {"type": "integer", "minimum": 0},
                "base": {"$ref": "#/definitions/system"},
            },
            "required": ["level"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {"system": _SYSTEM},
    "type": "object",
    "properties": {
        "system": {"$ref": "#/definitions/system"},
        "precision": {"enum": ["float", "rational"]},
        "budgets": {
            "type": "object",
            "properties": {"max_gaps": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "grids": {
            "type": "object",
            "properties": {
                "eps_min": {"type": "number", "exclusiveMinimum": 0},
                "eps_max": {"type": "number", "exclusiveMinimum": 0},
                "points_per_decade": {"type": "integer", "minimum": 1},
                "T": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "cutoff": {"type": "number", "exclusiveMinimum": 0},
                "depth": {"type": "integer", "minimum": 1},
                "t_points": {"type": "integer", "minimum": 1},
                "predictor_T": {"type": "array", "items": {"type": "number"}, "minItems": 2,
                                "maxItems": 2},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "windows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "intervals": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                    },
                    "clearance": {"type": "number", "exclusiveMinimum": 0},
                },
                "required": ["intervals", "clearance"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["system"],
    "additionalProperties": False,
}


class ConfigError(InvalidSpecError):
    """The document is not schema-valid or describes an invalid system."""


@dataclass
class ConfigDocument:
    """A validated configuration with its canonical hash."""

    raw: dict
    system: IfsSpec
    precision: str = "float"
    budgets: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    windows: list = field(default_factory=list)
    image_level: int | None = None

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _num(v, exact: bool):
    if isinstance(v, str) and v.strip().lstrip("+-").lower() in ("inf", "infinity"):
        return -math.inf if v.strip().startswith("-") else math.inf
    try:
        q = Fraction(v) if isinstance(v, str) else Fraction(repr(v)) if isinstance(v, float) else Fraction(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {v!r}") from exc
    return q if exact else float(q)


def _build_system(spec: dict, exact: bool):
    """Returns ``(IfsSpec, image level or None)``."""
    from . import systems

    image = spec.get("image")
    if image is not None and "base" in image:
        if len(spec) != 1:
            raise ConfigError("an image spec with an explicit base takes no other keys")
        base, _ = _build_system(image["base"], False)
        return _image(base, image["level"]), image["level"]
    if "name" in spec:
        if spec["name"] not in systems.SHIPPED or set(spec) - {"name", "image"}:
            raise ConfigError(f"unknown shipped system {spec['name']!r}")
        ifs = systems.SHIPPED[spec["name"]](exact and image is None)
    else:
        if "domain" not in spec or "maps" not in spec:
            raise ConfigError("a system needs 'domain' and 'maps' (or a shipped 'name')")
        ex = exact and image is None
        maps = tuple(Affine(_num(m["affine"]["ratio"], ex), _num(m["affine"]["offset"], ex))
                     for m in spec["maps"])
        lat = spec.get("lattice")
        lattice = None
        if lat is not None:
            if lat["type"] == "lattice":
                if "a" not in lat:
                    raise ConfigError("a lattice declaration needs the period 'a'")
                lattice = Lattice(float(_num(lat["a"], False)))
            else:
                lattice = Nonlattice()
        ifs = IfsSpec(tuple(_num(v, ex) for v in spec["domain"]), maps, lattice=lattice)
    if image is not None:
        return _image(ifs, image["level"]), image["level"]
    return ifs, None


def _image(base: IfsSpec, level: int) -> IfsSpec:
    from .images import GnMap
    return GnMap(base, level).induced_system()


def load_config(doc: dict) -> ConfigDocument:
    """Validate ``doc`` against :data:`SCHEMA` and build the system it describes."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    precision = doc.get("precision", "float")
    try:
        ifs, level = _build_system(doc["system"], precision == "rational")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    windows = []
    for w in doc.get("windows", []):
        ivs = tuple((_num(a, False), _num(b, False)) for a, b in w["intervals"])
        if any(not a <= b for a, b in ivs):
            raise ConfigError("window intervals need left <= right")
        windows.append((Window(ivs), float(w["clearance"])))
    return ConfigDocument(doc, ifs, precision, dict(doc.get("budgets", {})),
                          dict(doc.get("grids", {})), windows, level)


def read_config(path: str) -> ConfigDocument:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return load_config(doc)
