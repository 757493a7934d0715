"""TOML run configuration.

Example::

    schema_version = 1

    [model]
    kind = "expressions"            # constant | expressions | phenomenological
    gamma1 = "2"
    gamma2 = "2"
    gamma3 = "-tanh(t)"

    [time]
    t_max = 10.0
    steps = 10000

Every other section is optional; see ``DEFAULTS``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import expr
from .conditions import Commutative, DynamicsClass, General, Unital
from .rates import (Constant, Expressions, Phenomenological, PhenomParams, RateModel,
                    thermal_occupation)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class Sweep:
    gamma_prime_range: Tuple[float, float] = (-5.0, 5.0)
    gamma3_range: Tuple[float, float] = (-5.0, 5.0)
    resolution: int = 201
    kappa: float = 0.5
    overlay: bool = True


@dataclass(frozen=True)
class RunConfig:
    model: Optional[RateModel] = None
    class_override: Optional[DynamicsClass] = None
    t_max: float = 10.0
    steps: int = 10000
    coherence_alpha0: complex = 0.45 + 0j
    diagonal_p1: Optional[float] = None
    eps_sign: float = 1e-9
    eps_pred: float = 1e-12
    cp_tol: float = 1e-9
    directory: str = "out"
    layout: str = "long"
    sweep: Sweep = field(default_factory=Sweep)
    scale_G: float = 1.0
    strict_phase: bool = False


_SECTIONS = {
    "model": None,  # checked per kind
    "time": {"t_max", "steps"},
    "probes": {"coherence_alpha0", "diagonal_p1"},
    "tolerances": {"eps_sign", "eps_pred", "cp_tol"},
    "outputs": {"directory", "layout"},
    "sweep": {"gamma_prime_range", "gamma3_range", "resolution", "kappa", "overlay"},
    "debug": {"scale_G", "strict_phase"},
}

_MODEL_KEYS = {
    "constant": {"gamma1", "gamma2", "gamma3", "omega"},
    "expressions": {"gamma1", "gamma2", "gamma3", "omega"},
    "phenomenological": {"R", "N", "s", "nu", "omega_c", "kT", "omega0", "coth_scale",
                         "divide_by_omega"},
}
_COMMON_MODEL_KEYS = {"kind", "class_override", "kappa", "relabeled"}


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("--config", f"not valid TOML: {exc}") from None
    return from_dict(doc)


def loads(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("--config", f"not valid TOML: {exc}") from None
    return from_dict(doc)


def _number(sec, key, value, *, positive=False, integer=False, minimum=None):
    name = f"{sec}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and not value > 0:
        raise ConfigError(name, "must be positive")
    if minimum is not None and value < minimum:
        raise ConfigError(name, f"must be at least {minimum}")
    return value


def _range(sec, key, value):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{sec}.{key}", "expected a two-element list [lo, hi]")
    lo = _number(sec, key, value[0])
    hi = _number(sec, key, value[1])
    if not lo < hi:
        raise ConfigError(f"{sec}.{key}", "needs lo < hi")
    return (float(lo), float(hi))


def _bool(sec, key, value):
    if not isinstance(value, bool):
        raise ConfigError(f"{sec}.{key}", f"expected true or false, got {value!r}")
    return value


def _check_keys(sec, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(sec, "expected a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{sec}.{key}", "unknown key")


def from_dict(doc: Dict[str, Any]) -> RunConfig:
    version = doc.get("schema_version")
    if version is None:
        raise ConfigError("schema_version", "missing")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}, expected {SCHEMA_VERSION}")
    for key in doc:
        if key != "schema_version" and key not in _SECTIONS:
            raise ConfigError(key, "unknown section")
    kw: Dict[str, Any] = {}

    if "model" in doc:
        kw["model"], kw["class_override"] = _model(doc["model"])

    t = doc.get("time", {})
    _check_keys("time", t, _SECTIONS["time"])
    if "t_max" in t:
        kw["t_max"] = float(_number("time", "t_max", t["t_max"], positive=True))
    if "steps" in t:
        kw["steps"] = _number("time", "steps", t["steps"], integer=True, minimum=10)

    p = doc.get("probes", {})
    _check_keys("probes", p, _SECTIONS["probes"])
    if "coherence_alpha0" in p:
        a = p["coherence_alpha0"]
        if isinstance(a, list):
            if len(a) != 2:
                raise ConfigError("probes.coherence_alpha0", "expected a number or [re, im]")
            a = complex(_number("probes", "coherence_alpha0", a[0]),
                        _number("probes", "coherence_alpha0", a[1]))
        else:
            a = complex(_number("probes", "coherence_alpha0", a))
        if abs(a) == 0.0 or abs(a) > 0.5:
            raise ConfigError("probes.coherence_alpha0", "modulus must lie in (0, 0.5]")
        kw["coherence_alpha0"] = a
    if "diagonal_p1" in p:
        v = _number("probes", "diagonal_p1", p["diagonal_p1"])
        if not 0.0 <= v <= 1.0:
            raise ConfigError("probes.diagonal_p1", "must lie in [0, 1]")
        kw["diagonal_p1"] = float(v)

    tol = doc.get("tolerances", {})
    _check_keys("tolerances", tol, _SECTIONS["tolerances"])
    for key in ("eps_sign", "eps_pred", "cp_tol"):
        if key in tol:
            kw[key] = float(_number("tolerances", key, tol[key], positive=True))

    out = doc.get("outputs", {})
    _check_keys("outputs", out, _SECTIONS["outputs"])
    if "directory" in out:
        if not isinstance(out["directory"], str) or not out["directory"]:
            raise ConfigError("outputs.directory", "expected a non-empty string")
        kw["directory"] = out["directory"]
    if "layout" in out:
        if out["layout"] not in ("long", "wide"):
            raise ConfigError("outputs.layout", "expected 'long' or 'wide'")
        kw["layout"] = out["layout"]

    sw = doc.get("sweep", {})
    _check_keys("sweep", sw, _SECTIONS["sweep"])
    skw = {}
    for key in ("gamma_prime_range", "gamma3_range"):
        if key in sw:
            skw[key] = _range("sweep", key, sw[key])
    if "resolution" in sw:
        skw["resolution"] = _number("sweep", "resolution", sw["resolution"], integer=True, minimum=2)
    if "kappa" in sw:
        k = _number("sweep", "kappa", sw["kappa"])
        if not 0.0 <= k <= 1.0:
            raise ConfigError("sweep.kappa", "must lie in [0, 1]")
        skw["kappa"] = float(k)
    if "overlay" in sw:
        skw["overlay"] = _bool("sweep", "overlay", sw["overlay"])
    kw["sweep"] = Sweep(**skw)

    dbg = doc.get("debug", {})
    _check_keys("debug", dbg, _SECTIONS["debug"])
    if "scale_G" in dbg:
        kw["scale_G"] = float(_number("debug", "scale_G", dbg["scale_G"]))
    if "strict_phase" in dbg:
        kw["strict_phase"] = _bool("debug", "strict_phase", dbg["strict_phase"])
    return RunConfig(**kw)


def _model(sec):
    if not isinstance(sec, dict):
        raise ConfigError("model", "expected a table")
    kind = sec.get("kind")
    if kind not in _MODEL_KEYS:
        raise ConfigError("model.kind", f"expected one of {sorted(_MODEL_KEYS)}, got {kind!r}")
    _check_keys("model", sec, _MODEL_KEYS[kind] | _COMMON_MODEL_KEYS)

    if kind == "constant":
        vals = {}
        for key in ("gamma1", "gamma2", "gamma3", "omega"):
            if key not in sec and key != "omega":
                raise ConfigError(f"model.{key}", "missing")
            vals[key] = float(_number("model", key, sec.get(key, 0.0)))
        model = Constant(**vals)
    elif kind == "expressions":
        vals = {}
        for key in ("gamma1", "gamma2", "gamma3", "omega"):
            if key not in sec and key != "omega":
                raise ConfigError(f"model.{key}", "missing")
            text = sec.get(key, "0")
            if isinstance(text, (int, float)) and not isinstance(text, bool):
                text = repr(float(text))
            if not isinstance(text, str):
                raise ConfigError(f"model.{key}", "expected an expression string")
            try:
                vals[key] = expr.parse(text)
            except expr.ParseError as exc:
                raise ConfigError(f"model.{key}", str(exc)) from None
        model = Expressions(**vals)
    else:
        pk = {}
        for key in ("R", "s"):
            if key not in sec:
                raise ConfigError(f"model.{key}", "missing")
        for key in ("R", "N", "s", "nu", "omega_c", "kT", "omega0", "coth_scale"):
            if key in sec:
                pk[key] = float(_number("model", key, sec[key]))
        if "divide_by_omega" in sec:
            pk["divide_by_omega"] = _bool("model", "divide_by_omega", sec["divide_by_omega"])
        if "N" not in pk:
            pk["N"] = thermal_occupation(pk.get("omega0", 0.0), pk.get("kT", 0.0))
        try:
            model = Phenomenological(PhenomParams(**pk))
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None

    override = sec.get("class_override")
    cls = None
    if override is not None:
        if override == "general":
            cls = General()
        elif override == "unital":
            cls = Unital()
        elif override == "commutative":
            if "kappa" not in sec:
                raise ConfigError("model.kappa", "required when class_override = 'commutative'")
            k = _number("model", "kappa", sec["kappa"])
            if not 0.0 <= k <= 1.0:
                raise ConfigError("model.kappa", "must lie in [0, 1]")
            cls = Commutative(float(k), _bool("model", "relabeled", sec.get("relabeled", False)))
        else:
            raise ConfigError("model.class_override",
                              "expected 'general', 'commutative' or 'unital'")
    return model, cls


__all__ = ["RunConfig", "Sweep", "ConfigError", "load", "loads", "from_dict", "SCHEMA_VERSION"]
