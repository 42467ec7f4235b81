"""Experiment configuration: one TOML file with nested sections, strict key
checking (unknown keys are errors in strict mode), explicit length units
(everything is expressed in domain units, declared in the file)."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .grids import DomainSpec
from .pinning import (DilutedPinningSpec, PeriodicPinningSpec, UnitInclusion,
                      build_diluted, build_periodic)
from .scalar import SolverParams


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "schema": int,
    "units": str,
    "domain": {"shape": str, "radius": float, "width": float, "height": float,
               "center": list, "h": float, "margin": float},
    "pinning": {"kind": str, "b": float, "lambda": float, "delta": float,
                "stages": list, "degree": int, "eta": float,
                "inclusion": {"kind": str, "r0": float, "vertices": list}},
    "experiment": {"kind": str, "d": int, "eps": list, "seed": int,
                   "restarts": int, "detect_threshold": float},
    "solver": {"tol": float, "max_iter": int, "damping": float,
               "continuation": list, "min_tol": float, "min_max_iter": int},
    "ring": {"center": list, "R": float, "r": float, "degree": int,
             "mode": str, "weight": str},
    "perforated": {"points": list, "rho": float, "mode": str, "weight": str,
                   "use_outer": bool},
    "renorm": {"points": list, "rho_pair": list},
    "homogenize": {"cells": int, "lambdas": list},
}


def _check_keys(data, schema, path, strict, warnings):
    for key, val in data.items():
        if key not in schema:
            msg = f"unknown config key {'.'.join(path + [key])!r}"
            if strict:
                raise ConfigError(msg)
            warnings.append(msg)
            continue
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"section {'.'.join(path + [key])!r} must be a table")
            _check_keys(val, sub, path + [key], strict, warnings)


@dataclass
class ExperimentConfig:
    raw: dict
    domain: DomainSpec
    pinning_kind: str
    pinning_spec: object
    d: int
    eps_schedule: tuple
    seed: int
    restarts: int
    detect_threshold: float
    solver: SolverParams
    min_tol: float
    min_max_iter: int
    warnings: list = field(default_factory=list)

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def build_pinning(self):
        if self.pinning_kind == "none":
            from .grids import GridDomain
            from .pinning import PinningField
            spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
            return PinningField(spec, self.domain, [], domain=GridDomain(self.domain))
        if self.pinning_kind == "periodic":
            return build_periodic(self.pinning_spec, self.domain)
        return build_diluted(self.pinning_spec, self.domain)


def load_config(path, strict: bool = True) -> ExperimentConfig:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    warnings: list = []
    _check_keys(data, _SCHEMA, [], strict, warnings)
    return parse_config(data, warnings)


def parse_config(data: dict, warnings=None) -> ExperimentConfig:
    warnings = warnings if warnings is not None else []
    if data.get("schema") != 1:
        raise ConfigError("config must declare schema = 1")
    if data.get("units", "domain") != "domain":
        raise ConfigError("only units = 'domain' is supported")

    dsec = data.get("domain", {})
    domain = DomainSpec(
        shape=dsec.get("shape", "disc"),
        radius=float(dsec.get("radius", 1.0)),
        width=float(dsec.get("width", 2.0)),
        height=float(dsec.get("height", 2.0)),
        center=tuple(dsec.get("center", (0.0, 0.0))),
        h=float(dsec.get("h", 0.01)),
        margin=float(dsec.get("margin", 0.0)),
    )

    psec = data.get("pinning", {"kind": "none"})
    kind = psec.get("kind", "none")
    pin_spec = None
    if kind not in ("none", "periodic", "diluted"):
        raise ConfigError(f"unknown pinning kind {kind!r}")
    if kind != "none":
        isec = psec.get("inclusion", {})
        inc = UnitInclusion(kind=isec.get("kind", "disc"),
                            r0=float(isec.get("r0", 0.25)),
                            vertices=tuple(map(tuple, isec.get("vertices", ()))))
        if kind == "periodic":
            pin_spec = PeriodicPinningSpec(b=float(psec["b"]),
                                           lam=float(psec["lambda"]),
                                           delta=float(psec["delta"]),
                                           inclusion=inc)
        else:
            stages = tuple(tuple(map(tuple, st)) for st in psec.get("stages", []))
            pin_spec = DilutedPinningSpec(b=float(psec["b"]),
                                          lam=float(psec["lambda"]),
                                          delta=float(psec["delta"]),
                                          centers=stages,
                                          degree=int(psec.get("degree", 1)),
                                          eta=float(psec.get("eta", 0.0)))

    esec = data.get("experiment", {})
    eps = tuple(float(e) for e in esec.get("eps", [0.02]))
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ConfigError("eps schedule must be strictly decreasing")
    ssec = data.get("solver", {})
    solver = SolverParams(tol=float(ssec.get("tol", 1e-10)),
                          max_iter=int(ssec.get("max_iter", 60)),
                          damping=float(ssec.get("damping", 1.0)),
                          continuation=tuple(ssec.get("continuation", (2.0, 1.0))))
    return ExperimentConfig(
        raw=data,
        domain=domain,
        pinning_kind=kind,
        pinning_spec=pin_spec,
        d=int(esec.get("d", 1)),
        eps_schedule=eps,
        seed=int(esec.get("seed", 0)),
        restarts=int(esec.get("restarts", 3)),
        detect_threshold=float(esec.get("detect_threshold", 0.5)),
        solver=solver,
        min_tol=float(ssec.get("min_tol", 1e-5)),
        min_max_iter=int(ssec.get("min_max_iter", 6000)),
        warnings=warnings,
    )
