"""Experiment configuration: one human-editable YAML file per experiment."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import yaml

from .errors import UsageError
from .nets import AllSmoothClass, ClassSpec, ExplicitClass, HalfspaceClass, NetCaps, PhiRampClass
from .oracle import (
    CorruptionSpec,
    FunctionSpec,
    corruption_from_dict,
    corruption_to_dict,
    spec_from_dict,
    spec_to_dict,
)
from .projection import PracticalParams
from .tester import SearchKnobs

SCHEMA_VERSION = 1

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["target", "algorithm"],
    "properties": {
        "schema_version": {"type": "integer"},
        "target": {
            "type": "object",
            "required": ["function"],
            "properties": {
                "function": {"type": "object", "required": ["type"]},
                "corruption": {
                    "type": ["object", "null"],
                    "properties": {
                        "mode": {"enum": ["random-flip", "adversarial-band-flip"]},
                        "rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                        "seed": {"type": "integer"},
                    },
                },
            },
        },
        "algorithm": {
            "type": "object",
            "required": ["k", "s"],
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "s": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "c_l": {"type": "number", "minimum": 0},
                "c_u": {"type": "number", "exclusiveMaximum": 0.5},
                "rho": {"type": "number"},
                "mode": {"enum": ["estimated", "analytic"]},
                "class": {"type": "object"},
                "practical": {
                    "type": "object",
                    "required": ["M", "eta", "eps_prime", "t"],
                },
                "knobs": {"type": "object"},
            },
        },
        "caps": {"type": "object"},
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "budget": {"type": ["integer", "null"], "minimum": 1},
        "output_dir": {"type": "string"},
        "validate": {"type": "object"},
    },
}


def class_to_dict(cls: ClassSpec) -> dict:
    if isinstance(cls, AllSmoothClass):
        return {"type": "all-smooth", "s": cls.s, "arity": cls.arity}
    if isinstance(cls, HalfspaceClass):
        return {"type": "halfspaces", "arity": cls.arity, "theta_grid": list(cls.theta_grid)}
    if isinstance(cls, PhiRampClass):
        return {
            "type": "phi-ramps",
            "arity": cls.arity,
            "slopes": [s for s in cls.slopes],
            "biases": list(cls.biases),
        }
    if isinstance(cls, ExplicitClass):
        return {
            "type": "explicit",
            "arity": cls.arity,
            "s": cls.s,
            "members": [m.to_dict() for m in cls.members],
        }
    raise UsageError(f"unknown class spec {type(cls)!r}")


def class_from_dict(data: dict) -> ClassSpec:
    kind = data.get("type", "halfspaces")
    if kind == "all-smooth":
        return AllSmoothClass(s=float(data["s"]), arity=int(data.get("arity", 1)))
    if kind == "halfspaces":
        cls = HalfspaceClass(arity=int(data.get("arity", 1)))
        if "theta_grid" in data:
            cls = HalfspaceClass(arity=cls.arity, theta_grid=tuple(data["theta_grid"]))
        return cls
    if kind == "phi-ramps":
        kwargs = {"arity": int(data.get("arity", 1))}
        if "slopes" in data:
            kwargs["slopes"] = tuple(None if s is None else float(s) for s in data["slopes"])
        if "biases" in data:
            kwargs["biases"] = tuple(float(b) for b in data["biases"])
        return PhiRampClass(**kwargs)
    if kind == "explicit":
        from .nets import element_from_dict

        return ExplicitClass(
            members=tuple(element_from_dict(m) for m in data["members"]),
            arity=int(data["arity"]),
            s=float(data.get("s", 1.0)),
        )
    raise UsageError(f"unknown class type {kind!r}")


@dataclass
class ExperimentConfig:
    """A fully-resolved experiment: target, algorithm parameters, caps, seeds."""

    function: FunctionSpec
    corruption: Optional[CorruptionSpec]
    k: int
    s: float
    cls: ClassSpec
    practical: PracticalParams
    caps: NetCaps
    knobs: SearchKnobs
    eps: float = 0.1
    c_l: float = 0.05
    c_u: float = 0.2
    rho: float = 1.0
    seeds: tuple[int, ...] = (0,)
    budget: Optional[int] = None
    output_dir: str = "reports"
    validate_options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise UsageError(f"invalid config: {exc.message}") from exc
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise UsageError(f"unsupported schema_version {version}")
        target = data["target"]
        algo = data.get("algorithm", {})
        practical_raw = algo.get(
            "practical", {"M": 20, "eta": 1.0, "eps_prime": 0.2, "t": 0.2}
        )
        knobs_raw = dict(algo.get("knobs", {}))
        knobs_raw.setdefault("mode", algo.get("mode", "estimated"))
        caps_raw = data.get("caps", {})
        return ExperimentConfig(
            function=spec_from_dict(target["function"]),
            corruption=corruption_from_dict(target.get("corruption")),
            k=int(algo["k"]),
            s=float(algo["s"]),
            cls=class_from_dict(algo.get("class", {"type": "halfspaces"})),
            practical=PracticalParams(
                M=int(practical_raw["M"]),
                eta=float(practical_raw["eta"]),
                eps_prime=float(practical_raw["eps_prime"]),
                t=float(practical_raw["t"]),
                seed=int(practical_raw.get("seed", 0)),
            ),
            caps=NetCaps(
                max_elements=int(caps_raw.get("max_elements", 1_000_000)),
                degree_cap=int(caps_raw.get("degree_cap", 3)),
                grid_step=float(caps_raw.get("grid_step", 0.5)),
                subspace_eps_floor=float(caps_raw.get("subspace_eps_floor", 0.1)),
                sphere_seed=int(caps_raw.get("sphere_seed", 2024)),
                sphere_candidates=int(caps_raw.get("sphere_candidates", 60_000)),
            ),
            knobs=SearchKnobs(
                t_corr=knobs_raw.get("t_corr"),
                coords_theta=float(knobs_raw.get("coords_theta", 0.05)),
                coords_delta=float(knobs_raw.get("coords_delta", 0.01)),
                eval_accuracy=knobs_raw.get("eval_accuracy"),
                eval_delta=float(knobs_raw.get("eval_delta", 0.01)),
                sample_constant=float(knobs_raw.get("sample_constant", 2.0)),
                mode=knobs_raw.get("mode", "estimated"),
            ),
            eps=float(algo.get("eps", 0.1)),
            c_l=float(algo.get("c_l", 0.05)),
            c_u=float(algo.get("c_u", 0.2)),
            rho=float(algo.get("rho", 1.0)),
            seeds=tuple(int(s) for s in data.get("seeds", [0])),
            budget=data.get("budget"),
            output_dir=data.get("output_dir", "reports"),
            validate_options=dict(data.get("validate", {})),
            raw=data,
        )

    @staticmethod
    def load(path) -> "ExperimentConfig":
        text = Path(path).read_text(encoding="utf-8")
        data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} did not parse to a mapping")
        return ExperimentConfig.from_dict(data)

    def echo(self) -> dict:
        """Canonical config echo for reports."""
        return {
            "schema_version": SCHEMA_VERSION,
            "target": {
                "function": spec_to_dict(self.function),
                "corruption": corruption_to_dict(self.corruption),
            },
            "algorithm": {
                "k": self.k,
                "s": self.s,
                "eps": self.eps,
                "c_l": self.c_l,
                "c_u": self.c_u,
                "rho": self.rho,
                "class": class_to_dict(self.cls),
                "practical": self.practical.to_dict(),
                "knobs": {
                    "t_corr": self.knobs.t_corr,
                    "coords_theta": self.knobs.coords_theta,
                    "coords_delta": self.knobs.coords_delta,
                    "eval_accuracy": self.knobs.eval_accuracy,
                    "eval_delta": self.knobs.eval_delta,
                    "sample_constant": self.knobs.sample_constant,
                    "mode": self.knobs.mode,
                },
            },
            "caps": {
                "max_elements": self.caps.max_elements,
                "degree_cap": self.caps.degree_cap,
                "grid_step": self.caps.grid_step,
                "subspace_eps_floor": self.caps.subspace_eps_floor,
                "sphere_seed": self.caps.sphere_seed,
                "sphere_candidates": self.caps.sphere_candidates,
            },
            "seeds": list(self.seeds),
            "budget": self.budget,
            "validate": self.validate_options,
        }
