"""JSON run and sweep configurations with every default made explicit."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..model import Kind, ModelParams, derived_constants, epsilon_window
from ..solver import Controls, InitialDataSpec

log = logging.getLogger(__name__)

DEFAULT_REFINEMENTS = (2048, 4096)


def _model(d: dict) -> ModelParams:
    try:
        return ModelParams(n=int(d["n"]), H=float(d["H"]), p=float(d["p"]),
                           kind=Kind(d.get("kind", Kind.POWER_U.value)))
    except KeyError as exc:
        raise ValueError(f"model section lacks field {exc}") from None


def _controls(d: dict) -> Controls:
    if "T_max" not in d:
        raise ValueError("controls section lacks T_max")
    return Controls(**{k: float(v) if k != "n_fit" else int(v) for k, v in d.items()})


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    data: InitialDataSpec
    m: int
    controls: Controls

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        data = dict(d.get("data", {}))
        data.setdefault("eps", 1.0)
        return cls(
            model=_model(d.get("model", {})),
            data=InitialDataSpec(**data),
            m=int(d.get("grid", {}).get("m", 4096)),
            controls=_controls(d.get("controls", {})),
        )

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "data": self.data.to_dict(),
                "grid": {"m": self.m}, "controls": self.controls.to_dict()}


@dataclass(frozen=True)
class SweepConfig:
    model: ModelParams
    epsilons: tuple
    controls: Controls
    refinements: tuple = DEFAULT_REFINEMENTS
    k_f: int = 8
    k_g: int = 8
    output_dir: str = "sweep_out"
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "refinements", tuple(int(m) for m in self.refinements))
        if not eps:
            raise ValueError("sweep needs at least one epsilon")
        if any(not 0 < e <= 1 for e in eps):
            raise ValueError(f"epsilons must lie in (0, 1]: {eps}")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilons must be strictly descending: {eps}")
        if not self.refinements or list(self.refinements) != sorted(set(self.refinements)):
            raise ValueError("refinements must be a non-empty increasing list of node counts")
        InitialDataSpec(1.0, self.k_f, self.k_g)
        object.__setattr__(self, "warnings", tuple(self._window_warnings()))

    def _window_warnings(self):
        if self.model.kind is Kind.LINEAR:
            return
        c = derived_constants(self.model)
        try:
            lo, _ = epsilon_window(c.a1, c.b1, self.model.p)
        except ValueError:
            yield "amplitude window undefined for these parameters"
            return
        for e in self.epsilons:
            if e < lo:
                yield f"epsilon {e} lies below the window lower bound {lo:.6g}"

    def window(self) -> tuple[float, float]:
        c = derived_constants(self.model)
        return epsilon_window(c.a1, c.b1, self.model.p)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        data = d.get("data", {})
        return cls(
            model=_model(d.get("model", {})),
            epsilons=tuple(d.get("epsilons", ())),
            controls=_controls(d.get("controls", {})),
            refinements=tuple(d.get("refinements", DEFAULT_REFINEMENTS)),
            k_f=int(data.get("k_f", 8)),
            k_g=int(data.get("k_g", 8)),
            output_dir=str(d.get("output_dir", "sweep_out")),
        )

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "data": {"k_f": self.k_f, "k_g": self.k_g},
            "epsilons": list(self.epsilons),
            "refinements": list(self.refinements),
            "controls": self.controls.to_dict(),
            "output_dir": self.output_dir,
        }


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
