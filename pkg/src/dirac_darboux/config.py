"""Model configuration schema and the build dispatcher.

Configs are flat JSON documents validated by pydantic (unknown keys are
rejected).  The same schema drives the CLI, the service and the preset
files; build_model turns a validated config into the kind-specific
objects plus a uniform wrapper the writers and checkers consume.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from .darboux2x2 import BoundState, bound_states, build_seed, transform
from .errors import InvalidInputError
from .nonreducible import (adjoint_missing_states, build_block_seed,
                           nonreducible_transform)
from .numerics import GAMMA2, Grid, MatrixField
from .free2x2 import FreeParams
from .reduce4x4 import build_distortion_model, build_spinorbit_model

ModelKind = Literal["free2x2", "darboux2x2", "distortion", "spin_orbit",
                    "nonreducible"]


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x_min: float = -30.0
    x_max: float = 30.0
    n_points: int = 6001


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    kind: ModelKind

    # single-block constants (free2x2, darboux2x2)
    v: Optional[float] = None
    w: Optional[float] = None
    re_a: float = 0.0
    im_a: float = 0.0

    # two-block constants (distortion, nonreducible); v1 alone also
    # parametrizes the spin_orbit family
    v1: Optional[float] = None
    w1: Optional[float] = None
    re_a1: float = 0.0
    im_a1: float = 0.0
    v2: Optional[float] = None
    w2: Optional[float] = None
    re_a2: float = 0.0
    im_a2: float = 0.0

    eps1: Optional[float] = None
    eps2: Optional[float] = None
    eps3: Optional[float] = None
    eps4: Optional[float] = None
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    delta4: float = 0.0
    delta3_bar: float = 0.0
    delta4_bar: float = 0.0
    alpha: float = 0.0

    lambda_mode: Literal["constant", "equal_to_v1_tilde"] = "equal_to_v1_tilde"
    lambda_value: Optional[float] = None

    coupling: bool = True

    # diagnostic knob: adds this multiple of diag(1,-1[,1,-1]) to the
    # transformed potential so verification has something to catch
    potential_offset_sigma3: float = 0.0

    grid: GridConfig = GridConfig()


def load_config(path: str) -> ModelConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}")
    return parse_config(data)


def parse_config(data: dict) -> ModelConfig:
    try:
        return ModelConfig.model_validate(data)
    except ValidationError as exc:
        raise InvalidInputError(f"invalid model config: {exc}")


def _require(config: ModelConfig, names) -> list:
    out = []
    for n in names:
        val = getattr(config, n)
        if val is None:
            raise InvalidInputError(
                f"kind {config.kind!r} requires parameter {n!r}")
        out.append(val)
    return out


def to_grid(gc: GridConfig) -> Grid:
    return Grid(x_min=gc.x_min, x_max=gc.x_max, n_points=gc.n_points)


@dataclass
class BuiltModel:
    name: str
    kind: str
    config: ModelConfig
    grid: Grid
    gamma: np.ndarray
    potential: MatrixField
    clean_potential: MatrixField
    bound_states: tuple
    detail: object


def _offset_matrix(dim: int, c: float) -> np.ndarray:
    if dim == 2:
        return c * np.diag([1.0, -1.0])
    return c * np.diag([1.0, -1.0, 1.0, -1.0])


def _corrupt(field: MatrixField, c: float) -> MatrixField:
    if c == 0.0:
        return field
    off = _offset_matrix(field.dim, c).astype(complex)

    def evaluator(x):
        return np.asarray(field(x)) + off

    def shift(m):
        return None if m is None else m + off

    return MatrixField(dim=field.dim, evaluator=evaluator,
                       asymptotic_minus=shift(field.asymptotic_minus),
                       asymptotic_plus=shift(field.asymptotic_plus))


def build_model(config: ModelConfig) -> BuiltModel:
    grid = to_grid(config.grid)
    kind = config.kind

    if kind == "free2x2":
        v, w = _require(config, ["v", "w"])
        params = FreeParams(v=v, w=w, a=complex(config.re_a, config.im_a))
        potential = params.potential_field()
        gamma = GAMMA2
        bound = ()
        detail = params
    elif kind == "darboux2x2":
        v, w, e1, e2 = _require(config, ["v", "w", "eps1", "eps2"])
        params = FreeParams(v=v, w=w, a=complex(config.re_a, config.im_a))
        seed = build_seed(params, e1, e2, config.delta1, config.delta2)
        trans = transform(seed, grid=grid)
        potential = trans.potential_field()
        gamma = GAMMA2
        bound = tuple(bound_states(seed, grid=grid))
        detail = trans
    elif kind == "distortion":
        v1, w1, v2, w2, e1, e2, e3, e4 = _require(
            config, ["v1", "w1", "v2", "w2", "eps1", "eps2", "eps3", "eps4"])
        p1 = FreeParams(v=v1, w=w1, a=complex(config.re_a1, config.im_a1))
        p2 = FreeParams(v=v2, w=w2, a=complex(config.re_a2, config.im_a2))
        model = build_distortion_model(
            p1, p2, (e1, e2, e3, e4),
            (config.delta1, config.delta2, config.delta3, config.delta4),
            alpha=config.alpha, grid=grid)
        potential = model.potential
        gamma = model.gamma
        bound = model.bound_states
        detail = model
    elif kind == "spin_orbit":
        v1, e1 = _require(config, ["v1", "eps1"])
        if config.lambda_mode == "constant":
            if config.lambda_value is None:
                raise InvalidInputError(
                    "lambda_mode 'constant' requires lambda_value")
            lam = float(config.lambda_value)
        else:
            lam = None
        model = build_spinorbit_model(v1, e1, lam=lam, grid=grid)
        potential = model.potential
        gamma = model.gamma
        bound = model.localized_states
        detail = model
    elif kind == "nonreducible":
        v1, w1, v2, w2, e1, e2, e3, e4 = _require(
            config, ["v1", "w1", "v2", "w2", "eps1", "eps2", "eps3", "eps4"])
        p1 = FreeParams(v=v1, w=w1, a=complex(config.re_a1, config.im_a1))
        p2 = FreeParams(v=v2, w=w2, a=complex(config.re_a2, config.im_a2))
        seed = build_block_seed(
            p1, p2, (e1, e2, e3, e4),
            (config.delta1, config.delta2, config.delta3, config.delta4),
            (config.delta3_bar, config.delta4_bar),
            coupling=config.coupling, grid=grid)
        result = nonreducible_transform(seed, grid=grid)
        potential = result.H_tilde.potential
        gamma = result.H_tilde.gamma
        # the normalizable spectrum lives on the adjoint side here
        adj = adjoint_missing_states(result, grid=grid)
        bound = tuple(
            BoundState(energy=float(e), spinor=s, norm=n, density=d,
                       residual=r, finite_norm=True)
            for e, s, d, n, r in zip(adj.energies, adj.states,
                                     adj.densities, adj.norms,
                                     adj.residuals))
        detail = result
    else:
        raise InvalidInputError(f"unknown kind {kind!r}")

    corrupted = _corrupt(potential, config.potential_offset_sigma3)
    name = config.name or kind
    return BuiltModel(name=name, kind=kind, config=config, grid=grid,
                      gamma=gamma, potential=corrupted,
                      clean_potential=potential, bound_states=bound,
                      detail=detail)
