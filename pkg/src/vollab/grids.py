"""Common regressor contract: hyperparameter grids and the naive baseline.

Grid axes and values are fixed enumerations; enumeration order is the
documented cartesian order of the axis lists below, last axis fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import VollabError

KINDS = ("svr", "gbdt", "attn_gru", "naive")

SVR_AXES = {
    "kernel": ("poly", "rbf", "sigmoid"),
    "gamma": ("scale", "auto", 0.1, 0.15, 0.2),
    "epsilon": (0.05, 0.1, 0.15),
}

GBDT_AXES = {
    "leaves": (75, 100, 125),
    "min_data": (10, 20, 30),
    "max_depth": (-1, 5, 10),
    "feature_fraction": (0.4, 0.5, 0.6),
}


@dataclass(frozen=True)
class ParamState:
    """One point in a model's hyperparameter grid."""

    kind: str
    values: tuple[tuple[str, object], ...]  # ordered (name, value) pairs

    def get(self, name):
        for k, v in self.values:
            if k == name:
                return v
        raise KeyError(name)

    def to_text(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.values) or "default"

    @classmethod
    def from_text(cls, kind: str, text: str) -> "ParamState":
        if text == "default":
            return cls(kind, ())
        axes = SVR_AXES if kind == "svr" else GBDT_AXES if kind == "gbdt" else {}
        pairs = []
        for item in text.split(";"):
            k, _, raw = item.partition("=")
            allowed = axes.get(k)
            if allowed is None:
                raise VollabError(f"unknown parameter {k!r} for kind {kind!r}")
            match = next((v for v in allowed if str(v) == raw), None)
            if match is None:
                raise VollabError(f"value {raw!r} not in the {k} enumeration")
            pairs.append((k, match))
        return cls(kind, tuple(pairs))


@dataclass(frozen=True)
class RegressorSpec:
    kind: str
    grid: tuple[ParamState, ...]
    input_shape: str  # "flat" or "tensor"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise VollabError(f"unknown regressor kind {self.kind!r}")
        if not self.grid:
            raise VollabError(f"{self.kind}: grid must be non-empty")


def enumerate_grid(kind: str) -> list[ParamState]:
    """Every ParamState of a kind, in deterministic cartesian order."""
    if kind not in KINDS:
        raise VollabError(f"unknown regressor kind {kind!r}")
    if kind in ("attn_gru", "naive"):
        return [ParamState(kind, ())]
    axes = SVR_AXES if kind == "svr" else GBDT_AXES
    states = [ParamState(kind, ())]
    for name, vals in axes.items():
        states = [
            ParamState(kind, s.values + ((name, v),)) for s in states for v in vals
        ]
    return states


def make_spec(kind: str, grid=None) -> RegressorSpec:
    shape = "tensor" if kind == "attn_gru" else "flat"
    return RegressorSpec(kind, tuple(grid) if grid else tuple(enumerate_grid(kind)), shape)


def naive_predict(history=None) -> float:
    """Random-walk-in-levels baseline: the predicted log-diff is always zero."""
    return 0.0
