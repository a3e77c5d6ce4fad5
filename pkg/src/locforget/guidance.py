"""Noise-prediction composition for conditional, negative and combined guidance.

Note the base terms differ: plain CFG (``compose_cfg``) is anchored at the
conditional prediction, while the combined locate-and-forget estimate
(``compose_laf``) is anchored at the unconditional one.  Both are kept as
written; ``compose_laf`` is what the sampler uses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, TimestepMismatch


@dataclass(frozen=True, eq=False)
class NoisePrediction:
    values: np.ndarray
    t: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite noise prediction at t={self.t}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class GuidanceParams:
    w: float = 10.0
    eta: float = 2.5

    def __post_init__(self):
        if not (self.w >= 0 and self.eta >= 0):
            raise ValueError(f"guidance scales must be nonnegative, got w={self.w}, eta={self.eta}")

    def to_dict(self):
        return {"w": self.w, "eta": self.eta}


# w from the main experiments and w from the forgetting-scale ablation
PRESETS = {
    "default": GuidanceParams(w=10.0, eta=2.5),
    "ablation": GuidanceParams(w=7.5, eta=2.5),
}


def _check(*preds: NoisePrediction) -> None:
    ref = preds[0]
    for p in preds[1:]:
        if p.values.shape != ref.values.shape:
            raise DimensionMismatch(f"shape {p.values.shape} != {ref.values.shape}")
        if p.t != ref.t:
            raise TimestepMismatch(f"timestep {p.t} != {ref.t}")


def compose_cfg(eps_uncond: NoisePrediction, eps_cond: NoisePrediction, w: float) -> NoisePrediction:
    _check(eps_uncond, eps_cond)
    c = eps_cond.values
    return NoisePrediction(c + w * (c - eps_uncond.values), eps_cond.t)


def compose_negative(eps_uncond: NoisePrediction, eps_cond_n: NoisePrediction,
                     eta: float) -> NoisePrediction:
    _check(eps_uncond, eps_cond_n)
    n = eps_cond_n.values
    return NoisePrediction(n - eta * (n - eps_uncond.values), eps_cond_n.t)


def compose_laf(eps_uncond: NoisePrediction, eps_pos: NoisePrediction | None,
                eps_neg: NoisePrediction | Sequence[NoisePrediction] | None,
                params: GuidanceParams) -> NoisePrediction:
    """``u + w (p - u) - eta * sum_k (n_k - u)``.

    ``eps_neg`` may be absent, one prediction, or one per forgetting element.
    A zero scale drops its term entirely, so the result is bit-identical to the
    expression without that term.
    """
    if eps_neg is None:
        negs: list[NoisePrediction] = []
    elif isinstance(eps_neg, NoisePrediction):
        negs = [eps_neg]
    else:
        negs = list(eps_neg)
    _check(eps_uncond, *([eps_pos] if eps_pos is not None else []), *negs)

    u = eps_uncond.values
    out = u
    if eps_pos is not None and params.w != 0:
        out = out + params.w * (eps_pos.values - u)
    if params.eta != 0:
        for n in negs:
            out = out - params.eta * (n.values - u)
    return NoisePrediction(out, eps_uncond.t)
