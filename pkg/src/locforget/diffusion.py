"""Deterministic DDIM sampling over a pluggable noise-prediction model.

The shipped model is an isotropic Gaussian mixture whose components are bound
to concept labels, so the noise prediction at any timestep is available in
closed form: component ``k`` noised to level ``abar`` is
``N(sqrt(abar) mu_k, (abar s_k^2 + 1 - abar) I)`` and
``eps = -sqrt(1 - abar) * grad log p_t(z | c)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from . import rng
from .errors import (ConceptAmbiguous, ConceptUnknown, InvalidScheduleParams,
                     TimestepOrder)
from .guidance import GuidanceParams, NoisePrediction, compose_laf

UNCONDITIONAL = None


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    T: int
    betas: np.ndarray
    alpha_bar: np.ndarray  # length T + 1, alpha_bar[0] == 1
    timesteps: np.ndarray  # descending inference grid, ends at 0

    @property
    def inference_steps(self) -> int:
        return len(self.timesteps) - 1

    def snap(self, t: float) -> int:
        """Nearest grid timestep (ties go to the larger one)."""
        grid = self.timesteps
        return int(grid[np.argmin(np.abs(grid - t))])

    def to_dict(self):
        return {"T": self.T, "beta_start": float(self.betas[0]), "beta_end": float(self.betas[-1]),
                "inference_steps": self.inference_steps}


def make_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02,
                  inference_steps: int = 50) -> NoiseSchedule:
    if not (0 < beta_start < beta_end < 1):
        raise InvalidScheduleParams(f"need 0 < beta_start < beta_end < 1, got {beta_start}, {beta_end}")
    if T < 1 or not (1 <= inference_steps <= T):
        raise InvalidScheduleParams(f"need 1 <= inference_steps <= T, got {inference_steps}, T={T}")
    betas = np.linspace(beta_start, beta_end, T)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    timesteps = np.round(np.linspace(T, 0, inference_steps + 1)).astype(int)
    return NoiseSchedule(T, betas, alpha_bar, timesteps)


@dataclass(frozen=True, eq=False)
class LatentState:
    z: np.ndarray
    t: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError(f"non-finite latent at t={self.t}")
        object.__setattr__(self, "z", z)


class NoiseModel(Protocol):
    def epsilon(self, z: np.ndarray, abar: float, condition: str | None) -> np.ndarray: ...

    def resolve(self, phrase: str) -> str: ...


def _words(text: str) -> list[str]:
    return re.findall(r"\w+", text.lower())


def _contains(phrase_words: list[str], label_words: list[str]) -> bool:
    n = len(label_words)
    return any(phrase_words[i:i + n] == label_words for i in range(len(phrase_words) - n + 1))


@dataclass(frozen=True)
class Component:
    mean: tuple[float, ...]
    var: float
    weight: float


@dataclass(frozen=True)
class ScoreModelSpec:
    """Isotropic Gaussian mixture, one component per concept label."""

    dimension: int
    components: dict[str, Component]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        ws = [c.weight for c in self.components.values()]
        if any(w <= 0 for w in ws) or not math.isclose(sum(ws), 1.0, abs_tol=1e-9):
            raise ValueError(f"weights must be positive and sum to 1, got {ws}")
        for label, c in self.components.items():
            if len(c.mean) != self.dimension:
                raise ValueError(f"component {label!r} has dimension {len(c.mean)}")
            if c.var <= 0:
                raise ValueError(f"component {label!r} needs positive variance")
        # cached arrays; frozen dataclass, so bypass __setattr__
        object.__setattr__(self, "_labels", list(self.components))
        object.__setattr__(self, "_means", np.array([c.mean for c in self.components.values()], float))
        object.__setattr__(self, "_vars", np.array([c.var for c in self.components.values()], float))
        object.__setattr__(self, "_logw", np.log([c.weight for c in self.components.values()]))

    @property
    def labels(self) -> list[str]:
        return list(self._labels)

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreModelSpec":
        comps = {}
        for label, c in d["components"].items():
            mean = c["mean"]
            mean = tuple(float(m) for m in (mean if isinstance(mean, list) else [mean]))
            comps[label] = Component(mean, float(c["var"]), float(c["weight"]))
        return cls(int(d["dimension"]), comps)

    @classmethod
    def load(cls, path: str | Path) -> "ScoreModelSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "components": {k: {"mean": list(c.mean), "var": c.var, "weight": c.weight}
                               for k, c in self.components.items()}}

    def matching_labels(self, phrase: str) -> list[str]:
        words = _words(phrase)
        return [lab for lab in self._labels if _contains(words, _words(lab))]

    def resolve(self, phrase: str) -> str:
        hits = self.matching_labels(phrase)
        if not hits:
            raise ConceptUnknown(f"no component label found in {phrase!r}", [phrase])
        if len(hits) > 1:
            raise ConceptAmbiguous(f"{phrase!r} matches several labels {hits}", [phrase])
        return hits[0]

    def _noised(self, abar: float):
        return math.sqrt(abar) * self._means, abar * self._vars + (1.0 - abar)

    def log_component_densities(self, z: np.ndarray, abar: float = 1.0) -> np.ndarray:
        """``log w_k + log N(z; sqrt(abar) mu_k, v_k I)`` with shape ``z.shape[:-1] + (K,)``."""
        z = np.asarray(z, float)
        m, v = self._noised(abar)
        sq = np.sum((z[..., None, :] - m) ** 2, axis=-1)
        d = self.dimension
        return self._logw - 0.5 * sq / v - 0.5 * d * np.log(2 * np.pi * v)

    def responsibilities(self, z: np.ndarray, abar: float = 1.0) -> np.ndarray:
        lp = self.log_component_densities(z, abar)
        lp = lp - lp.max(axis=-1, keepdims=True)
        p = np.exp(lp)
        return p / p.sum(axis=-1, keepdims=True)

    def log_likelihood(self, z: np.ndarray) -> np.ndarray:
        lp = self.log_component_densities(z, 1.0)
        top = lp.max(axis=-1)
        return top + np.log(np.sum(np.exp(lp - top[..., None]), axis=-1))

    def score(self, z: np.ndarray, abar: float, condition: str | None = UNCONDITIONAL) -> np.ndarray:
        z = np.asarray(z, float)
        m, v = self._noised(abar)
        if condition is UNCONDITIONAL:
            r = self.responsibilities(z, abar)
            return np.sum((r / v)[..., None] * (m - z[..., None, :]), axis=-2)
        if condition not in self.components:
            raise ConceptUnknown(f"unknown component {condition!r}", [condition])
        k = self._labels.index(condition)
        return (m[k] - z) / v[k]

    def epsilon(self, z: np.ndarray, abar: float, condition: str | None = UNCONDITIONAL) -> np.ndarray:
        return -math.sqrt(1.0 - abar) * self.score(z, abar, condition)


def gm_epsilon(model: ScoreModelSpec, state: LatentState, sched: NoiseSchedule,
               condition: str | None = UNCONDITIONAL) -> NoisePrediction:
    abar = float(sched.alpha_bar[state.t])
    return NoisePrediction(model.epsilon(state.z, abar, condition), state.t)


def ddim_step(state: LatentState, eps_bar: NoisePrediction, t: int, t_prev: int,
              sched: NoiseSchedule) -> LatentState:
    if not t > t_prev:
        raise TimestepOrder(f"need t > t_prev, got t={t}, t_prev={t_prev}")
    a, a_prev = sched.alpha_bar[t], sched.alpha_bar[t_prev]
    e = eps_bar.values
    x0 = (state.z - math.sqrt(1.0 - a) * e) / math.sqrt(a)
    return LatentState(math.sqrt(a_prev) * x0 + math.sqrt(1.0 - a_prev) * e, int(t_prev))


def img2img_init(x_input, strength: float, sched: NoiseSchedule, seed: int,
                 stream: int = 0) -> LatentState:
    """Forward-noise ``x_input`` to ``round(strength * T)`` snapped onto the inference grid."""
    if not (0 < strength <= 1):
        raise ValueError(f"strength must lie in (0, 1], got {strength}")
    x = np.asarray(x_input, float)
    t_start = sched.snap(round(strength * sched.T))
    a = sched.alpha_bar[t_start]
    xi = rng.standard_normal(seed, x.shape, stream)
    return LatentState(math.sqrt(a) * x + math.sqrt(1.0 - a) * xi, t_start)


@dataclass
class Trajectory:
    states: list[LatentState]
    seed: int | None
    params: GuidanceParams
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> LatentState:
        return self.states[-1]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "params": self.params.to_dict(),
                "states": [{"t": s.t, "z": s.z.tolist()} for s in self.states], **self.meta}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        """One row per state: ``t, z0, z1, ...`` using shortest round-trip float repr."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.states[0].z.shape[-1]
        w.writerow(["t"] + [f"z{i}" for i in range(d)])
        for s in self.states:
            w.writerow([s.t] + [repr(float(v)) for v in np.ravel(s.z)])
        return buf.getvalue()


@dataclass(frozen=True)
class ResolvedPlan:
    positive: tuple[str, ...]
    negative: tuple[str, ...]


def resolve_plan(model, plan) -> ResolvedPlan:
    """Map every plan phrase to a component label, collecting all failures."""
    pos, neg, bad = [], [], []
    for phrases, out in ((plan.positive_concepts, pos), (plan.forgetting_elements, neg)):
        for phrase in phrases:
            try:
                out.append(model.resolve(phrase))
            except ConceptUnknown:
                bad.append(phrase)
            except ConceptAmbiguous as exc:
                raise ConceptAmbiguous(str(exc), [phrase]) from None
    if bad:
        raise ConceptUnknown(f"unresolvable concepts: {bad}", bad)
    return ResolvedPlan(tuple(pos), tuple(neg))


def guided_epsilon(model, z: np.ndarray, t: int, sched: NoiseSchedule,
                   resolved: ResolvedPlan, params: GuidanceParams) -> NoisePrediction:
    abar = float(sched.alpha_bar[t])
    eps_u = NoisePrediction(model.epsilon(z, abar, UNCONDITIONAL), t)
    eps_p = None
    if resolved.positive:
        # several positive phrases are averaged into one conditional prediction
        vals = [model.epsilon(z, abar, c) for c in resolved.positive]
        eps_p = NoisePrediction(vals[0] if len(vals) == 1 else np.mean(vals, axis=0), t)
    eps_n = [NoisePrediction(model.epsilon(z, abar, c), t) for c in resolved.negative]
    return compose_laf(eps_u, eps_p, eps_n, params)


def sample(model, plan, params: GuidanceParams, sched: NoiseSchedule,
           init: LatentState, seed: int | None = None) -> Trajectory:
    """Run guided DDIM from ``init.t`` down to 0, recording every state.

    ``init.z`` may carry leading batch axes; chains never interact.
    """
    resolved = resolve_plan(model, plan)
    grid = [int(t) for t in sched.timesteps if t <= init.t]
    if not grid or grid[0] != init.t:
        grid = [init.t] + grid
    states = [init]
    state = init
    for t, t_prev in zip(grid[:-1], grid[1:]):
        eps = guided_epsilon(model, state.z, t, sched, resolved, params)
        state = ddim_step(state, eps, t, t_prev, sched)
        states.append(state)
    return Trajectory(states, seed, params)


def sample_finals(model, plan, params: GuidanceParams, sched: NoiseSchedule, x_input,
                  strength: float, seed: int, n_chains: int) -> np.ndarray:
    """Final latents of ``n_chains`` independent chains, chain ``k`` on stream ``k`` of ``seed``."""
    inits = [img2img_init(x_input, strength, sched, seed, k) for k in range(n_chains)]
    batch = LatentState(np.stack([s.z for s in inits]), inits[0].t)
    return sample(model, plan, params, sched, batch, seed).final.z


def builtin_model(name: str = "two_mode") -> ScoreModelSpec:
    from importlib import resources

    text = resources.files("locforget.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return ScoreModelSpec.from_dict(json.loads(text))
