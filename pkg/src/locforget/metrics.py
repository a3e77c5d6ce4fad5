"""Edit-quality metrics: CLIP-T, Inception Score, L1 and CLIP-D.

Embeddings and class posteriors are inputs, so any embedder can be plugged in.
For the analytic mixture model, ``toy_embed`` / ``toy_text_embed`` stand in for
the image and text towers: an image embeds as its component responsibilities,
a phrase as the indicator of the component labels it mentions.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import (ConceptUnknown, DimensionMismatch, DivisionByNearZero,
                     NotAProbability, ZeroNorm)

CLIP_SCALE = 100.0


def _vec(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float).ravel()


def cosine(a, b) -> float:
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} != {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroNorm("cosine similarity of a zero vector")
    return float(np.dot(a, b) / (na * nb))


def clip_t(text_emb, image_emb) -> float:
    return cosine(text_emb, image_emb)


def inception_score(class_probs) -> float:
    p = np.asarray(class_probs, dtype=float)
    if p.ndim != 2 or p.shape[0] == 0:
        raise NotAProbability("expected a non-empty (N, K) array of probability vectors")
    if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise NotAProbability("rows must be nonnegative and sum to 1")
    marginal = p.mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / marginal), 0.0)
    return float(math.exp(terms.sum(axis=1).mean()))


def l1(x_in, x_out) -> float:
    a, b = _vec(x_in), _vec(x_out)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} != {b.shape}")
    return float(np.mean(np.abs(a - b)))


def clip_d(emb_out, emb_in, emb_ref) -> float:
    """Relative gain in similarity to the edited reference over similarity to the input.

    Positive when the output sits nearer the reference; nonpositive for a copy of the input.
    """
    s_in = cosine(emb_out, emb_in)
    if abs(s_in) < 1e-9:
        raise DivisionByNearZero("output is orthogonal to the input embedding")
    return (cosine(emb_out, emb_ref) - s_in) / s_in


def toy_embed(z, model) -> np.ndarray:
    return model.responsibilities(np.asarray(z, float), 1.0)


def toy_text_embed(phrase: str, model) -> np.ndarray:
    hits = set(model.matching_labels(phrase))
    if not hits:
        raise ConceptUnknown(f"no component label found in {phrase!r}", [phrase])
    return np.array([1.0 if lab in hits else 0.0 for lab in model.labels])


@dataclass
class EvalReport:
    clip_t: float
    inception_score: float
    l1: float
    clip_d: float | None
    sample_count: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["clip_t_x100"] = self.clip_t * CLIP_SCALE
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def evaluate_batch(records: Sequence[dict], model) -> tuple[EvalReport, list[dict]]:
    """Score ``{input, output, reference?, prompt}`` records with the toy embedders.

    Returns the aggregate report and per-sample rows.  CLIP-D is averaged over
    the records that carry a reference and whose output is not orthogonal to the
    input (those rows get ``clip_d = None`` plus ``clip_d_error``); it is ``None``
    when no record qualifies.
    """
    rows = []
    probs = []
    for rec in records:
        x_in, x_out = _vec(rec["input"]), _vec(rec["output"])
        e_out = toy_embed(x_out, model)
        probs.append(e_out)
        row = {"clip_t": clip_t(toy_text_embed(rec["prompt"], model), e_out),
               "l1": l1(x_in, x_out)}
        if rec.get("reference") is not None:
            try:
                row["clip_d"] = clip_d(e_out, toy_embed(x_in, model),
                                       toy_embed(_vec(rec["reference"]), model))
            except DivisionByNearZero as exc:
                row["clip_d"], row["clip_d_error"] = None, str(exc)
        row["clip_t_x100"] = row["clip_t"] * CLIP_SCALE
        rows.append(row)
    d_vals = [r["clip_d"] for r in rows if r.get("clip_d") is not None]
    report = EvalReport(
        clip_t=float(np.mean([r["clip_t"] for r in rows])),
        inception_score=inception_score(np.array(probs)),
        l1=float(np.mean([r["l1"] for r in rows])),
        clip_d=float(np.mean(d_vals)) if d_vals else None,
        sample_count=len(rows),
    )
    return report, rows
