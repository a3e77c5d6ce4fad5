"""End-to-end runs: locate -> sample -> evaluate, and the forgetting-scale sweep."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import (ScoreModelSpec, Trajectory, builtin_model, img2img_init,
                        make_schedule, sample, sample_finals)
from .guidance import GuidanceParams
from .locate import EditPlan, LocateMode, locate_text
from .metrics import CLIP_SCALE, evaluate_batch, inception_score, toy_embed, toy_text_embed


@dataclass
class RunConfig:
    caption: str = "a red car"
    prompt: str = "a yellow bus"
    mode: str = LocateMode.IMAGE_RESIDUAL.value
    w: float = 10.0
    eta: float = 2.5
    steps: int = 50
    strength: float = 0.8
    seed: int = 0
    model_spec: str | None = None  # None -> packaged two-mode model
    output_dir: str = "out"
    input: list[float] | None = None  # None -> mean of the component the caption names
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def params(self) -> GuidanceParams:
        return GuidanceParams(self.w, self.eta)

    def schedule(self):
        return make_schedule(self.T, self.beta_start, self.beta_end, self.steps)

    def load_model(self) -> ScoreModelSpec:
        return builtin_model() if self.model_spec is None else ScoreModelSpec.load(self.model_spec)


def input_latent(cfg: RunConfig, model: ScoreModelSpec) -> np.ndarray:
    if cfg.input is not None:
        x = np.asarray(cfg.input, float)
        if x.shape != (model.dimension,):
            raise ValueError(f"input has shape {x.shape}, model dimension is {model.dimension}")
        return x
    return np.asarray(model.components[model.resolve(cfg.caption)].mean, float)


def metadata(command: str, cfg: RunConfig, **extra) -> dict:
    return {"tool": "locforget", "version": __version__, "command": command,
            "config": asdict(cfg), **extra}


def run_sample(cfg: RunConfig) -> tuple[Trajectory, EditPlan, dict]:
    model = cfg.load_model()
    plan = locate_text(cfg.caption, cfg.prompt, cfg.mode)
    sched = cfg.schedule()
    x = input_latent(cfg, model)
    init = img2img_init(x, cfg.strength, sched, cfg.seed)
    traj = sample(model, plan, cfg.params(), sched, init, cfg.seed)
    meta = metadata("sample", cfg, plan=plan.to_dict(), model=model.to_dict(),
                    schedule=sched.to_dict(), t_start=init.t, input=x.tolist(),
                    cfg_equivalent=(cfg.eta == 0 or not plan.forgetting_elements))
    return traj, plan, meta


def write_sample_outputs(out_dir: str | Path, traj: Trajectory, meta: dict) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"trajectory": out / "trajectory.csv", "final": out / "final.json",
             "metadata": out / "metadata.json"}
    paths["trajectory"].write_text(traj.to_csv(), encoding="utf-8")
    final = {"t": traj.final.t, "z": traj.final.z.tolist(), "seed": traj.seed}
    paths["final"].write_text(json.dumps(final, indent=2) + "\n", encoding="utf-8")
    paths["metadata"].write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return paths


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0


ABLATION_COLUMNS = ["eta", "chains", "clip_t_x100", "clip_t_se", "log_likelihood",
                    "log_likelihood_se", "inception_score", "forget_distance", "forget_distance_se"]


def ablation_row(cfg: RunConfig, eta: float, chains: int, model=None,
                 plan: EditPlan | None = None) -> dict:
    """Aggregate metrics of ``chains`` seeded runs at one forgetting scale.

    Chain ``k`` always uses stream ``k`` of ``cfg.seed``, so a row depends only
    on its own eta.  ``plan`` overrides locating from the caption and prompt.
    """
    model = model or cfg.load_model()
    plan = plan or locate_text(cfg.caption, cfg.prompt, cfg.mode)
    sched = cfg.schedule()
    x = input_latent(cfg, model)
    finals = sample_finals(model, plan, GuidanceParams(cfg.w, eta), sched, x,
                           cfg.strength, cfg.seed, chains)
    emb = toy_embed(finals, model)
    text = toy_text_embed(cfg.prompt, model)
    align = CLIP_SCALE * (emb @ text) / (np.linalg.norm(emb, axis=1) * np.linalg.norm(text))
    ll = model.log_likelihood(finals)
    row = {"eta": float(eta), "chains": chains}
    row["clip_t_x100"], row["clip_t_se"] = _mean_se(align)
    row["log_likelihood"], row["log_likelihood_se"] = _mean_se(ll)
    row["inception_score"] = inception_score(emb)
    if plan.forgetting_elements:
        target = np.asarray(model.components[model.resolve(plan.forgetting_elements[0])].mean)
        dist = np.linalg.norm(finals - target, axis=1)
        row["forget_distance"], row["forget_distance_se"] = _mean_se(dist)
    else:
        row["forget_distance"] = row["forget_distance_se"] = float("nan")
    return row


def run_ablation(cfg: RunConfig, eta_grid, chains: int = 500) -> list[dict]:
    if not len(eta_grid):
        raise ValueError("eta grid is empty")
    model = cfg.load_model()
    rows = [ablation_row(cfg, eta, chains, model) for eta in eta_grid]
    return sorted(rows, key=lambda r: r["eta"])


def ablation_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=ABLATION_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def ablation_plot(rows: list[dict], path: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    etas = [r["eta"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.errorbar(etas, [r["clip_t_x100"] for r in rows], yerr=[r["clip_t_se"] for r in rows],
                 marker="o")
    ax1.set_xlabel("forgetting scale eta")
    ax1.set_ylabel("toy CLIP-T (x100)")
    ax2.errorbar(etas, [r["log_likelihood"] for r in rows],
                 yerr=[r["log_likelihood_se"] for r in rows], marker="o", color="C1")
    ax2.set_xlabel("forgetting scale eta")
    ax2.set_ylabel("mean mixture log-likelihood")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


class ManifestEntryError(OSError):
    pass


def _load_vector(value, base: Path, where: str):
    if value is None or isinstance(value, (list, int, float)):
        return value
    path = base / value
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestEntryError(f"{where}: cannot read {path}: {exc.strerror}") from exc
    return data["z"] if isinstance(data, dict) else data


def evaluate_manifest(path: str | Path, model_spec: str | None = None):
    """Manifest: a JSON list of records, or ``{"model": path, "records": [...]}``.

    Vector fields hold inline numbers or paths (relative to the manifest) of JSON
    files containing a list or a sample's ``final.json``.
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    records = doc["records"] if isinstance(doc, dict) else doc
    if model_spec is None and isinstance(doc, dict) and doc.get("model"):
        model_spec = str(path.parent / doc["model"])
    model = builtin_model() if model_spec is None else ScoreModelSpec.load(model_spec)
    resolved = []
    for i, rec in enumerate(records):
        entry = dict(rec)
        for key in ("input", "output", "reference"):
            entry[key] = _load_vector(rec.get(key), path.parent, f"entry {i} field {key!r}")
        if entry["input"] is None or entry["output"] is None:
            raise ManifestEntryError(f"entry {i}: input and output are required")
        resolved.append(entry)
    return evaluate_batch(resolved, model)
