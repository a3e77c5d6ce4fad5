"""Command-line entry point.

Exit codes: 0 ok, 1 I/O error, 2 parse/locate error, 3 concept-resolution error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .errors import ConceptResolutionError, ParseError
from .locate import LocateMode, locate_text
from .pipeline import (RunConfig, ablation_csv, ablation_plot, evaluate_manifest, metadata,
                       run_ablation, run_sample, write_sample_outputs)

EXIT_OK, EXIT_IO, EXIT_PARSE, EXIT_CONCEPT = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so that "flag given" can be told apart from "use config/default"
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--caption")
    p.add_argument("--prompt")
    p.add_argument("--mode", choices=[m.value for m in LocateMode])
    p.add_argument("--w", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--strength", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--model", dest="model_spec", help="ScoreModelSpec JSON (default: packaged two-mode model)")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--input", type=_floats, help="comma-separated input latent")


def build_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            data[f.name] = val
    return RunConfig.from_dict(data)


def cmd_locate(args) -> int:
    plan = locate_text(args.caption, args.prompt, args.mode)
    text = plan.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = build_config(args)
    traj, plan, meta = run_sample(cfg)
    paths = write_sample_outputs(cfg.output_dir, traj, meta)
    print(json.dumps({"final": traj.final.z.tolist(), "plan": plan.to_dict(),
                      "files": {k: str(v) for k, v in paths.items()}}, indent=2))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report, rows = evaluate_manifest(args.manifest, args.model)
    text = json.dumps({"aggregate": report.to_dict(), "samples": rows}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = build_config(args)
    rows = run_ablation(cfg, args.eta_grid, args.chains)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text(ablation_csv(rows), encoding="utf-8")
    ablation_plot(rows, out / "ablation.svg")
    meta = metadata("ablate", cfg, eta_grid=list(args.eta_grid), chains=args.chains)
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(ablation_csv(rows), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locforget", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("locate", help="derive positive concepts and forgetting elements")
    p.add_argument("--caption", default="")
    p.add_argument("--prompt", required=True)
    p.add_argument("--mode", default=LocateMode.IMAGE_RESIDUAL.value,
                   choices=[m.value for m in LocateMode])
    p.add_argument("--out")
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("sample", help="guided DDIM edit on the analytic model")
    _add_run_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="metrics over a JSON manifest")
    p.add_argument("manifest")
    p.add_argument("--model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep the forgetting scale")
    _add_run_flags(p)
    p.add_argument("--eta-grid", type=_floats, default=[0.0, 1.0, 2.5, 5.0, 10.0, 20.0])
    p.add_argument("--chains", type=int, default=500)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConceptResolutionError as exc:
        print(f"error: {exc}; unresolved: {exc.phrases}", file=sys.stderr)
        return EXIT_CONCEPT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
