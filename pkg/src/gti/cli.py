"""Command-line entry point. Every subcommand reads and writes artifacts in
``--out`` so long phases can be run once and reused."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import MISSING, fields
from pathlib import Path

from . import pipeline
from .pipeline import RunConfig

SUBCOMMANDS = ("generate", "decompose", "train", "reconstruct", "stages", "metrics", "sample", "pipeline")
_TYPES = {"int": int, "float": float, "str": str}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    for f in fields(RunConfig):
        default = f.default if f.default is not MISSING else None
        parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=_TYPES[f.type], default=None,
                            help=f"default: {default!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gti", description="Graph topology interpolation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "draw a synthetic graph (or ingest --input) into OUT/graph.edges",
        "decompose": "Louvain levels and balanced per-level plans",
        "train": "train one GAN per level and regenerate its layer",
        "reconstruct": "fit the layer / inter-edge weights and bias",
        "stages": "threshold the weighted reconstruction into nested stages",
        "metrics": "distribution CSVs, distance and similarity reports",
        "sample": "sampling baselines against stage 1",
        "pipeline": "run every phase end to end",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _add_config_flags(p)
        if name == "sample":
            p.add_argument("--target-nodes", type=int, default=None,
                           help="sample size when no stage_1.edges is available")
    return parser


def _config(args) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
    return pipeline.load_config(args.config, **overrides)


def _graph(config: RunConfig, out: Path):
    if (out / "graph.json").exists():
        return pipeline.load_saved_graph(out)
    g, name = pipeline.load_input(config)
    pipeline.save_graph(g, name, out)
    return g, name


def run(args) -> dict:
    config = _config(args)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(config.resolved())
    cmd = args.command

    if cmd == "pipeline":
        return pipeline.run_pipeline(config).summary()
    if cmd == "generate":
        g, name = pipeline.load_input(config)
        pipeline.save_graph(g, name, out)
        return {"graph": name, "nodes": g.n_nodes, "edges": g.n_edges}

    g, name = _graph(config, out)
    if cmd == "decompose":
        dec, plans, E = pipeline.decompose(g, config, out)
        return {"levels": dec.n_levels, "M": list(dec.counts), "k": [p.k for p in plans],
                "inter_edges": E.n_edges}
    if cmd == "train":
        plans = pipeline.load_plans(g, out)
        layers = pipeline.train_layers(g, plans, config, out)
        return {"layers": [layer.n_edges for layer in layers]}
    if cmd == "reconstruct":
        plans = pipeline.load_plans(g, out)
        if all((out / f"layer_level{p.level}.edges").exists() for p in plans):
            layers = [pipeline._load_edges(out / f"layer_level{p.level}.edges", g.n_nodes) for p in plans]
        else:
            layers = pipeline.regenerate_from_checkpoints(g, plans, config, out)
        E = pipeline._load_edges(out / "inter.edges", g.n_nodes)
        rec = pipeline.fit(g, layers, E, config, out)
        return {"layer_weights": rec.layer_weights.tolist(), "inter_weight": rec.inter_weight,
                "bias": rec.bias, "final_loss": rec.final_loss}
    if cmd == "stages":
        rec = pipeline.load_reconstruction(g, out, config.epsilon)
        stages, _ = pipeline.stage(rec, config, out)
        return {"stages": stages.n_stages, "edge_counts": list(stages.edge_counts)}
    if cmd == "metrics":
        stages = pipeline.read_stages(out, g.n_nodes)
        pipeline.evaluate(g, stages, name, config, out)
        return {"stages": len(stages)}
    if cmd == "sample":
        stage1 = pipeline.read_stages(out, g.n_nodes)[0] if (out / "stage_1.edges").exists() else None
        if stage1 is None and not args.target_nodes:
            raise ValueError("no stage_1.edges in --out; pass --target-nodes")
        path = pipeline.sample_compare(g, stage1, config, out, args.target_nodes)
        return {"report": path.name}
    raise AssertionError(cmd)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except (pipeline.PhaseError, ValueError, FileNotFoundError, OSError) as exc:
        print(f"gti {args.command}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
