"""End-to-end orchestration: configuration, deterministic seeding, the phase
functions behind each CLI subcommand and the on-disk artifact formats."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics
from .generators import GeneratorSpec, Model, ensemble, generate
from .graph import Graph, load_edge_list, write_edge_list
from .hierarchy import HierarchyDecomposition, louvain_decompose, modularity
from .layer_gan import (
    GanConfig,
    GanModel,
    default_augment,
    loss_curve_rows,
    make_training_set,
    regenerate_layer,
    subgraph_batch,
    train_layer_gan,
)
from .partition import LayerPlan, build_layer_plan, tile_size
from .reconstruct import StageSet, WeightedReconstruction, extract_stages, fit_sumup
from .sampling import Method, comparison, write_sampling_report

logger = logging.getLogger(__name__)

# seed stream tags
_PARTITION, _AUGMENT, _GAN, _REGENERATE = range(4)


class PhaseError(RuntimeError):
    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"phase '{phase}' failed: {type(cause).__name__}: {cause}")
        self.phase = phase
        self.cause = cause


@dataclass
class RunConfig:
    """Every knob of a run. Defaults follow the reference training setup."""

    input: str = ""
    model: str = "BA"
    n: int = 500
    p: float = 0.1
    m: int = 2
    k_ring: int = 2
    power: int = 10
    seed: int = 0
    gan_iters: int = 1000
    gan_lr: float = 2e-4
    gan_beta1: float = 0.5
    gan_batch: int = 32
    z_dim: int = 100
    channels: str = "128,64"
    augment: int = -1  # -1: ceil(1000 / M) - 1
    pool_factor: int = 10
    sumup_iters: int = 500
    sumup_lr: float = 0.1
    epsilon: float = 1e-6
    round_decimals: int = 6
    stage_floor: float = 1e-4  # rounded weights at or below this open no stage
    samplers: str = "RandomWalk,RandomJump,ForestFire"
    restart_p: float = 0.15
    jump_p: float = 0.15
    burn_p: float = 0.35
    sample_window: str = ""
    ensemble_size: int = 100
    similarity_penalty: float = 1.0
    workers: int = 1
    out: str = "gti_run"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.gan_iters >= 0, "gan_iters must be >= 0"),
            (self.gan_lr > 0, "gan_lr must be positive"),
            (0 <= self.gan_beta1 < 1, "gan_beta1 must lie in [0, 1)"),
            (self.gan_batch >= 1, "gan_batch must be >= 1"),
            (self.z_dim >= 1, "z_dim must be >= 1"),
            (self.augment >= -1, "augment must be >= 0, or -1 for automatic"),
            (self.pool_factor >= 1, "pool_factor must be >= 1"),
            (self.sumup_iters >= 0, "sumup_iters must be >= 0"),
            (self.sumup_lr > 0, "sumup_lr must be positive"),
            (self.epsilon > 0, "epsilon must be positive"),
            (0 <= self.round_decimals <= 15, "round_decimals must lie in [0, 15]"),
            (self.stage_floor >= 0, "stage_floor must be >= 0"),
            (self.ensemble_size >= 0, "ensemble_size must be >= 0"),
            (self.similarity_penalty >= 0, "similarity_penalty must be >= 0"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.seed >= 0, "seed must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        if len(self.channel_tuple) != 2 or min(self.channel_tuple) < 1:
            raise ValueError(f"channels must be two positive integers, got {self.channels!r}")
        for name in self.sampler_methods:
            Method(name)
        if self.sample_window and len(self.sample_window.split(",")) != 2:
            raise ValueError(f"sample_window must be 'lo,hi', got {self.sample_window!r}")

    @property
    def channel_tuple(self) -> tuple:
        try:
            return tuple(int(c) for c in str(self.channels).split(","))
        except ValueError:
            raise ValueError(f"channels must be comma separated integers, got {self.channels!r}") from None

    @property
    def sampler_methods(self) -> list:
        return [s.strip() for s in self.samplers.split(",") if s.strip()]

    @property
    def window(self):
        if not self.sample_window:
            return None
        lo, hi = (int(x) for x in self.sample_window.split(","))
        return lo, hi

    def generator_spec(self, seed_offset: int = 0) -> GeneratorSpec:
        return GeneratorSpec(Model(self.model), n=self.n, p=self.p, m=self.m, k_ring=self.k_ring,
                             power=self.power, seed=self.seed + seed_offset)

    def gan_config(self, seed: int) -> GanConfig:
        return GanConfig(iters=self.gan_iters, lr=self.gan_lr, beta1=self.gan_beta1,
                         batch_size=self.gan_batch, z_dim=self.z_dim, channels=self.channel_tuple, seed=seed)

    def resolved(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def _coerce(name: str, text: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise ValueError(f"unknown config key {name!r}")
    kind = kinds[name]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ValueError(f"config key {name!r}: cannot parse {text!r} as {kind}") from None
    return text


def read_config_file(path) -> dict:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, value = (s.strip() for s in text.split("=", 1))
            values[key] = _coerce(key, value)
    return values


def load_config(path=None, **overrides) -> RunConfig:
    values = read_config_file(path) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def derive_seed(seed: int, level: int, stream: int) -> int:
    """Independent 32-bit seed per (run seed, level, purpose)."""
    return int(np.random.SeedSequence([seed, level, stream]).generate_state(1)[0])


# artifact formats

def write_hierarchy_csv(dec: HierarchyDecomposition, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "level", "community"])
        for level, assign in enumerate(dec.levels):
            for node, c in enumerate(assign.tolist()):
                w.writerow([node, level, c])


def read_hierarchy_csv(path, g: Graph) -> HierarchyDecomposition:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    n_levels = int(rows[:, 1].max()) + 1
    levels = []
    for level in range(n_levels):
        sel = rows[rows[:, 1] == level]
        assign = np.empty(g.n_nodes, dtype=np.int64)
        assign[sel[:, 0]] = sel[:, 2]
        assign.setflags(write=False)
        levels.append(assign)
    counts = tuple(int(a.max()) + 1 for a in levels)
    mods = tuple(modularity(g, a) for a in levels)
    return HierarchyDecomposition(tuple(levels), counts, mods)


def write_plan_csv(plan: LayerPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "part", "slot"])
        rows = [(int(node), part, slot) for part, nodes in enumerate(plan.slots) for slot, node in enumerate(nodes)]
        w.writerows(sorted(rows))


def read_plan_csv(path, level: int, g: Graph) -> LayerPlan:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    M = int(rows[:, 1].max()) + 1
    assignment = np.empty(g.n_nodes, dtype=np.int64)
    assignment[rows[:, 0]] = rows[:, 1]
    assignment.setflags(write=False)
    slots = []
    for part in range(M):
        sel = rows[rows[:, 1] == part]
        slots.append(sel[np.argsort(sel[:, 2]), 0])
    return LayerPlan(level, M, tile_size(g.n_nodes, M), tuple(slots), assignment)


def write_weights_csv(rec: WeightedReconstruction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "weight"])
        for level, wl in enumerate(rec.layer_weights.tolist()):
            w.writerow([f"layer_{level}", repr(wl)])
        w.writerow(["inter", repr(rec.inter_weight)])
        w.writerow(["bias", repr(rec.bias)])


def read_weights_csv(path) -> tuple[np.ndarray, float, float]:
    with open(path, newline="") as fh:
        rows = {r["component"]: float(r["weight"]) for r in csv.DictReader(fh)}
    layers = [rows[f"layer_{i}"] for i in range(len(rows) - 2)]
    return np.array(layers), rows["inter"], rows["bias"]


def write_distribution_csv(dist: metrics.Distribution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "density"])
        for v, d in zip(dist.values.tolist(), dist.densities.tolist()):
            w.writerow([repr(float(v)), repr(float(d))])


def write_stages(stages: StageSet, stage_mods, out: Path, below_floor: int = 0) -> None:
    for i, stage in enumerate(stages.stages, start=1):
        write_edge_list(stage, out / f"stage_{i}.edges")
    payload = {
        "n_stages": stages.n_stages,
        "cut_values": [float(c) for c in stages.cut_values],
        "edge_counts": list(stages.edge_counts),
        "retained_pct": metrics.retained_percentages(stages),
        "modularity": [None if math.isnan(q) else q for q in stage_mods],
        "below_floor": below_floor,
    }
    (out / "stages.json").write_text(json.dumps(payload, indent=2) + "\n")


def read_stages(out: Path, n_nodes: int) -> list[Graph]:
    stages = []
    i = 1
    while (out / f"stage_{i}.edges").exists():
        stages.append(_load_edges(out / f"stage_{i}.edges", n_nodes))
        i += 1
    if not stages:
        raise FileNotFoundError(f"no stage_<i>.edges files in {out}")
    return stages


def _load_edges(path, n_nodes: int) -> Graph:
    if os.path.getsize(path) == 0:
        return Graph(n_nodes)
    return load_edge_list(path, node_relabel=False, n_nodes=n_nodes)


# phases

def load_input(config: RunConfig) -> tuple[Graph, str]:
    if config.input:
        g = load_edge_list(config.input)
        return Graph(g.n_nodes, g.edges), Path(config.input).stem
    spec = config.generator_spec()
    return generate(spec), spec.model.value


def save_graph(g: Graph, name: str, out: Path) -> None:
    write_edge_list(g, out / "graph.edges")
    meta = {"graph": name, "nodes": g.n_nodes, "edges": g.n_edges}
    (out / "graph.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_saved_graph(out: Path) -> tuple[Graph, str]:
    meta_path = out / "graph.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{meta_path} not found; run generate or pipeline first")
    meta = json.loads(meta_path.read_text())
    return _load_edges(out / "graph.edges", meta["nodes"]), meta["graph"]


def decompose(g: Graph, config: RunConfig, out: Path):
    dec = louvain_decompose(g, seed=config.seed)
    write_hierarchy_csv(dec, out / "hierarchy.csv")
    plans, inters = [], []
    for level in range(dec.n_levels):
        plan, inter = build_layer_plan(g, dec, level, seed=derive_seed(config.seed, level, _PARTITION))
        write_plan_csv(plan, out / f"plan_level{level}.csv")
        write_edge_list(Graph(g.n_nodes, inter.edges), out / f"inter_level{level}.edges")
        plans.append(plan)
        inters.append(inter)
    E = union_inter(g.n_nodes, [i.edges for i in inters])
    write_edge_list(E, out / "inter.edges")
    return dec, plans, E


def union_inter(n_nodes: int, edge_arrays) -> Graph:
    arrays = [a for a in edge_arrays if len(a)]
    return Graph(n_nodes, np.concatenate(arrays) if arrays else ())


def _train_level(args):
    g, plan, config, out = args
    level = plan.level
    batch = subgraph_batch(g, plan)
    augment = default_augment(plan.M) if config.augment < 0 else config.augment
    tiles = make_training_set(batch, augment, seed=derive_seed(config.seed, level, _AUGMENT))
    model = train_layer_gan(tiles, config.gan_config(derive_seed(config.seed, level, _GAN)))
    model.save(out / f"gan_level{level}.ckpt")
    with open(out / f"loss_level{level}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "d_loss", "g_loss"])
        w.writerows((i, repr(d), repr(gl)) for i, d, gl in loss_curve_rows(model))
    layer = regenerate_layer(model, batch, g.n_nodes, config.pool_factor,
                             seed=derive_seed(config.seed, level, _REGENERATE))
    write_edge_list(layer, out / f"layer_level{level}.edges")
    return level, layer


def train_layers(g: Graph, plans, config: RunConfig, out: Path) -> list[Graph]:
    """Train one GAN per level and regenerate its layer; merged in level order."""
    jobs = [(g, plan, config, out) for plan in plans]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(jobs))) as pool:
            results = list(pool.map(_train_level, jobs))
    else:
        results = [_train_level(job) for job in jobs]
    return [layer for _, layer in sorted(results, key=lambda r: r[0])]


def regenerate_from_checkpoints(g: Graph, plans, config: RunConfig, out: Path) -> list[Graph]:
    layers = []
    for plan in plans:
        model = GanModel.load(out / f"gan_level{plan.level}.ckpt")
        layer = regenerate_layer(model, subgraph_batch(g, plan), g.n_nodes, config.pool_factor,
                                 seed=derive_seed(config.seed, plan.level, _REGENERATE))
        write_edge_list(layer, out / f"layer_level{plan.level}.edges")
        layers.append(layer)
    return layers


def fit(g: Graph, layers, E: Graph, config: RunConfig, out: Path) -> WeightedReconstruction:
    rec = fit_sumup(layers, E, g, iters=config.sumup_iters, lr=config.sumup_lr, epsilon=config.epsilon)
    write_weights_csv(rec, out / "weights.csv")
    with open(out / "sumup_loss.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "loss"])
        w.writerows((i, repr(v)) for i, v in enumerate(rec.loss_curve))
    return rec


def stage(rec: WeightedReconstruction, config: RunConfig, out: Path) -> tuple[StageSet, list]:
    stages = extract_stages(rec, config.round_decimals, config.stage_floor)
    _, w = rec.support_weights()
    w = np.round(w, config.round_decimals)
    below = int(np.count_nonzero((w > 0) & (w <= config.stage_floor)))
    if below:
        logger.info("stage floor %g drops %d support edges with positive weight", config.stage_floor, below)
    mods = metrics.stage_modularities(stages, seed=config.seed)
    write_stages(stages, mods, out, below)
    return stages, mods


def _ensemble_graphs(g: Graph, config: RunConfig) -> list[Graph]:
    if config.ensemble_size == 0:
        return []
    if config.input:
        pairs = g.n_nodes * (g.n_nodes - 1) / 2
        spec = GeneratorSpec(Model.ER, n=g.n_nodes, p=g.n_edges / pairs if pairs else 0.0, seed=config.seed + 1)
    else:
        spec = config.generator_spec(seed_offset=1)
    return ensemble(spec, config.ensemble_size)


def _report_row(graph_name, stage_label, value, ens_values):
    if ens_values:
        s = metrics.ensemble_stats(ens_values)
        tail = [repr(s["mean"]), repr(s["std"]), repr(s["min"]), repr(s["max"])]
    else:
        tail = ["", "", "", ""]
    return [graph_name, stage_label, repr(float(value))] + tail


def evaluate(g: Graph, stages, name: str, config: RunConfig, out: Path) -> dict:
    """Distribution CSVs, the distance report over all stages and the
    similarity report for the penultimate stage, both against a base-model ensemble."""
    paths = {}
    for tag, graph in [("original", g)] + [(f"stage{i}", s) for i, s in enumerate(stages, start=1)]:
        deg = out / f"degree_dist_{tag}.csv"
        cc = out / f"cc_dist_{tag}.csv"
        write_distribution_csv(metrics.degree_distribution(graph), deg)
        write_distribution_csv(metrics.clustering_distribution(graph)[0], cc)
        paths[tag] = (str(deg.name), str(cc.name))

    base = _ensemble_graphs(g, config)
    ens_fnorm = [metrics.frobenius_distance(b, g) for b in base]
    header = ["graph", "stage", "value", "ensemble_mean", "ensemble_std", "ensemble_min", "ensemble_max"]
    with open(out / "fnorm_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, s in enumerate(stages, start=1):
            w.writerow(_report_row(name, i, metrics.frobenius_distance(s, g), ens_fnorm))

    pen = len(stages) - 1 if len(stages) > 1 else 1
    lam = config.similarity_penalty
    score = metrics.node_similarity(stages[pen - 1], g, penalty=lam).score
    ens_sim = [metrics.node_similarity(b, g, penalty=lam).score for b in base]
    with open(out / "similarity_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerow(_report_row(name, pen, score, ens_sim))
    return paths


def sample_compare(g: Graph, stage1: Graph | None, config: RunConfig, out: Path, target_nodes=None):
    methods = config.sampler_methods
    params = dict(restart_p=config.restart_p, jump_p=config.jump_p, burn_p=config.burn_p)
    rows, samples = comparison(g, stage1, target_nodes, seed=config.seed, window=config.window, **params)
    rows = [r for r in rows if r.method == "GTI" or r.method in methods]
    samples = {k: v for k, v in samples.items() if k == "GTI" or k in methods}
    return write_sampling_report(rows, samples, g, out)


@dataclass
class RunReport:
    out_dir: str
    graph: str
    n_nodes: int
    n_edges: int
    n_levels: int
    M: list
    k: list
    n_stages: int
    retained_pct: list
    final_loss: float
    stage_modularity: list
    distribution_csvs: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "graph": self.graph,
            "nodes": self.n_nodes,
            "edges": self.n_edges,
            "stages": self.n_stages,
            "retained_pct": self.retained_pct,
            "levels": self.n_levels,
            "M": self.M,
            "k": self.k,
            "final_loss": self.final_loss,
            "stage_modularity": [None if math.isnan(q) else q for q in self.stage_modularity],
        }


def run_pipeline(config: RunConfig) -> RunReport:
    """Run every phase in order, persisting artifacts under ``config.out``.

    On failure a ``FAILED`` file naming the phase is written next to the
    partial artifacts and :class:`PhaseError` is raised.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "FAILED").unlink(missing_ok=True)
    (out / "config.resolved").write_text(config.resolved())
    phase = "load"
    try:
        g, name = load_input(config)
        save_graph(g, name, out)
        phase = "decompose"
        dec, plans, E = decompose(g, config, out)
        phase = "train"
        layers = train_layers(g, plans, config, out)
        phase = "reconstruct"
        rec = fit(g, layers, E, config, out)
        phase = "stages"
        stages, mods = stage(rec, config, out)
        phase = "metrics"
        csvs = evaluate(g, stages.stages, name, config, out)
        phase = "sample"
        sample_compare(g, stages.stages[0], config, out)
    except Exception as exc:
        (out / "FAILED").write_text(f"phase={phase}\nerror={type(exc).__name__}: {exc}\n")
        raise PhaseError(phase, exc) from exc

    report = RunReport(
        out_dir=str(out), graph=name, n_nodes=g.n_nodes, n_edges=g.n_edges, n_levels=dec.n_levels,
        M=[p.M for p in plans], k=[p.k for p in plans], n_stages=stages.n_stages,
        retained_pct=metrics.retained_percentages(stages), final_loss=rec.final_loss,
        stage_modularity=mods, distribution_csvs=csvs,
    )
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n")
    return report


def load_plans(g: Graph, out: Path) -> list[LayerPlan]:
    plans = []
    level = 0
    while (out / f"plan_level{level}.csv").exists():
        plans.append(read_plan_csv(out / f"plan_level{level}.csv", level, g))
        level += 1
    if not plans:
        raise FileNotFoundError(f"no plan_level<l>.csv files in {out}; run decompose first")
    return plans


def load_reconstruction(g: Graph, out: Path, epsilon: float) -> WeightedReconstruction:
    w, w_e, b = read_weights_csv(out / "weights.csv")
    layers = tuple(_load_edges(out / f"layer_level{i}.edges", g.n_nodes) for i in range(len(w)))
    E = _load_edges(out / "inter.edges", g.n_nodes)
    return WeightedReconstruction(g.n_nodes, layers, E, w, w_e, b, epsilon)
