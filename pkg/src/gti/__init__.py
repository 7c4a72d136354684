"""Graph topology interpolation.

A graph is split into Louvain levels, each level is cut into equal-size
tiles, one small GAN per level learns its tiles, and a weighted sum of the
regenerated layers plus the inter-tile edges is thresholded into nested
stages ordered by importance.
"""

from .generators import GeneratorSpec, Model, generate
from .graph import Graph, WeightedAdjacency, induced_subgraph, load_edge_list, write_edge_list
from .hierarchy import louvain_decompose
from .layer_gan import GanConfig, GanModel, regenerate_layer, train_layer_gan
from .metrics import (
    clustering_distribution,
    degree_distribution,
    frobenius_distance,
    ks_distance,
    node_similarity,
)
from .partition import balanced_partition, build_layer_plan
from .pipeline import RunConfig, load_config, run_pipeline
from .reconstruct import extract_stages, fit_sumup
from .sampling import Method, SamplerSpec, sample

__version__ = "0.1.0"

__all__ = [
    "GanConfig", "GanModel", "GeneratorSpec", "Graph", "Method", "Model", "RunConfig", "SamplerSpec",
    "WeightedAdjacency", "balanced_partition", "build_layer_plan", "clustering_distribution",
    "degree_distribution", "extract_stages", "fit_sumup", "frobenius_distance", "generate",
    "induced_subgraph", "ks_distance", "load_config", "load_edge_list", "louvain_decompose",
    "node_similarity", "regenerate_layer", "run_pipeline", "sample", "train_layer_gan", "write_edge_list",
]
