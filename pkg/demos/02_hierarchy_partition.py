"""Louvain levels and the equal-size tiles each level is cut into."""
import numpy as np

from gti.generators import GeneratorSpec, Model, generate
from gti.hierarchy import louvain_decompose
from gti.layer_gan import subgraph_batch
from gti.partition import build_layer_plan, edge_cut

g = generate(GeneratorSpec(Model.BA, n=500, m=2, seed=0))
dec = louvain_decompose(g, seed=0)
print(f"{dec.n_levels} levels, communities per level: {list(dec.counts)}")

for level in range(dec.n_levels):
    plan, inter = build_layer_plan(g, dec, level, seed=level)
    batch = subgraph_batch(g, plan)
    intra = int(batch.tiles.sum() // 2)
    print(f"level {level}: M={plan.M:3d} k={plan.k:2d}  intra edges={intra:4d} "
          f"inter edges={inter.edges.shape[0]:4d}  cut={edge_cut(g, plan.assignment)}")

# every original edge is either inside a tile or an inter-tile edge
plan, inter = build_layer_plan(g, dec, 0, seed=0)
tile = subgraph_batch(g, plan).tiles[0]
print("\nfirst level-0 tile (rows ordered by degree):")
for row in tile:
    print("  " + "".join(".#"[int(v)] for v in row))
assert np.array_equal(tile, tile.T)
