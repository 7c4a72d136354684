"""End-to-end run on a small BA graph, then a look at the stages.

Uses a narrow GAN so it finishes in well under a minute; the output
directory holds every intermediate artifact.
"""
import sys
from pathlib import Path

from gti.metrics import clustering_distribution, degree_distribution, ks_distance
from gti.pipeline import RunConfig, load_saved_graph, read_stages, run_pipeline

out = sys.argv[1] if len(sys.argv) > 1 else "demo_ba_run"
config = RunConfig(model="BA", n=200, m=2, seed=0, gan_iters=200, channels="16,8", ensemble_size=5, out=out)
report = run_pipeline(config)
print(f"levels={report.n_levels} M={report.M} k={report.k} stages={report.n_stages} "
      f"sum-up loss={report.final_loss:.4f}")

g, _ = load_saved_graph(Path(out))
stages = read_stages(Path(out), g.n_nodes)
ref = degree_distribution(g)
print(f"\n{'stage':>5s} {'edges':>6s} {'kept %':>7s} {'deg KS':>7s} {'mean cc':>8s}")
for i, (s, pct) in enumerate(zip(stages, report.retained_pct), start=1):
    print(f"{i:5d} {s.n_edges:6d} {pct:7.2f} {ks_distance(degree_distribution(s), ref):7.3f} "
          f"{clustering_distribution(s)[1]:8.3f}")
print(f"\noriginal: {g.n_edges} edges, mean cc {clustering_distribution(g)[1]:.3f}")
overlap = len(stages[-1].edge_set & g.edge_set)
print(f"final stage shares {overlap} of its {stages[-1].n_edges} edges with the original")
