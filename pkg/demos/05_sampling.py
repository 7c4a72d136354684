"""Classical samplers next to each other on a BA graph.

Each sampler draws the same number of nodes; the table shows how many of
the ten highest-degree nodes survive and the induced subgraph's clustering.
"""
from gti.generators import GeneratorSpec, Model, generate
from gti.sampling import comparison

g = generate(GeneratorSpec(Model.BA, n=500, m=2, seed=0))
for target in (25, 100):
    rows, _ = comparison(g, target_nodes=target, seed=0)
    print(f"target {target} nodes")
    print(f"  {'method':12s} {'edges':>6s} {'hubs':>5s} {'mean cc':>8s}")
    for r in rows:
        print(f"  {r.method:12s} {r.edges:6d} {r.hubs_retained:5d} {r.mean_cc:8.3f}")
