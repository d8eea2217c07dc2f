"""Arrested coarsening in one picture: a small blue square dies, a large one
survives as a rounded blob.

Runs the sequential majority dynamics from two square initializations on the
same graph family (n = 10^4, tau = 2.15, average degree 20) and writes final
opinion snapshots plus a gnuplot script into demo_output/.
"""

import os

from girglab import cli, dynamics, girg

OUT = "demo_output"
os.makedirs(OUT, exist_ok=True)

k = girg.calibrate_k(20.0, 2, 2.15)
print(f"density k for average degree 20 at tau = 2.15: {k:.5f}")

for side in (10.0, 60.0):
    params = girg.GirgParams(d=2, tau=2.15, k=k, n=10_000, seed=7)
    graph = girg.build_graph(params)
    config = dynamics.init_opinions(graph, dynamics.Square(side=side))
    blue0 = config.blue_count
    config, stats = dynamics.run_until_stable(graph, config, rng=1234)
    print(f"side {side:5.1f}: blue {blue0:5d} -> {stats.final_blue_count:5d} "
          f"after {stats.steps_taken} steps ({stats.flips} flips); "
          f"survived = {stats.survived}")

    prefix = os.path.join(OUT, f"square_s{side:g}")
    girg.write_edge_list(graph, prefix)
    dynamics.write_snapshot(config, prefix + ".final.spins")
    cli.emit_plot_script(
        {"vertices": prefix + ".vertices", "spins": prefix + ".final.spins"},
        "snapshot", prefix + ".plot.gp")
    print(f"   wrote {prefix}.plot.gp (render with: gnuplot -p {prefix}.plot.gp)")
