"""A small replicated study in the style of the benchmark grid.

Runs a few replications of two settings and aggregates the three
subspace measures per method.  Increase ``reps`` to 200 for
publication-scale numbers; 20 replications already place each method
in the right order.
"""

import survdr

for setting_id, methods, d in [
    (1, ["forward", "cpsir", "ircp", "irsemi"], 1),
    (3, ["cpsir", "irsemi"], 2),
]:
    print(f"\nsetting {setting_id} (d={d}), n=400, p=6, 5 replications")
    results = survdr.run_study(
        setting_id, p=6, n=400, reps=5, methods=methods,
        seed=123, d=d, n_jobs=2,
    )
    for method, stats in survdr.aggregate(results).items():
        print(f"  {method:>8}: frob {stats['frob_mean']:.3f} "
              f"({stats['frob_sd']:.3f})  tr {stats['trace_corr_mean']:.3f}  "
              f"ccor {stats['canon_corr_mean']:.3f}  "
              f"[{stats['seconds_mean']:.1f}s/fit]")
