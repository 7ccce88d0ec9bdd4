"""
A small version of the comparison table
=======================================

The command line ``gnmfsmc benchmark`` runs every variant over several
seeds and writes a table of mean RMS angles. Here we call the same code
directly on fewer seeds and a smaller map so it finishes in seconds.
"""

from gnmfsmc.cli import render_table, run_benchmark, summarize

rows = run_benchmark({"rows": 60, "cols": 60, "seeds": 3, "alpha": 0.1, "beta": 0.1,
                      "max_iterations": 300, "workers": 1})
for r in rows:
    print(f"seed {r['seed']} {r['variant']:<9} SAD {r['rms_sad_deg']:6.2f}  AAD {r['rms_aad_deg']:6.2f}")
print()
print(render_table(summarize(rows)))
