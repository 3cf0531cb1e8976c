"""Baseline versus optimized cycle errors as the lattice grows, with saturation fits.

Means are pooled over three seeds per size and fit to
e_sat - e_scale * exp(-N / N_sat).
"""
from snakeopt.benchlab import run_scaling_sweep

res = run_scaling_sweep(distances=(3, 5, 7, 9), seeds=(0, 1, 2))
for label in ("Baseline", "Optimized"):
    pts = ", ".join(f"N={n}: {m * 1e3:.2f}e-3" for n, m in res.mean_points(label))
    print(f"{label:>9} means  {pts}")
    fit = res.fits[label]
    if fit is not None:
        print(f"{'':>9} fit    N_sat={fit.n_sat:.1f}  e_scale={fit.e_scale * 1e3:.2f}e-3  e_sat={fit.e_sat * 1e3:.2f}e-3")
