"""Choosing the envelope and structural dimensions with the BIC-type criterion."""

import numpy as np

from envsdr import DEFAULT_XI_GRID, bic_criterion, build_kernels, default_penalty, select_d
from envsdr import select_d_direct
from envsdr.simgen import ModelSpec, default_kernel_config, generate

spec = ModelSpec("M2", p=9, a=1.0, b=0.3, n=150)
y, x, w, truth = generate(spec, seed=3)
ks = build_kernels(y, x, w, default_kernel_config(spec))
n = spec.n

for mult in (0.5, 1.0, 2.0):
    c_n = default_penalty(n, mult)
    sel = select_d(ks.k_yz, ks.hybrid, DEFAULT_XI_GRID, n, c_n)
    print(f"c_n={c_n:.3f}: d_env={sel.d_env} d={sel.d} direct d={select_d_direct(ks.k_yz, n, c_n)}")

print("true d, d_env:", truth.d_true, truth.d_env_true)

lam = ks.k_yz.eigenvalues()
print("criterion on the direct kernel:", np.round(bic_criterion(lam, n, default_penalty(n)), 3))
