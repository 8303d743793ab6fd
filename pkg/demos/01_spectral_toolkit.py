"""Tour of the spectral toolkit: grids, transforms, derivatives, norms.

Run:  python demos/01_spectral_toolkit.py
"""

import numpy as np

import cubelap as cl

# A periodic surrogate of the real line: the box [-20, 20) with 512 samples.
grid = cl.make_grid(20.0, 512)
print(f"grid: [-{grid.half_length}, {grid.half_length}) with N={grid.n_points}, "
      f"dx={grid.dx:.5f}, wavenumber spacing dp={grid.dp:.5f}")

# The standard gaussian is its own transform under the unitary convention.
f = cl.field_from_function(grid, lambda x: np.exp(-(x**2) / 2.0))
fhat = cl.forward_transform(f)
err = np.max(np.abs(fhat.values - np.exp(-(grid.wavenumbers**2) / 2.0)))
print(f"gaussian self-transform, max abs defect: {err:.3e}")

# Parseval: the L2 norm is the same on either side of the transform.
print(f"L2 physical = {cl.l2_norm(f):.15f}")
print(f"L2 spectral = {cl.l2_norm(fhat):.15f}")

# Spectral differentiation multiplies the spectrum by (i p)^order. The
# sixth derivative is the workhorse of this model.
g = cl.make_grid(np.pi, 64)
sine = cl.field_from_function(g, np.sin)
d6 = cl.to_physical(cl.spectral_derivative(sine, 6))
print(f"d^6/dx^6 sin = -sin, max abs defect: {np.max(np.abs(d6.values + np.sin(g.x))):.3e}")

# The Sobolev norm combines the field and its sixth derivative; for the
# gaussian the closed form is sqrt(sqrt(pi) * (1 + 10395/64)).
hires = cl.make_grid(20.0, 1024)
f2 = cl.field_from_function(hires, lambda x: np.exp(-(x**2) / 2.0))
closed = np.sqrt(np.sqrt(np.pi) * (1.0 + 10395.0 / 64.0))
print(f"H6 norm: computed {cl.h6_norm(f2):.12f}, closed form {closed:.12f}")

# Sup bound diagnostic: max |fhat| never exceeds ||f||_L1 / sqrt(2 pi);
# nonnegative profiles attain equality at p = 0.
lhs, rhs = cl.transform_linf_bound(f)
print(f"sup bound: max|fhat| = {lhs:.12f} <= {rhs:.12f} = ||f||_1/sqrt(2 pi)")

# The box truncation is policed: fields must keep their mass off the edges.
shifted = cl.field_from_function(grid, lambda x: np.exp(-((x - 18.0) ** 2)))
print(f"tail mass of a centered gaussian: {cl.tail_mass_fraction(f):.2e}")
print(f"tail mass of an edge-hugging one: {cl.tail_mass_fraction(shifted):.2e}")
