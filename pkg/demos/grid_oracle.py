"""The finite-difference oracle, and how we know it is one.

A damped Picard iteration on a 5-point scheme solves the same boundary value
problem on a square grid. It only works in 2-D and only on squares, but it
needs no training and its error is measurable. Against Scherk's closed form
the n=65 grid lands well under 5e-3, and refining 33 -> 65 cuts the error by
about 4x, the signature of a second-order scheme.
"""

import time

from minsurf.boundary import lookup_builtin
from minsurf.fdm import compare_model_to_grid, solve_fdm
from minsurf.models import scherk_solution
from minsurf.sampling import BoxDomain

domain = BoxDomain.cube(-1.3, 1.3, 2)
g = lookup_builtin("scherk", domain=domain)
exact = scherk_solution()

errors = {}
for n in (17, 33, 65):
    t0 = time.perf_counter()
    grid = solve_fdm(g, domain, n)
    dt = time.perf_counter() - t0
    stats = compare_model_to_grid(exact, grid)
    errors[n] = stats.max_abs
    print(f"n={n:3d}: {grid.iterations:4d} iterations, {dt:5.2f}s, "
          f"converged={grid.converged}, max err vs analytic {stats.max_abs:.3e}")

print(f"\nrefinement 17->33: error / {errors[17] / errors[33]:.2f}")
print(f"refinement 33->65: error / {errors[33] / errors[65]:.2f}")
print("(halving h divides the error by ~4: second order)")
