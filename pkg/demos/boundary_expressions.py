"""
Boundary frames from text formulas
==================================

Every experiment starts from Dirichlet data g on the edge frame of a box.
This script walks the expression grammar that defines g: parsing, pointwise
and vectorized evaluation, per-face pieces, and the corner diagnostic that
catches frames whose faces disagree where they meet.
"""

import numpy as np

from minsurf.boundary import (builtin_names, list_boundaries, lookup_builtin,
                              parse_expression)
from minsurf.sampling import BoxDomain, check_corner_consistency

# a formula is plain text: variables x1..xd, + - * / ^, function calls,
# pi, and norm2(...) for euclidean distance
expr = parse_expression("sin(norm2(5*(x1 - 0.5), 5*(x2 - 0.5)))")
print("parsed:", expr.unparse())
print("value at the center:", expr.eval_at([0.5, 0.5]))

X = np.array([[0.0, 0.0], [1.0, 0.0], [0.25, 0.75]])
print("vectorized:", expr.evaluate(X))

# the package ships the frames used throughout the experiments
print("\nbuiltin boundaries:")
for name, dim, description in list_boundaries():
    print(f"  {name:<15} {dim}d  {description}")
assert builtin_names() == [n for n, _, _ in list_boundaries()]

# four_sided_2d gives each edge of the unit square its own formula; shared
# corners go to the piece with the lowest (axis, side) pair
g = lookup_builtin("four_sided_2d")
print("\npiece values at corner (0, 1):")
for label, value in g.piece_values([0.0, 1.0]):
    print(f"  {label}: {value:g}")

# two of its corners disagree on purpose; a trained surface has to split
# the difference there
report = check_corner_consistency(g, BoxDomain.unit(2))
print("\ncorner report:")
for entry in report.entries:
    status = "MISMATCH" if entry.mismatch > report.tol else "ok"
    print(f"  {entry.corner}: spread {entry.mismatch:g} [{status}]")
