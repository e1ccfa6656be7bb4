"""Reverse-mode tape basics: gradients, nested Hessians, and checking.

The scalar tape is the slow-but-general derivative engine. Training uses a
vectorized layer-by-layer pass instead; the tape is what everything else is
verified against, so it earns a demo of its own.
"""

import numpy as np

from minsurf.autodiff import (Tape, check_derivatives,
                              eval_with_input_derivatives, exp, sin)


def f(xs):
    # f(x) = sin(x1) * exp(x2 / 2) + x1 * x2
    return sin(xs[0]) * exp(xs[1] / 2) + xs[0] * xs[1]


tape = Tape()
x = [tape.input_var(0.8), tape.input_var(-0.3)]
y = f(x)
print("f(0.8, -0.3) =", y.value)

# first derivatives come from one reverse sweep (plain floats)
gx, gy = tape.gradient(y, x)
print("gradient     =", (gx, gy))

# with create_graph each gradient entry is itself a node, so a second
# sweep gives a Hessian row
row0 = tape.gradient(tape.gradient(y, x, create_graph=True)[0], x)
print("hessian row 0 =", row0)

# same numbers without managing the tape by hand
bundle = eval_with_input_derivatives(f, [0.8, -0.3])
print("\nbundle value   ", bundle.value)
print("bundle gradient", bundle.gradient)
print("bundle hessian\n", bundle.hessian)
assert np.allclose(bundle.hessian[0], row0)

# the tape can re-run with moved inputs, which is how the finite-difference
# checker probes it
tape.set_value(x[0], 0.8 + 1e-6)
tape.recompute()
print("\nforward difference ~ df/dx1:", (y.value - bundle.value) / 1e-6)

report = check_derivatives(f, [0.8, -0.3], step=1e-5)
print("checker gradient max rel err:", report.gradient_max_rel_error)
print("checker hessian  max rel err:", report.hessian_max_rel_error)
print("clean (no kinks near the evaluation point):", report.clean)
