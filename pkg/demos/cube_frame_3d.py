"""Slicing a 3-D solution we cannot plot directly.

With three inputs the graph of u lives in four dimensions, so the output is
viewed through 2-D slices: pin one coordinate, evaluate on a grid over the
other two. The trig-sum frame is separable, which makes its three zero-faces
look related but not identical.

The full experiment is preset 3d-2 (2000 epochs, a few minutes). The demo
trains a 400-epoch version of it, enough for the surface's shape to settle.
"""

from dataclasses import replace
from pathlib import Path

from minsurf.models import NetworkModel
from minsurf.slices import SliceSpec, evaluate_slice, export_slice_svg
from minsurf.training import load_preset, run_training

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

config = replace(load_preset("3d-2"), epochs=400)
run = run_training(config, on_log=lambda rec: rec.epoch % 100 == 0 and print(
    f"  epoch {rec.epoch:4d}  total {rec.total:.4f}"))
print(f"done: total {run.history.records[0].total:.4f} -> "
      f"{run.history.final.total:.4f}")

model = NetworkModel(run.params)
for axis in range(3):
    spec = SliceSpec(domain=config.domain, fixed={axis: 0.0}, resolution=60)
    grid = evaluate_slice(model, spec)
    path = OUT / f"trig-sum-x{axis + 1}0.svg"
    export_slice_svg(grid, path)
    lo, hi = grid.values.min(), grid.values.max()
    print(f"x{axis + 1}=0 face: free axes {grid.axes}, "
          f"u in [{lo:.3f}, {hi:.3f}] -> {path.name}")
