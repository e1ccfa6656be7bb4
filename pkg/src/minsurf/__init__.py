"""Minimal-surface solver: small networks trained against the PDE residual.

The package trains multilayer perceptrons to satisfy the minimal surface
equation with Dirichlet frame data on 2-, 3-, and 4-dimensional boxes,
with its own reverse-mode autodiff, Adam, and a finite-difference oracle
for 2-D cross-checks. Start with ``load_preset`` / ``train``, or the
``minsurf`` command line.
"""

from .adam import AdamState, adam_step, init_adam
from .boundary import (BoundaryFn, BoundaryPiece, Expr, SourceTerm,
                       builtin_names, eval_g, list_boundaries, lookup_builtin,
                       parse_expression)
from .errors import (CheckpointError, ConfigurationError, EvaluationError,
                     MinsurfError, NumericalError, ParseError, StructuralError,
                     TrainingDiverged)
from .fdm import Grid2D, GridComparison, compare_model_to_grid, solve_fdm
from .models import AnalyticFunctionModel, GraphFunctionModel, NetworkModel, scherk_solution
from .network import (LayerSpec, NetworkParams, NetworkState, canonical_layers,
                      forward, forward_values, init_network, network_bundles)
from .pde import (LossBreakdown, boundary_loss, energy, interior_loss,
                  loss_and_parameter_gradients, residual, residual_statistics,
                  residual_values, total_loss)
from .sampling import (BoxDomain, CornerReport, EdgeDescriptor, SampleSet,
                       build_sample_set, check_corner_consistency,
                       corner_points, enumerate_edges, sample_boundary,
                       sample_interior)
from .slices import (SliceGrid, SliceSpec, evaluate_slice, export_history_json,
                     export_slice_csv, export_slice_svg, read_history_json,
                     read_slice_csv)
from .training import (Checkpoint, ExperimentConfig, HistoryRecord,
                       TrainingHistory, TrainingRun, config_hash,
                       load_checkpoint, load_preset, parse_config,
                       preset_names, read_config, run_training,
                       save_checkpoint, serialize_config, train, write_config)

__version__ = "0.1.0"
