"""Anytime random forest inference at single-step granularity."""
from .anytime import AnytimeExecutor, execute, execute_batch, execute_with_budget
from .cart import train_forest
from .data import Dataset, DatasetSplits, load_csv, split, synthetic_dataset
from .errors import (AnyforestError, DataError, LatticeCapExceeded, SchemaError, StructureError,
                     UnsupportedForestError)
from .evaluation import EvalReport, ExperimentConfig, accuracy_curve, nma, run_experiment
from .forest import AnytimeState, Forest, Node, Tree, combined_prediction, full_inference, tree_step
from .lattice import (RoutingTable, StepOrder, backward_squirrel, enumerate_all_orders, forward_squirrel,
                      mean_accuracy, optimal_order, precompute_routing, random_order, state_accuracy,
                      unoptimal_order)
from .sequences import (breadth_order, depth_order, sequence_drep, sequence_error_ambiguity,
                        sequence_individual_error, sequence_qwyc, sequence_reduced_error)
from .serialization import export_forest, import_forest

__version__ = "0.1.0"
