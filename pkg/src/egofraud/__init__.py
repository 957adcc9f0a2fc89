"""Egocentric network indices and random-forest screening for C2C
transaction graphs."""

from .graph import (EgoNetwork, GraphError, IncidentDegrees, TransactionGraph,
                    extract_egonet, incident_degrees, load_edge_file,
                    load_graph, load_label_file, write_edge_file,
                    write_label_file, FRAUD_TYPES, USER_TYPES)
from .features import (FEATURE_SUBSETS, SLOT_NAMES, FeatureVector,
                       LocalIndices, build_feature_table, compute_indices,
                       cycle_probability, encode_features, encode_slots,
                       local_clustering, read_feature_table, select_features,
                       sell_probability, triangle_congregation,
                       weighted_sell_probability, write_feature_table)
from .forest import (ForestConfig, ForestModel, ModelFormatError, deserialize,
                     fit, load_model, save_model, serialize)
from .evaluation import (CurvePoints, EvalReport, EvaluationError,
                         ExperimentSpec, GridSpec, auc, balance_and_split,
                         derive_seed, grid_search, mean_curve,
                         permutation_importance, pr_curve, roc_auc, roc_curve,
                         run_experiment)
from .stats import (TypeStats, descriptive_stats, indices_by_type,
                    scatter_sets, stats_csv_rows, stats_table, survival_points,
                    survival_sets)
from .synth import (ArchetypeConfig, CalibrationReport, InfeasibleConfigError,
                    LabeledDataset, SynthConfig, generate, load_config,
                    load_default_config, validate)

__version__ = "0.1.0"
