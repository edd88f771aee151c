"""Kernel-based novelty detection for multi-instance multi-label data.

Training data arrives as bags of instances labeled only at the bag level
with subsets of a known label set. The library learns one kernel score
function per known class from such bags, flags instances whose best class
score falls below a threshold as novel, and ships the surrounding
apparatus: Dirichlet bag synthesis, hyperparameter tuning, ROC/AUC
evaluation, a one-class SVM baseline, and a replicated experiment runner.
"""

from .baseline import (NuSweep, OcsvmModel, known_class_instances, ocsvm_decision,
                       ocsvm_decisions, ocsvm_roc, ocsvm_train)
from .datagen import (BagGenConfig, InstancePool, co_occurrence, dirichlet_sample,
                      gaussian_ring_pool, generate_bags, load_idx, split_pool, toy_dataset)
from .detector import (KNOWN, NOVEL, Detection, RocCurve, detect, max_score, max_scores,
                       roc, roc_from_scores, threshold_grid, trapezoid_area)
from .errors import (ConvergenceError, EvaluationError, FormatError, GenerationError,
                     MimlError, NumericsError, ParameterError, TrainingError)
from .experiment import ExperimentConfig, RunReport, replication_data, run_baseline, run_experiment
from .formats import (load_csv_dataset, load_csv_instances, load_model, read_roc_csv,
                      save_model, write_dataset_csv, write_roc_csv)
from .kernel import KernelConfig, gaussian, gram, kernel_matrix, kernel_vector
from .model import (Bag, LabeledDataset, ScoreModel, TrainConfig, TrainResult, bag_hinge,
                    fixed_support_objective, objective, restrict_known_labels, score,
                    score_matrix, subgradient, support_instances, train)
from .optim import LbfgsConfig, LbfgsResult, PcaProjection, lbfgs_minimize, pca_fit, pca_transform
from .tuning import (GridSpec, TuningReport, default_grid, grid_search, median_sq_distance,
                     zero_one_bag_loss)

__version__ = "0.1.0"
