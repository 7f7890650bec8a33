"""Fair attribute completion for graphs with entirely-missing node attributes."""

from .graph import (DatasetSpec, Graph, NodeSplit, apply_attribute_missing,
                    load_dataset, neighbor_mean_completion, sample_keep_drop,
                    train_test_split)
from .deepwalk import TopoEmbeddingTable, WalkConfig, embed_all
from .model import (EmbeddingSet, FairACConfig, FairACParams,
                    infer_embeddings, train_fairac)
from .gcn import GCNTrainConfig, normalize_adjacency, predict, train_classifier
from .metrics import EvaluationReport, auc, delta_eo, delta_sp, evaluate
from .experiment import (ExperimentConfig, run_alpha_sweep, run_beta_sweep,
                         run_experiment)

__version__ = "0.1.0"
