"""DeepLDA: feed-forward networks trained on a generalized LDA eigenvalue objective."""
from .classifier import LdaProjection, evaluate, fit_projection, predict
from .data import Dataset, load_csv, load_idx, warped_blobs
from .linalg import EigenSolution, cholesky, generalized_eigen, sym_eigen
from .network import LayerSpec, NetworkModel, backward, forward, init_model
from .objective import DeepLdaConfig, LossResult, cce_loss, deeplda_loss, select_eigenvalues
from .optim import TrainConfig, TrainMetrics, lr_at, nesterov_step, stratified_batches, train
from .scatter import LabeledBatch, ScatterSet, class_scatter, compute_scatter

__version__ = "0.1.0"
