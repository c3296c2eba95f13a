"""Motif-enhanced meta-path similarity and the MF + FM rating predictor built on it."""

__version__ = "0.1.0"

from .errors import MohinrecError, ParseError, ShapeError, TrainingError, UsageError, ValidationError
from .sparse import SparseMatrix, add_scaled, entry, hadamard, spmm, transpose
from .ingest import HinGraph, RatingDataset, build_hin, parse_ratings, parse_trust
from .motif import MotifId, motif_adjacency, motif_adjacency_bruteforce, split_edges
from .memp import P1, P2, MempConfig, MetaPath, blend, commuting_matrix, path_count_bruteforce
from .factorization import LatentFeatures, MfConfig, factorize, mf_gradient, mf_loss
from .fm import FmConfig, FmModel, assemble_features, fm_gradient, fm_predict, fm_train
from .evaluation import ExperimentConfig, SplitConfig, mae, rmse, run_experiment, run_sweep, split
