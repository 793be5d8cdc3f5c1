from tafa.surrogate.checkpoint import load_model, save_model
from tafa.surrogate.dataset import Dataset, sample_dataset
from tafa.surrogate.mlp import (
    MlpModel,
    Normalizer,
    TrainConfig,
    TrainingDivergedError,
    TrainReport,
    relative_error,
    train_mlp,
)
from tafa.surrogate.search import Candidate, SearchConfig, SearchResult, search_many, search_params
from tafa.surrogate.transfer import TRANSFER_DEFAULTS, TransferModel, transfer_train
