from .data import SplitError, SplitSpec, allocate, class_weights, stratified_indices, stratified_split
from .encoding import (
    F,
    F_REGISTER,
    FEATURE_SETS,
    REGISTER,
    Column,
    EncodingError,
    FeatureMatrix,
    RegisterInfo,
    encode,
    register_columns,
    schema_columns,
)
from .forest import ForestModel, train_forest
from .gbt import GbtModel, TrainingError, train_gbt
from .knn import KnnModel, train_knn
from .logistic import LogisticModel, logistic_loss_and_grad, train_logistic
from .model import FAMILIES, KNN, LR, RF, XGB, ModelError, TrainedModel, fit
from .search import DEFAULT_GRIDS, SearchEntry, SearchError, grid_points, grid_search, write_search_log

__all__ = [
    "Column",
    "EncodingError",
    "F",
    "FAMILIES",
    "FEATURE_SETS",
    "F_REGISTER",
    "FeatureMatrix",
    "ForestModel",
    "GbtModel",
    "KNN",
    "KnnModel",
    "LR",
    "LogisticModel",
    "ModelError",
    "REGISTER",
    "RF",
    "RegisterInfo",
    "SearchEntry",
    "SearchError",
    "SplitError",
    "SplitSpec",
    "DEFAULT_GRIDS",
    "TrainedModel",
    "TrainingError",
    "XGB",
    "allocate",
    "class_weights",
    "encode",
    "fit",
    "grid_points",
    "grid_search",
    "logistic_loss_and_grad",
    "register_columns",
    "schema_columns",
    "stratified_indices",
    "stratified_split",
    "train_forest",
    "train_gbt",
    "train_knn",
    "train_logistic",
    "write_search_log",
]
