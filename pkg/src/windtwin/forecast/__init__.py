from .metrics import (
    Dataset,
    ForecastTask,
    TIMESCALE_STEP,
    chronological_pair,
    nmse,
    nrmse_dataset,
    nrmse_single,
    prediction_instants,
)
from .nets import (
    ForecastModel,
    backward,
    dnn_forward,
    load_model,
    lstm_forward,
    make_model,
    persistence_forecast,
    save_model,
)
from .train import TrainConfig, finetune, pretrain_persistence, train
from .bench import Benchmark, benchmark, stack_forecasts

__all__ = [
    "Benchmark",
    "Dataset",
    "ForecastModel",
    "ForecastTask",
    "TIMESCALE_STEP",
    "TrainConfig",
    "backward",
    "benchmark",
    "chronological_pair",
    "dnn_forward",
    "finetune",
    "load_model",
    "lstm_forward",
    "make_model",
    "nmse",
    "nrmse_dataset",
    "nrmse_single",
    "persistence_forecast",
    "prediction_instants",
    "pretrain_persistence",
    "save_model",
    "stack_forecasts",
    "train",
]
