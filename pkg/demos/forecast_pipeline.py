"""End-to-end forecasting walkthrough at desk scale.

Simulates eight hours of second-resolution turbine telemetry, splits it
chronologically, pretrains a small DNN to imitate persistence before it
ever sees real data, fine-tunes it, trains an LSTM from scratch on the
same split, and prints the benchmark table. Runs in well under a minute
on a laptop; no files are written.

Run with:  python3 demos/forecast_pipeline.py
"""

import time

from windtwin import load_catalog
from windtwin.forecast import (
    ForecastTask,
    TrainConfig,
    benchmark,
    chronological_pair,
    finetune,
    make_model,
    pretrain_persistence,
    train,
)
from windtwin.simulator import SimConfig, frames


def main() -> None:
    catalog = load_catalog()
    params = catalog.forecast_set()[:4]
    task = ForecastTask("seconds", 30, 10, tuple(params))
    print(f"forecast task: {task.m} past frames -> {task.k} future frames")
    print(f"parameters:    {', '.join(params)}")

    t0 = time.time()
    fs = frames(SimConfig(seed=21), 8 * 3600.0, params, step_s=1.0)
    train_data, test_data = chronological_pair(fs, task, test_fraction=0.10)
    print(f"simulated {len(fs)} frames in {time.time() - t0:.1f}s "
          f"({train_data.n_samples} train / {test_data.n_samples} test windows)")

    # Stage 1: the DNN learns to copy the last observed frame from
    # synthetic uniform windows alone. No turbine data is involved yet.
    t0 = time.time()
    dnn = pretrain_persistence("dnn", task, 100_000, threshold=0.02,
                               hidden=(32, 32), seed=2)
    pre = dnn.provenance["pretrain"]
    print(f"pretrained dnn to nrmse {pre['nrmse']:.4f} against persistence "
          f"after {pre['samples_used']} synthetic windows ({time.time() - t0:.1f}s)")

    # Stage 2: a short fine-tune on the real split. Starting from the
    # persistence map means epoch zero already matches the baseline.
    cfg = TrainConfig(max_epochs=2, patience=2, learning_rate=1e-4, seed=2)
    t0 = time.time()
    dnn = finetune(dnn, train_data, cfg)
    for h in dnn.history:
        tr = "-" if h["train_loss"] is None else f"{h['train_loss']:.5f}"
        print(f"  dnn epoch {h['epoch']}: train_loss {tr} "
              f"val_loss {h['val_loss']:.5f}")
    print(f"fine-tuned in {time.time() - t0:.1f}s")

    # The LSTM gets no head start; one epoch from random weights.
    t0 = time.time()
    lstm = train(make_model("lstm", task, seed=2, hidden=(16, 32)),
                 train_data, TrainConfig(max_epochs=1, seed=2))
    print(f"trained lstm from scratch in {time.time() - t0:.1f}s")

    table = benchmark([dnn, lstm], test_data)
    print()
    print(table.text())
    print()
    print("relative < 1.0 means the model beats repeating the last frame.")


if __name__ == "__main__":
    main()
