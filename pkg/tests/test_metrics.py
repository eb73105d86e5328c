"""Forecast error metrics, window bookkeeping, and dataset splitting."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windtwin.errors import (
    DegenerateDelta, EmptyDataset, ShapeMismatch, TaskMismatch,
)
from windtwin.forecast.metrics import (
    Dataset, ForecastTask, chronological_pair, nmse, nrmse_dataset,
    nrmse_single, prediction_instants,
)
from windtwin.forecast.nets import PersistenceModel
from windtwin.store import FrameSeries, NormalizationStats

from oracles import nrmse_one, nrmse_whole, persistence_rows


def task_ab(m=3, k=2, l=2, timescale="seconds"):
    return ForecastTask(timescale, m, k, tuple(f"P{i}" for i in range(l)))


def make_frames(values, step=1.0, start=0.0, missing=None):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    names = tuple(f"P{i}" for i in range(p))
    miss = np.zeros((n, p), bool) if missing is None else np.asarray(missing, bool)
    return FrameSeries(start, step, names, values,
                       np.zeros((n, p), bool), miss,
                       NormalizationStats.from_matrix(list(names), values))


# point metric


def test_nmse_worked_values():
    assert nmse(2.0, 1.0, 2.0) == 0.25
    assert nmse(7.31, 7.31, 0.5) == 0.0
    assert nmse(1.0, 0.0, 1.0) == 1.0


def test_nmse_is_symmetric_in_sign_of_error():
    assert nmse(3.0, 5.0, 4.0) == nmse(5.0, 3.0, 4.0)


def test_nmse_rejects_nonpositive_delta():
    with pytest.raises(DegenerateDelta):
        nmse(1.0, 0.0, 0.0)
    with pytest.raises(DegenerateDelta):
        nmse(1.0, 0.0, np.array([1.0, -2.0]))


# single-prediction score


def test_nrmse_single_zero_when_exact():
    truth = np.arange(8.0).reshape(4, 2)
    assert nrmse_single(truth, truth.copy(), np.array([3.0, 9.0])) == 0.0


def test_nrmse_single_one_when_off_by_one_delta_everywhere():
    rng = np.random.default_rng(0)
    truth = rng.normal(size=(5, 3))
    deltas = np.array([0.5, 2.0, 7.0])
    assert nrmse_single(truth, truth + deltas, deltas) == pytest.approx(1.0, abs=1e-15)


def test_nrmse_single_two_step_example():
    # errors 0.1 and 0.3 with unit span: sqrt((0.01 + 0.09) / 2)
    got = nrmse_single([[1.0], [2.0]], [[1.1], [2.3]], [1.0])
    assert got == pytest.approx(np.sqrt(0.05), rel=1e-12)


def test_nrmse_single_shape_errors():
    with pytest.raises(ShapeMismatch):
        nrmse_single(np.zeros((2, 2)), np.zeros((2, 3)), np.ones(2))
    with pytest.raises(ShapeMismatch):
        nrmse_single(np.zeros((2, 2)), np.zeros((2, 2)), np.ones(3))
    with pytest.raises(ShapeMismatch):
        nrmse_single(np.zeros(4), np.zeros(4), np.ones(4))


def test_nrmse_single_matches_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        k = int(rng.integers(1, 6))
        l = int(rng.integers(1, 4))
        truth = rng.normal(size=(k, l))
        pred = rng.normal(size=(k, l))
        deltas = rng.uniform(0.1, 5.0, size=l)
        got = nrmse_single(truth, pred, deltas)
        want = nrmse_one(truth.tolist(), pred.tolist(), deltas.tolist())
        assert got == pytest.approx(want, rel=1e-12)


# prediction instants and window arithmetic


def test_instants_minimal_series():
    # n = m + k + 1 leaves exactly one instant, j = m
    js = prediction_instants(6, 3, 2)
    assert js.tolist() == [3]
    assert prediction_instants(5, 3, 2).size == 0


@given(st.integers(0, 500), st.integers(1, 40), st.integers(1, 20))
def test_instant_count_is_n_minus_m_minus_k(n, m, k):
    js = prediction_instants(n, m, k)
    assert js.size == max(0, n - m - k)
    if js.size:
        assert js[0] == m and js[-1] + k == n - 1


def test_counts_at_the_three_operating_scales():
    m, k = 30, 10
    for n, expect in [(9_300_040, 9.3e6), (155_040, 155e3), (2_640, 2.6e3)]:
        count = max(0, n - m - k)
        assert count == prediction_instants(n, m, k).size
        assert abs(count - expect) / expect < 0.01


def test_windows_use_exact_row_ranges():
    task = task_ab(m=4, k=3, l=2)
    # encode the row index in every cell so gathered windows expose it
    matrix = np.repeat(np.arange(30.0)[:, None], 2, axis=1)
    ds = Dataset(matrix, task)
    js = ds.instants()
    ins = ds.inputs_at(js)
    outs = ds.targets_at(js)
    for row, j in enumerate(js):
        assert ins[row, :, 0].tolist() == list(range(j - 3, j + 1))
        assert outs[row, :, 0].tolist() == list(range(j + 1, j + 4))
        assert ins[row].max() < outs[row].min()  # inputs never touch targets


def test_invalid_rows_drop_every_touching_instant():
    task = task_ab(m=3, k=2, l=1)
    n = 20
    valid = np.ones(n, bool)
    valid[[7, 15]] = False
    ds = Dataset(np.zeros((n, 1)), task, valid=valid)
    keep = []
    for j in range(3, n - 2):
        if all(valid[j - 2:j + 3]):
            keep.append(j)
    assert ds.instants().tolist() == keep
    assert ds.n_samples == len(keep)


def test_dataset_rejects_wrong_column_count():
    with pytest.raises(ShapeMismatch):
        Dataset(np.zeros((10, 3)), task_ab(l=2))
    with pytest.raises(ShapeMismatch):
        Dataset(np.zeros((10, 2)), task_ab(l=2), valid=np.ones(9, bool))


# dataset score


def test_dataset_score_zero_for_persistence_on_constant():
    task = task_ab(m=3, k=2, l=2)
    ds = Dataset(np.full((40, 2), 0.37), task)
    assert nrmse_dataset(PersistenceModel(task), ds) == 0.0


def test_dataset_score_single_instant_reduces_to_single():
    task = task_ab(m=3, k=2, l=2)
    rng = np.random.default_rng(2)
    matrix = rng.uniform(size=(6, 2))
    ds = Dataset(matrix, task)
    whole = nrmse_dataset(PersistenceModel(task), ds)
    pred = np.repeat(matrix[3:4], 2, axis=0)  # last input row, twice
    single = nrmse_single(matrix[4:6], pred, np.ones(2))
    assert whole == pytest.approx(single, rel=1e-12)


def test_dataset_score_raises_when_no_instants():
    task = task_ab(m=3, k=2, l=1)
    with pytest.raises(EmptyDataset):
        nrmse_dataset(PersistenceModel(task), Dataset(np.zeros((5, 1)), task))
    with pytest.raises(EmptyDataset):
        nrmse_dataset(PersistenceModel(task),
                      Dataset(np.zeros((9, 1)), task, valid=np.zeros(9, bool)))


def test_dataset_score_rejects_mismatched_task():
    data = Dataset(np.zeros((20, 1)), task_ab(m=3, k=2, l=1))
    with pytest.raises(TaskMismatch):
        nrmse_dataset(PersistenceModel(task_ab(m=4, k=2, l=1)), data)


def test_dataset_score_matches_triple_loop_oracle():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m = int(rng.integers(1, 11))
        k = int(rng.integers(1, 6))
        l = int(rng.integers(1, 4))
        n = int(rng.integers(m + k + 1, 201))
        matrix = rng.uniform(size=(n, l))
        task = task_ab(m=m, k=k, l=l)
        got = nrmse_dataset(PersistenceModel(task), Dataset(matrix, task))
        want = nrmse_whole(matrix.tolist(), m, k, [1.0] * l,
                           lambda w: persistence_rows(w, k))
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_dataset_score_chunking_does_not_change_result():
    task = task_ab(m=5, k=3, l=2)
    matrix = np.random.default_rng(4).uniform(size=(300, 2))
    model = PersistenceModel(task)
    ds = Dataset(matrix, task)
    full = nrmse_dataset(model, ds)
    assert nrmse_dataset(model, ds, chunk=7) == pytest.approx(full, rel=1e-14)


def test_score_is_scale_free_in_raw_units():
    # normalizing columns of wildly different magnitude and scoring with
    # unit spans must equal scoring raw values against their raw spans
    rng = np.random.default_rng(5)
    raw = np.column_stack([
        rng.uniform(100.0, 250.0, size=120),
        rng.uniform(1e-3, 2e-3, size=120),
        rng.uniform(-40.0, 15.0, size=120),
    ])
    names = ("P0", "P1", "P2")
    stats = NormalizationStats.from_matrix(names, raw)
    task = task_ab(m=6, k=4, l=3)
    ds = Dataset(stats.normalize(raw), task, stats)
    got = nrmse_dataset(PersistenceModel(task), ds)
    want = nrmse_whole(raw.tolist(), 6, 4, stats.deltas.tolist(),
                       lambda w: persistence_rows(w, 4))
    assert got == pytest.approx(want, rel=1e-9)


# building datasets from frame series


def test_from_frames_checks_step_and_parameters():
    fs = make_frames(np.random.default_rng(6).uniform(size=(50, 2)), step=60.0)
    with pytest.raises(TaskMismatch):
        Dataset.from_frames(fs, task_ab(l=2, timescale="seconds"))
    with pytest.raises(TaskMismatch):
        Dataset.from_frames(fs, ForecastTask("minutes", 3, 2, ("P0", "NoSuch")))


def test_from_frames_normalizes_with_own_stats():
    vals = np.column_stack([np.linspace(10.0, 30.0, 40),
                            np.linspace(-5.0, 5.0, 40)])
    ds = Dataset.from_frames(make_frames(vals), task_ab(l=2))
    assert ds.matrix.min() == pytest.approx(0.0)
    assert ds.matrix.max() == pytest.approx(1.0)
    assert ds.stats.deltas.tolist() == [20.0, 10.0]


def test_from_frames_missing_cells_invalidate_rows():
    vals = np.random.default_rng(7).uniform(size=(30, 2))
    missing = np.zeros((30, 2), bool)
    missing[11, 1] = True
    ds = Dataset.from_frames(make_frames(vals, missing=missing), task_ab(l=2))
    assert not ds.valid[11] and ds.valid.sum() == 29
    assert 11 not in set(ds.instants().tolist())


def test_from_frames_accepts_external_stats():
    vals = np.random.default_rng(8).uniform(10.0, 20.0, size=(40, 1))
    fs = make_frames(vals)
    outside = NormalizationStats(("P0",), np.array([0.0]), np.array([40.0]),
                                 np.array([40.0]), np.array([False]))
    ds = Dataset.from_frames(fs, task_ab(l=1), stats=outside)
    assert ds.stats is outside
    assert ds.matrix.max() <= 0.5


def test_chronological_split_shares_training_stats():
    vals = np.random.default_rng(9).uniform(size=(200, 2))
    train, test = chronological_pair(make_frames(vals), task_ab(l=2), 0.10)
    assert train.n == 180 and test.n == 20
    assert test.stats is train.stats
    # the split happens at a row boundary: together they tile the series
    assert np.allclose(train.stats.denormalize(train.matrix), vals[:180])
    assert np.allclose(test.stats.denormalize(test.matrix), vals[180:])


def test_chronological_split_needs_room_on_both_sides():
    vals = np.random.default_rng(10).uniform(size=(10, 1))
    with pytest.raises(EmptyDataset):
        chronological_pair(make_frames(vals), task_ab(m=3, k=2, l=1), 0.5)


# task plumbing


def test_task_validation():
    with pytest.raises(TaskMismatch):
        ForecastTask("fortnights", 3, 2, ("P0",))
    with pytest.raises(TaskMismatch):
        ForecastTask("seconds", 0, 2, ("P0",))
    with pytest.raises(TaskMismatch):
        ForecastTask("seconds", 3, 0, ("P0",))


def test_task_defaults_to_catalog_forecast_set():
    task = ForecastTask()
    assert task.l == 17
    assert task.m == 30 and task.k == 10
    assert task.step == 1.0
    assert "WTUR.ActivePower" in task.parameters


def test_task_dict_round_trip():
    task = ForecastTask("minutes", 12, 4, ("P0", "P1"))
    again = ForecastTask.from_dict(task.to_dict())
    assert again == task and again.step == 60.0
