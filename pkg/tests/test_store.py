import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windtwin.catalog import load_catalog
from windtwin.errors import EmptyRange, InsufficientHistory, InvalidRange
from windtwin.store import TelemetryRecord, TimeseriesStore

from oracles import resample_brute

CAT = load_catalog()
WS = "WMET.WindSpeed"


def rec(ts, value, pid=WS):
    return TelemetryRecord(float(ts), pid, float(value), "file")


def fresh(records=()):
    store = TimeseriesStore(CAT)
    store.ingest_batch(records)
    return store


def test_ingest_sorts_unordered_batches():
    store = fresh([rec(2, 1.0), rec(0, 2.0), rec(1, 3.0)])
    assert [r.timestamp for r in store.query(0, 10)] == [0.0, 1.0, 2.0]


def test_unphysical_rejected_not_stored():
    store = TimeseriesStore(CAT)
    report = store.ingest_batch([rec(0, -3.0)])
    assert report.rejected_unphysical == 1
    assert report.accepted == 0
    assert store.query(0, 10) == []


def test_duplicate_submission_counts_once():
    store = TimeseriesStore(CAT)
    report = store.ingest_batch([rec(5, 8.0), rec(5, 8.0)])
    assert report.accepted == 1
    assert report.deduplicated == 1
    assert len(store.query(0, 10)) == 1


def test_conflicting_value_last_arrival_wins():
    store = fresh([rec(5, 8.0), rec(5, 9.0)])
    assert store.query(0, 10)[0].value == 9.0


def test_unknown_parameter_skipped_and_counted():
    store = TimeseriesStore(CAT)
    report = store.ingest_batch([rec(0, 1.0, "WXYZ.Bogus"), rec(0, 1.0)])
    assert report.rejected_unknown == 1
    assert report.accepted == 1


def test_query_inclusive_bounds():
    store = fresh([rec(t, 5.0) for t in (0, 1, 2, 3)])
    assert len(store.query(0, 2)) == 3
    assert store.query(1.5, 1.5) == []
    assert TimeseriesStore(CAT).query(0, 100) == []
    with pytest.raises(InvalidRange):
        store.query(3, 1)


def test_resample_forward_fill_example():
    store = fresh([rec(0, 5.0), rec(3, 7.0)])
    fs = store.resample(0, 4, [WS])
    assert fs.values[:, 0].tolist() == [5.0, 5.0, 5.0, 7.0, 7.0]
    assert fs.padded[:, 0].tolist() == [False, True, True, False, True]
    assert not fs.missing.any()
    assert fs.step == 1.0
    assert np.all(np.diff(fs.times) == 1.0)


def test_resample_constant_parameter_keeps_padding_mask():
    store = fresh([rec(0, 4.2), rec(2, 4.2)])
    fs = store.resample(0, 3, [WS])
    assert np.all(fs.values == 4.2)
    assert fs.padded[:, 0].tolist() == [False, True, False, True]


def test_resample_before_first_record_is_missing():
    store = fresh([rec(10, 5.0)])
    fs = store.resample(8, 11, [WS])
    assert fs.missing[:, 0].tolist() == [True, True, False, False]
    assert np.isnan(fs.values[0, 0])


def test_resample_ignores_future_mutation():
    store = fresh([rec(t, 5.0 + t) for t in range(10)])
    before = store.resample(0, 9, [WS])
    store.ingest_batch([rec(10, 55.0), rec(11, 0.1)])
    store.remove(WS, 10.0)
    after = store.resample(0, 9, [WS])
    assert np.array_equal(before.values, after.values)
    assert np.array_equal(before.padded, after.padded)


def test_grid_alignment_from_epoch():
    store = fresh([rec(0, 5.0), rec(10, 6.0)])
    fs = store.resample(2.4, 7.7, [WS])
    assert fs.start == 3.0
    assert fs.times.tolist() == [3.0, 4.0, 5.0, 6.0, 7.0]


def test_normalization_stats_examples():
    store = fresh([rec(0, 2.0), rec(1, 4.0), rec(2, 10.0)])
    stats = store.normalization_stats(0, 2, [WS])
    assert stats.mins[0] == 2.0 and stats.maxs[0] == 10.0 and stats.deltas[0] == 8.0
    assert not stats.constant[0]

    single = fresh([rec(0, 5.0)]).normalization_stats(0, 1, [WS])
    assert single.deltas[0] == 1.0
    assert single.constant[0]

    with pytest.raises(EmptyRange):
        store.normalization_stats(100, 200, [WS])


def test_window_shapes_and_errors():
    store = fresh([rec(t, 5.0 + 0.1 * t) for t in range(40)])
    w = store.window(35.0, 30, [WS])
    assert w.shape == (30, 1)
    assert w[-1, 0] == pytest.approx(8.5)
    one = store.window(35.0, 1, [WS])
    assert one.shape == (1, 1)
    assert one[0, 0] == store.resample(35, 35, [WS]).values[0, 0]
    with pytest.raises(InsufficientHistory):
        store.window(-5.0, 30, [WS])


def test_save_load_round_trip(tmp_path):
    # values chosen to be awkward in decimal
    store = fresh([rec(0, 1 / 3), rec(1, 0.1 + 0.2), rec(2, 59.999999999999996)])
    path = tmp_path / "records.csv"
    store.save(path)
    twin = TimeseriesStore(CAT)
    twin.load(path)
    assert [(r.timestamp, r.value) for r in twin.query(0, 10)] == \
           [(r.timestamp, r.value) for r in store.query(0, 10)]


batches = st.lists(
    st.tuples(st.integers(min_value=0, max_value=30),
              st.floats(min_value=0.0, max_value=60.0,
                        allow_nan=False, allow_infinity=False)),
    min_size=1, max_size=25,
)


@given(batches)
def test_ingest_idempotent(batch):
    records = [rec(t, v) for t, v in batch]
    once = fresh(records)
    twice = fresh(records)
    twice.ingest_batch(records)
    assert once.query(0, 100) == twice.query(0, 100)


@given(batches, st.randoms())
def test_query_sorted_for_any_permutation(batch, rnd):
    # unique timestamps so last-arrival-wins cannot make permutations differ
    records = [rec(t, v) for t, v in dict(batch).items()]
    shuffled = list(records)
    rnd.shuffle(shuffled)
    out = fresh(shuffled).query(0, 100)
    assert out == sorted(out, key=lambda r: (r.timestamp, r.parameter))
    assert out == fresh(records).query(0, 100)


@given(batches)
@settings(max_examples=50)
def test_resample_matches_brute_force(batch):
    records = [rec(t, v) for t, v in batch]
    store = fresh(records)
    fs = store.resample(0, 32, [WS])
    kept = {(r.timestamp, r.value) for r in store.query(0, 100)}
    _, values, padded, missing = resample_brute(sorted(kept), 0, 32)
    for i in range(len(values)):
        assert fs.missing[i, 0] == missing[i]
        assert fs.padded[i, 0] == padded[i]
        if not missing[i]:
            assert fs.values[i, 0] == values[i]


@given(batches)
@settings(max_examples=50)
def test_unpadded_cells_trace_to_fresh_records(batch):
    store = fresh([rec(t, v) for t, v in batch])
    fs = store.resample(0, 32, [WS])
    recs = store.query(0, 100)
    for i, t in enumerate(fs.times):
        if fs.padded[i, 0]:
            continue
        matches = [r.value for r in recs if t - 1.0 < r.timestamp <= t]
        assert fs.values[i, 0] in matches


@given(batches)
@settings(max_examples=30)
def test_save_load_preserves_store(tmp_path_factory, batch):
    store = fresh([rec(t, v) for t, v in batch])
    path = tmp_path_factory.mktemp("rt") / "dump.csv"
    store.save(path)
    twin = TimeseriesStore(CAT)
    twin.load(path)
    assert twin.query(0, 100) == store.query(0, 100)
