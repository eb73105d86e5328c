"""Independent reference implementations used as test oracles.

Deliberately slow and literal: plain Python loops, no shared code with
the package. When a production routine and its oracle disagree, trust
neither until the discrepancy is understood.
"""

import math

import numpy as np


def persistence_rows(window, k):
    """k copies of the last row of window."""
    last = list(window[-1])
    return [list(last) for _ in range(k)]


def nmse_term(x_true, x_pred, delta):
    return ((x_true - x_pred) / delta) ** 2


def nrmse_one(truth, pred, deltas):
    """Root of the NMSE average over one k-step, l-parameter prediction."""
    k = len(truth)
    l = len(truth[0])
    s = 0.0
    for i in range(k):
        for p in range(l):
            s += nmse_term(truth[i][p], pred[i][p], deltas[p])
    return math.sqrt(s / (l * k))


def nrmse_whole(matrix, m, k, deltas, predict):
    """Dataset NRMSE by brute force.

    Walks every prediction instant j = m .. n-k-1 (0-based), feeds the
    window of rows j-m+1 .. j to `predict`, scores rows j+1 .. j+k, and
    averages the squared per-instant scores over n - m - k instants.
    """
    n = len(matrix)
    count = n - m - k
    if count < 1:
        raise ValueError("no prediction instants")
    total = 0.0
    for j in range(m, n - k):
        window = [list(matrix[r]) for r in range(j - m + 1, j + 1)]
        pred = predict(window)
        s = 0.0
        for i in range(k):
            for p in range(len(deltas)):
                s += nmse_term(matrix[j + 1 + i][p], pred[i][p], deltas[p])
        total += s / (len(deltas) * k)
    return math.sqrt(total / count)


def central_difference(f, x, h=1e-6):
    """Gradient of scalar f at x by central differences, one component at a time."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] += h
        hi = f(bumped)
        bumped[i] -= 2 * h
        lo = f(bumped)
        grad[i] = (hi - lo) / (2 * h)
    return grad


def resample_brute(records, t_from, t_to, step=1.0):
    """Forward-padded resample by linear scan, one cell at a time.

    records: iterable of (timestamp, value) for a single parameter.
    Returns (times, values, padded, missing) lists. A cell at grid time
    t holds the value of the latest record with timestamp <= t; it is
    padded when no record lies in (t - step, t], and missing when no
    record exists at or before t at all.
    """
    recs = sorted(records)
    times, values, padded, missing = [], [], [], []
    t = math.ceil(t_from / step - 1e-9) * step
    stop = math.floor(t_to / step + 1e-9) * step
    while t <= stop + 1e-9:
        latest = None
        fresh = False
        for ts, val in recs:
            if ts <= t + 1e-12:
                latest = val
                if ts > t - step + 1e-12:
                    fresh = True
            else:
                break
        times.append(t)
        values.append(latest)
        padded.append(not fresh)
        missing.append(latest is None)
        t += step
    return times, values, padded, missing


def bilinear_time_point(corners_t0, corners_t1, fx, fy, ft):
    """Bilinear in space, linear in time.

    corners_*: ((v00, v10), (v01, v11)) where vXY is the value at
    x-index X, y-index Y; fx, fy, ft are fractions in [0, 1].
    """
    def plane(c):
        (v00, v10), (v01, v11) = c
        bottom = v00 * (1 - fx) + v10 * fx
        top = v01 * (1 - fx) + v11 * fx
        return bottom * (1 - fy) + top * fy

    return plane(corners_t0) * (1 - ft) + plane(corners_t1) * ft
