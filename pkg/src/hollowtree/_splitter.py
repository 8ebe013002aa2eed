"""Exact greedy split search over presorted feature columns.

Each node carries ``order``, a ``(K, m)`` array holding its row indices sorted
by every feature. Candidates are midpoints between consecutive distinct
values; scanning features and thresholds in ascending order with a strict
``>`` keeps the lowest feature, then lowest threshold, on exact ties.
"""

import numpy as np
from numba import njit

# no split is taken unless it improves the criterion by more than this
MIN_IMPROVEMENT = 1e-12


@njit(cache=True)
def _gini(n_pos, n):
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


@njit(cache=True)
def best_gini_split(X, y, order, min_samples_leaf):
    """Return ``(feature, threshold, decrease)``; feature is -1 when nothing helps."""
    n_feat, m = order.shape
    total_pos = 0
    for i in range(m):
        total_pos += y[order[0, i]]
    parent = _gini(total_pos, m)
    best_f, best_t, best_dec = -1, 0.0, 0.0
    for f in range(n_feat):
        pos_left = 0
        for i in range(m - 1):
            r = order[f, i]
            pos_left += y[r]
            n_left = i + 1
            v, v_next = X[r, f], X[order[f, i + 1], f]
            if v_next <= v:
                continue
            if n_left < min_samples_leaf or m - n_left < min_samples_leaf:
                continue
            n_right = m - n_left
            child = (n_left * _gini(pos_left, n_left) + n_right * _gini(total_pos - pos_left, n_right)) / m
            dec = parent - child
            if dec > best_dec:
                best_f, best_t, best_dec = f, 0.5 * (v + v_next), dec
    if best_dec <= MIN_IMPROVEMENT:
        return -1, 0.0, 0.0
    return best_f, best_t, best_dec


@njit(cache=True)
def best_newton_split(X, g, h, order, reg_lambda):
    """XGBoost structure-score gain; returns ``(feature, threshold, gain)``."""
    n_feat, m = order.shape
    G, H = 0.0, 0.0
    for i in range(m):
        G += g[order[0, i]]
        H += h[order[0, i]]
    parent = G * G / (H + reg_lambda)
    best_f, best_t, best_gain = -1, 0.0, 0.0
    for f in range(n_feat):
        gl, hl = 0.0, 0.0
        for i in range(m - 1):
            r = order[f, i]
            gl += g[r]
            hl += h[r]
            v, v_next = X[r, f], X[order[f, i + 1], f]
            if v_next <= v:
                continue
            gr, hr = G - gl, H - hl
            gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent)
            if gain > best_gain:
                best_f, best_t, best_gain = f, 0.5 * (v + v_next), gain
    if best_gain <= MIN_IMPROVEMENT:
        return -1, 0.0, 0.0
    return best_f, best_t, best_gain


@njit(cache=True)
def partition(order, go_left):
    """Split every sorted row list by ``go_left`` (indexed by row), preserving order."""
    n_feat, m = order.shape
    n_left = 0
    for i in range(m):
        if go_left[order[0, i]]:
            n_left += 1
    left = np.empty((n_feat, n_left), dtype=order.dtype)
    right = np.empty((n_feat, m - n_left), dtype=order.dtype)
    for f in range(n_feat):
        li, ri = 0, 0
        for i in range(m):
            r = order[f, i]
            if go_left[r]:
                left[f, li] = r
                li += 1
            else:
                right[f, ri] = r
                ri += 1
    return left, right


def presort(X: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
