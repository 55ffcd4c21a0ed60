"""Gauss-Legendre quadrature: a global adaptive integrator for scalar
integrals and a batched composite rule for many intervals at once."""

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

NODES_PER_PANEL = 15
_X15, _W15 = np.polynomial.legendre.leggauss(NODES_PER_PANEL)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


def _panel(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(f(mid + half * _X15), dtype=float)
    return half * float(np.dot(_W15, vals))


def adaptive_gl(f, a, b, tol=1e-10, rtol=0.0, max_panels=4000):
    """Integrate a vectorized ``f`` over ``[a, b]`` to absolute error ``tol``.

    Each panel is scored by comparing its 15-node value with the sum over its
    two halves; the worst panel is bisected until the summed estimate drops
    below ``max(tol, rtol * |value|)``.

    Raises
    ------
    NumericError
        If ``max_panels`` is reached first; ``estimate`` and ``error`` hold
        the best value and its error bound.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    def score(lo, hi, whole):
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        return abs(whole - left - right), left, right

    whole = _panel(f, a, b)
    err, left, right = score(a, b, whole)
    # heap entries: (-error, lo, hi, refined value, left, right)
    heap = [(-err, a, b, left + right, left, right)]
    total_err = err
    value = left + right
    panels = 1
    while total_err > max(tol, rtol * abs(value)):
        if panels >= max_panels:
            raise NumericError(
                f"adaptive quadrature hit {max_panels} panels",
                estimate=sign * value,
                error=total_err,
            )
        neg_err, lo, hi, val, left, right = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise NumericError("quadrature panel underflow", estimate=sign * value, error=total_err)
        e1, l1, r1 = score(lo, mid, left)
        e2, l2, r2 = score(mid, hi, right)
        heapq.heappush(heap, (-e1, lo, mid, l1 + r1, l1, r1))
        heapq.heappush(heap, (-e2, mid, hi, l2 + r2, l2, r2))
        value += (l1 + r1 + l2 + r2) - val
        total_err += e1 + e2 + neg_err
        panels += 1
    # re-sum to shed the drift of the running totals
    value = sum(entry[3] for entry in heap)
    total_err = sum(-entry[0] for entry in heap)
    return QuadResult(sign * value, total_err, panels)


def composite_nodes(breaks, panels_per_segment):
    """Gauss-Legendre nodes and weights for many rows of breakpoints.

    ``breaks`` has shape ``(rows, k + 1)`` with nondecreasing rows; each of the
    ``k`` segments is split into ``panels_per_segment`` equal panels.  Returns
    ``(x, w)`` of shape ``(rows, k * panels_per_segment * 15)``.
    """
    breaks = np.atleast_2d(np.asarray(breaks, dtype=float))
    p = int(panels_per_segment)
    lo = breaks[:, :-1, None]
    width = (breaks[:, 1:] - breaks[:, :-1])[:, :, None] / p
    starts = lo + width * np.arange(p)[None, None, :]
    half = 0.5 * width
    mids = starts + half
    x = mids[..., None] + half[..., None] * _X15
    w = np.broadcast_to(half[..., None] * _W15, x.shape)
    rows = breaks.shape[0]
    return x.reshape(rows, -1), w.reshape(rows, -1)


def batched_gl(f, breaks, tol=1e-12, rtol=0.0, max_panels=256):
    """Integrate ``f`` over many intervals at once by panel doubling.

    ``f(x)`` receives an array of shape ``(rows, m)`` and returns values of the
    same shape.  Each row's integral runs over its breakpoints.  The number of
    panels per segment doubles until every row changes by no more than
    ``max(tol, rtol * |value|)``.

    Returns ``(values, errors)`` arrays of length ``rows``.
    """
    breaks = np.atleast_2d(np.asarray(breaks, dtype=float))
    p = 1
    x, w = composite_nodes(breaks, p)
    prev = np.sum(w * f(x), axis=1)
    while True:
        p *= 2
        x, w = composite_nodes(breaks, p)
        cur = np.sum(w * f(x), axis=1)
        err = np.abs(cur - prev)
        if np.all(err <= np.maximum(tol, rtol * np.abs(cur))):
            return cur, err
        if p >= max_panels:
            raise NumericError(
                f"batched quadrature did not settle with {p} panels per segment",
                estimate=cur,
                error=err,
            )
        prev = cur
