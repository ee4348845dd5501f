"""Small numeric helpers shared across modules.

One percentile convention is used everywhere a percentile or quartile
appears in this package: linear interpolation at index (n-1)*q, i.e. the
"type 7" rule that numpy implements as method="linear".
"""

from __future__ import annotations

import math

import numpy as np


def percentile(x, q):
    """Type-7 percentile of ``x`` at ``q`` in [0, 100]."""
    return float(np.percentile(np.asarray(x, dtype=float), q, method="linear"))


def quartiles(x):
    """(Q1, Q3) under the type-7 convention."""
    arr = np.asarray(x, dtype=float)
    return (
        float(np.percentile(arr, 25, method="linear")),
        float(np.percentile(arr, 75, method="linear")),
    )


def median(x):
    """Type-7 median (numpy's interpolated median)."""
    return float(np.median(np.asarray(x, dtype=float)))


def local_maxima(x, start=0, stop=None):
    """Indices of strict local maxima of ``x``, restricted to [start, stop).

    A maximum rises strictly above the previous distinct value and falls to a
    strictly lower one; plateaus report their leftmost index.  Neighbourhoods
    use the full series, so window boundaries never create spurious maxima.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if stop is None:
        stop = n
    out = []
    i = 1
    while i < n - 1:
        if x[i] > x[i - 1]:
            j = i
            while j + 1 < n and x[j + 1] == x[i]:
                j += 1
            if j + 1 < n and x[j + 1] < x[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return [k for k in out if start <= k < stop]


def moving_average3(x):
    """3-point moving average; the two endpoints are left unsmoothed."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return x.copy()
    y = x.copy()
    y[1:-1] = (x[:-2] + x[1:-1] + x[2:]) / 3.0
    return y


def gradient_nonuniform(t, x):
    """Central-difference first derivative; one-sided at the ends.

    f'(t_i) = (x_{i+1} - x_{i-1}) / (t_{i+1} - t_{i-1}) for interior points.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 samples for a central difference")
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
    d[0] = (x[1] - x[0]) / (t[1] - t[0])
    d[-1] = (x[-1] - x[-2]) / (t[-1] - t[-2])
    return d


def second_derivative(t, x, smooth=True):
    """3-point second difference of ``x(t)``; endpoints replicate neighbours.

    With ``smooth`` the samples pass through a 3-point moving average first;
    raw second differences of 30 fps data are too noisy to rank extrema.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 samples for a second difference")
    if smooth:
        x = moving_average3(x)
    dt_f = t[2:] - t[1:-1]
    dt_b = t[1:-1] - t[:-2]
    acc = np.empty_like(x)
    acc[1:-1] = 2.0 * ((x[2:] - x[1:-1]) / dt_f - (x[1:-1] - x[:-2]) / dt_b) / (dt_f + dt_b)
    acc[0] = acc[1]
    acc[-1] = acc[-2]
    return acc


def polygon_area(points):
    """Absolute shoelace area of a polygon given as [(x, y), ...]."""
    pts = np.asarray(points, dtype=float)
    x = pts[:, 0]
    y = pts[:, 1]
    s = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return abs(float(s)) / 2.0


def intersect_lines(slope1, point1, slope2, point2, tol=1e-12):
    """Intersection of two lines given as (slope, point-on-line).

    Returns (x, y); raises ValueError when the slopes differ by less than
    ``tol`` (parallel).
    """
    k1, k2 = float(slope1), float(slope2)
    if abs(k1 - k2) < tol:
        raise ValueError("lines are parallel")
    x1, y1 = point1
    x2, y2 = point2
    x = (y2 - k2 * x2 - y1 + k1 * x1) / (k1 - k2)
    y = y1 + k1 * (x - x1)
    return float(x), float(y)


def shapley_kernel_weights(m):
    """W[k] = k! (m-1-k)! / m! for k = 0..m-1 (subset-size Shapley weights)."""
    fact = [math.factorial(i) for i in range(m + 1)]
    return np.array([fact[k] * fact[m - 1 - k] / fact[m] for k in range(m)], dtype=float)
