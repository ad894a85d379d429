import numpy as np
from numba import njit


@njit
def babai(C: np.ndarray, v: np.ndarray):
    """Nearest-plane rounding for the norm ‖C(n - v)‖, C upper triangular."""
    g = C.shape[0]
    n = np.zeros(g, dtype=np.int64)
    d = np.zeros(g)  # n - v
    norm2 = 0.0
    for i in range(g - 1, -1, -1):
        s = 0.0
        for j in range(i + 1, g):
            s += C[i, j] * d[j]
        c = v[i] - s / C[i, i]
        n[i] = np.int64(np.floor(c + 0.5))
        d[i] = n[i] - v[i]
        t = C[i, i] * (n[i] - c)
        norm2 += t * t
    return n, norm2


@njit
def points_within(C: np.ndarray, v: np.ndarray, r2: float, cap: int):
    """Integer points n with ‖C(n - v)‖² <= r2, by depth-first search from the last coordinate.

    Returns (points, norms, count); count is -1 when more than cap points exist.
    """
    g = C.shape[0]
    pts = np.zeros((cap, g), dtype=np.int64)
    norms = np.zeros(cap)
    n = np.zeros(g, dtype=np.int64)
    partial = np.zeros(g + 1)  # partial[i]: contribution of coordinates >= i
    centers = np.zeros(g)
    hi = np.zeros(g, dtype=np.int64)
    count = 0
    i = g - 1
    # start the layer i
    s = 0.0
    centers[i] = v[i]
    w = np.sqrt(max(r2, 0.0)) / C[i, i]
    n[i] = np.int64(np.ceil(centers[i] - w))
    hi[i] = np.int64(np.floor(centers[i] + w))
    while True:
        if n[i] > hi[i]:
            i += 1
            if i == g:
                break
            n[i] += 1
            continue
        t = C[i, i] * (n[i] - centers[i])
        partial[i] = partial[i + 1] + t * t
        if partial[i] > r2:
            n[i] += 1
            continue
        if i == 0:
            if count >= cap:
                return pts, norms, -1
            for j in range(g):
                pts[count, j] = n[j]
            norms[count] = partial[0]
            count += 1
            n[0] += 1
            continue
        i -= 1
        s = 0.0
        for j in range(i + 1, g):
            s += C[i, j] * (n[j] - v[j])
        centers[i] = v[i] - s / C[i, i]
        w = np.sqrt(max(r2 - partial[i + 1], 0.0)) / C[i, i]
        n[i] = np.int64(np.ceil(centers[i] - w))
        hi[i] = np.int64(np.floor(centers[i] + w))
    return pts, norms, count


@njit
def nearest_point(C: np.ndarray, v: np.ndarray, cap: int):
    """Closest lattice point to v for ‖C·‖ and its squared distance."""
    n, r2 = babai(C, v)
    pts, norms, count = points_within(C, v, r2 * (1 + 1e-9) + 1e-12, cap)
    if count <= 0:
        return n, r2
    best = 0
    for k in range(1, count):
        if norms[k] < norms[best]:
            best = k
    return pts[best], norms[best]


@njit
def ellipsoid_count(C: np.ndarray, v: np.ndarray, r2: float) -> int:
    """Number of integer points with ‖C(n - v)‖² <= r2, without storing them."""
    g = C.shape[0]
    n = np.zeros(g, dtype=np.int64)
    partial = np.zeros(g + 1)
    centers = np.zeros(g)
    hi = np.zeros(g, dtype=np.int64)
    count = 0
    i = g - 1
    centers[i] = v[i]
    w = np.sqrt(max(r2, 0.0)) / C[i, i]
    n[i] = np.int64(np.ceil(centers[i] - w))
    hi[i] = np.int64(np.floor(centers[i] + w))
    while True:
        if n[i] > hi[i]:
            i += 1
            if i == g:
                break
            n[i] += 1
            continue
        t = C[i, i] * (n[i] - centers[i])
        partial[i] = partial[i + 1] + t * t
        if i == 0:
            if partial[0] <= r2:
                count += 1
            n[0] += 1
            continue
        if partial[i] > r2:
            n[i] += 1
            continue
        i -= 1
        s = 0.0
        for j in range(i + 1, g):
            s += C[i, j] * (n[j] - v[j])
        centers[i] = v[i] - s / C[i, i]
        w = np.sqrt(max(r2 - partial[i + 1], 0.0)) / C[i, i]
        n[i] = np.int64(np.ceil(centers[i] - w))
        hi[i] = np.int64(np.floor(centers[i] + w))
    return count
