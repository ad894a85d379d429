import itertools

import numpy as np


def box_points(center: np.ndarray, half_width: int) -> np.ndarray:
    """All integer points n with ‖n - round(center)‖_∞ <= half_width, one per row."""
    c = np.rint(center).astype(np.int64)
    g = c.shape[0]
    offsets = np.array(list(itertools.product(range(-half_width, half_width + 1), repeat=g)), dtype=np.int64)
    return offsets + c


def vectorized_norms(C: np.ndarray, v: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """‖C(n - v)‖² for every row n of pts."""
    d = (pts - v) @ C.T
    return np.einsum('ij,ij->i', d, d)


def vectorized_dist_sq(C: np.ndarray, v: np.ndarray, half_width: int = 4) -> float:
    pts = box_points(v, half_width)
    return float(vectorized_norms(C, v, pts).min())


def vectorized_count(C: np.ndarray, v: np.ndarray, r2: float, half_width: int) -> int:
    pts = box_points(v, half_width)
    return int((vectorized_norms(C, v, pts) <= r2).sum())


def vectorized_tail(C: np.ndarray, v: np.ndarray, R: float, p: int, half_width: int) -> float:
    """Σ ‖n-v‖^p exp(-‖n-v‖²) over the box points outside the ellipsoid of radius R."""
    pts = box_points(v, half_width)
    n2 = vectorized_norms(C, v, pts)
    out = n2 >= R * R
    return float((n2[out] ** (p / 2) * np.exp(-n2[out])).sum())


def vectorized_theta(z: np.ndarray, tau: np.ndarray, a: np.ndarray, b: np.ndarray, half_width: int = 8) -> complex:
    """θ_{a,b}(z,τ) by summing e((n+a/2)ᵀτ(n+a/2) + 2(n+a/2)ᵀ(z+b/2)) over a box, in double precision."""
    g = tau.shape[0]
    pts = box_points(np.zeros(g), half_width) + a / 2
    quad = np.einsum('ij,jk,ik->i', pts, tau, pts)
    lin = 2 * pts @ (z + b / 2)
    return complex(np.exp(1j * np.pi * (quad + lin)).sum())
