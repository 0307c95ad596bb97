"""Independent reference implementations used to cross-check the simulator.

These deliberately avoid the simulator's machinery: elementwise ops use plain
numpy formulas, matrix products use explicit Python loops with float64
accumulation, and conv2d walks all six loops directly.  ``im2col`` exposes
the image-to-matrix transform so implicit-GEMM results can be triangulated
three ways (direct conv, mm oracle on im2col, simulated conv kernel).
"""

from __future__ import annotations

import numpy as np

RMS_NORM_EPS = 1e-6


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.float64) + b.astype(np.float64)).astype(np.float32)


def silu(x: np.ndarray) -> np.ndarray:
    x64 = x.astype(np.float64)
    return (x64 / (1.0 + np.exp(-x64))).astype(np.float32)


def softmax(x: np.ndarray) -> np.ndarray:
    x64 = x.astype(np.float64)
    shifted = x64 - x64.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return (e / e.sum(axis=1, keepdims=True)).astype(np.float32)


def rms_norm(x: np.ndarray, weight: np.ndarray, eps: float = RMS_NORM_EPS) -> np.ndarray:
    x64 = x.astype(np.float64)
    ms = (x64 * x64).mean(axis=1, keepdims=True)
    return (x64 / np.sqrt(ms + eps) * weight.astype(np.float64)).astype(np.float32)


def mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += float(a[i, p]) * float(b[p, j])
            out[i, j] = acc
    return out.astype(np.float32)


def bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    assert a.shape[0] == b.shape[0]
    return np.stack([mm(a[i], b[i]) for i in range(a.shape[0])])


def addmm(inp: np.ndarray, mat1: np.ndarray, mat2: np.ndarray,
          beta: float, alpha: float) -> np.ndarray:
    prod = mm(mat1, mat2).astype(np.float64)
    return (beta * inp.astype(np.float64) + alpha * prod).astype(np.float32)


def conv2d(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Direct stride-1, no-padding cross-correlation, NCHW / KCRS layout."""
    n, c, h, wd = x.shape
    k, c2, r, s = w.shape
    assert c == c2
    p, q = h - r + 1, wd - s + 1
    out = np.zeros((n, k, p, q), dtype=np.float64)
    for ni in range(n):
        for ki in range(k):
            for pi in range(p):
                for qi in range(q):
                    acc = 0.0
                    for ci in range(c):
                        for ri in range(r):
                            for si in range(s):
                                acc += float(x[ni, ci, pi + ri, qi + si]) * float(
                                    w[ki, ci, ri, si]
                                )
                    out[ni, ki, pi, qi] = acc
    return out.astype(np.float32)


def im2col(x: np.ndarray, r: int, s: int) -> np.ndarray:
    """Unfold an NCHW image into the (N*P*Q, C*R*S) implicit-GEMM operand."""
    n, c, h, w = x.shape
    p, q = h - r + 1, w - s + 1
    out = np.zeros((n * p * q, c * r * s), dtype=x.dtype)
    row = 0
    for ni in range(n):
        for pi in range(p):
            for qi in range(q):
                col = 0
                for ci in range(c):
                    for ri in range(r):
                        for si in range(s):
                            out[row, col] = x[ni, ci, pi + ri, qi + si]
                            col += 1
                row += 1
    return out


def conv2d_via_im2col(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    n, c, h, wd = x.shape
    k, _, r, s = w.shape
    p, q = h - r + 1, wd - s + 1
    mat = mm(im2col(x, r, s), w.reshape(k, c * r * s).T)
    return mat.reshape(n, p, q, k).transpose(0, 3, 1, 2).copy()
