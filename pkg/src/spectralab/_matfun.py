"""Matrix functions of real antisymmetric and symmetric matrices.

Antisymmetric matrices are reduced once to real Schur form, which is
block diagonal with 2x2 rotation generators; even/odd scalar functions
are then applied per block.  All small-argument branches switch to
series at |x| < 1e-4 so that values and first derivatives stay smooth
through zero.
"""

import numpy as np
from scipy.linalg import schur


def skew_blocks(F, tol=1e-12):
    """Decompose real antisymmetric F = Q T Q^T.

    Returns (Q, b, n0) where b holds the positive rotation rates of the
    2x2 blocks (T[2i, 2i+1] = b_i on the leading block rows) and n0 is
    the dimension of the kernel.  Columns of Q are ordered so the 2x2
    blocks come first, kernel directions last.
    """
    F = np.asarray(F, dtype=float)
    if F.shape[0] != F.shape[1]:
        raise ValueError("square matrix required")
    scale = np.max(np.abs(F)) if F.size else 0.0
    if scale == 0.0:
        n = F.shape[0]
        return np.eye(n), np.zeros(0), n
    if np.max(np.abs(F + F.T)) > 100 * tol * max(scale, 1.0):
        raise ValueError("matrix is not antisymmetric")
    T, Q = schur(F, output="real")
    n = F.shape[0]
    pair_cols = []
    zero_cols = []
    rates = []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > tol * max(scale, 1.0):
            b = T[i, i + 1]
            if b < 0:
                # flip orientation so the stored rate is positive
                pair_cols.extend([i + 1, i])
                rates.append(-b)
            else:
                pair_cols.extend([i, i + 1])
                rates.append(b)
            i += 2
        else:
            zero_cols.append(i)
            i += 1
    order = pair_cols + zero_cols
    return Q[:, order], np.array(rates), len(zero_cols)


def _series_eval(x, coeffs):
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x * x + c
    return out


def x_coth_x(x):
    """x*coth(x), even, value 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = xs / np.tanh(xs)
    ser = _series_eval(x, [1.0, 1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0])
    return np.where(small, ser, out)


def coth_minus_inv(x):
    """coth(x) - 1/x, odd, slope 1/3 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = 1.0 / np.tanh(xs) - 1.0 / xs
    ser = x * _series_eval(x, [1.0 / 3.0, -1.0 / 45.0, 2.0 / 945.0])
    return np.where(small, ser, out)


def sinh_x_over_x(x):
    """sinh(x)/x, even, value 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    out = np.sinh(xs) / xs
    ser = _series_eval(x, [1.0, 1.0 / 6.0, 1.0 / 120.0])
    return np.where(small, ser, out)


def log_sinh_ratio(x):
    """log(sinh(x)/x) for x >= 0, overflow safe for large x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    big = x > 30.0
    xs = np.where(small | big, 1.0, x)
    mid = np.log(np.sinh(xs) / xs)
    ser = x * x / 6.0 - x ** 4 / 180.0
    # sinh x = e^x (1 - e^{-2x}) / 2
    large = x - np.log(np.where(big, 2.0 * x, 1.0)) + np.log1p(
        -np.exp(-2.0 * np.where(big, x, 1.0)))
    return np.where(small, ser, np.where(big, large, mid))


def even_matrix_function(F, f_even):
    """f(F) for antisymmetric F and even scalar f.

    f_even(b) must accept the nonnegative block rates; the kernel block
    receives f_even(0).  The result is symmetric.
    """
    Q, b, n0 = skew_blocks(F)
    vals = []
    fb = f_even(b) if b.size else np.zeros(0)
    for v in fb:
        vals.extend([v, v])
    f0 = float(f_even(np.zeros(1))[0])
    vals.extend([f0] * n0)
    return (Q * np.array(vals)) @ Q.T


def odd_matrix_function(F, g_odd_over_x):
    """g(F) for antisymmetric F and odd scalar g, via g(x) = x * h(x^2-ish).

    g_odd_over_x(b) must return g(b)/b extended continuously to b = 0.
    The result is antisymmetric, computed as h(blocks) * F.
    """
    Q, b, n0 = skew_blocks(F)
    vals = []
    hb = g_odd_over_x(b) if b.size else np.zeros(0)
    for v in hb:
        vals.extend([v, v])
    h0 = float(g_odd_over_x(np.zeros(1))[0])
    vals.extend([h0] * n0)
    H = (Q * np.array(vals)) @ Q.T
    return H @ np.asarray(F, dtype=float)


def spd_sqrt(G):
    """Symmetric positive definite square root and its inverse."""
    G = np.asarray(G, dtype=float)
    w, V = np.linalg.eigh(G)
    if np.any(w <= 0):
        raise ValueError("matrix is not positive definite")
    s = np.sqrt(w)
    return (V * s) @ V.T, (V / s) @ V.T
