"""Independent numerical oracles used only by the test suite.

Nothing here calls numpy.linalg: the QR eigensolver is built from raw
Householder reflections so it shares no code path with the library it
checks.
"""

import numpy as np


def householder_qr(A):
    """Plain Householder QR factorization A = Q @ R."""
    A = np.array(A, dtype=np.float64)
    n_rows, n_cols = A.shape
    Q = np.eye(n_rows)
    R = A.copy()
    for col in range(min(n_rows - 1, n_cols)):
        x = R[col:, col]
        norm_x = np.sqrt(np.sum(x * x))
        if norm_x == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(norm_x, x[0] if x[0] != 0 else 1.0)
        v_norm2 = np.sum(v * v)
        if v_norm2 == 0.0:
            continue
        # Apply the reflector I - 2 v v^T / (v^T v) from the left
        R[col:, :] -= (2.0 / v_norm2) * np.outer(v, v @ R[col:, :])
        Q[:, col:] -= (2.0 / v_norm2) * np.outer(Q[:, col:] @ v, v)
    return Q, R


def qr_eigenvalues(M, tol=1e-13, max_sweeps=10_000):
    """Eigenvalues of a symmetric matrix by shifted QR iteration.

    Uses the Wilkinson shift with bottom-row deflation, so equal-modulus
    pairs (such as the +/- pairs of bipartite adjacencies) converge too.
    Returns eigenvalues sorted descending.
    """
    A = np.array(M, dtype=np.float64)
    assert A.shape[0] == A.shape[1]
    eigs = []
    scale = max(np.max(np.abs(A)), 1.0)
    for _ in range(max_sweeps):
        n = A.shape[0]
        if n == 0:
            break
        if n == 1:
            eigs.append(A[0, 0])
            break
        if np.sqrt(np.sum(A[n - 1, : n - 1] ** 2)) <= tol * scale:
            eigs.append(A[n - 1, n - 1])
            A = A[: n - 1, : n - 1]
            continue
        a, b, c = A[n - 2, n - 2], A[n - 2, n - 1], A[n - 1, n - 1]
        delta = (a - c) / 2.0
        denom = abs(delta) + np.sqrt(delta * delta + b * b)
        if denom == 0.0:
            mu = c
        else:
            mu = c - np.copysign(1.0, delta if delta != 0 else 1.0) * b * b / denom
        Q, R = householder_qr(A - mu * np.eye(n))
        A = R @ Q + mu * np.eye(n)
    else:
        raise RuntimeError("QR iteration did not converge")
    return np.sort(np.array(eigs))[::-1]


def central_difference_grads(loss_fn, arrays, eps=1e-5):
    """Central finite-difference gradient of loss_fn w.r.t. each array.

    loss_fn takes no arguments and reads the (mutated) arrays; the
    arrays are restored entry by entry after probing.
    """
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            f_plus = loss_fn()
            flat[idx] = orig - eps
            f_minus = loss_fn()
            flat[idx] = orig
            gflat[idx] = (f_plus - f_minus) / (2.0 * eps)
        grads.append(g)
    return grads
