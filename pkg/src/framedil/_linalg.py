"""Small dense linear-algebra helpers used across modules."""
import numpy as np
import scipy.linalg

from .errors import MalformedInputError

RANK_RTOL = 1e-10


def as_matrix(a, rows=None, cols=None, name="matrix"):
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2:
        raise MalformedInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise MalformedInputError(f"{name} has {arr.shape[0]} rows, expected {rows}")
    if cols is not None and arr.shape[1] != cols:
        raise MalformedInputError(f"{name} has {arr.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(arr)):
        raise MalformedInputError(f"{name} has non-finite entries")
    return arr


def op_norm(a):
    """Spectral norm; 0 for empty matrices."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def batched_op_norms(stack):
    """Spectral norms of a (K, r, c) stack."""
    stack = np.asarray(stack)
    if stack.shape[-1] == 0 or stack.shape[-2] == 0:
        return np.zeros(stack.shape[0])
    if stack.shape[-1] == 1 or stack.shape[-2] == 1:
        return np.sqrt(np.sum(np.abs(stack) ** 2, axis=(-2, -1)))
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def adjoint(a):
    return np.conj(np.swapaxes(a, -1, -2))


def inner(u, v):
    """<u, v>, linear in u and conjugate-linear in v."""
    return complex(np.vdot(v, u))


def orth(a, rtol=RANK_RTOL):
    """Orthonormal basis of the column space, cut at rtol * sigma_max."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    if not np.any(a):
        return np.zeros((a.shape[0], 0), dtype=complex)
    return scipy.linalg.orth(a, rcond=rtol)


def null_space(a, rtol=RANK_RTOL):
    a = np.asarray(a, dtype=complex)
    if a.shape[0] == 0 or not np.any(a):
        return np.eye(a.shape[1], dtype=complex)
    return scipy.linalg.null_space(a, rcond=rtol)


def rank(a, rtol=RANK_RTOL):
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def hermitian_part(a):
    return (a + adjoint(a)) / 2


def psd_sqrt(a, clamp=1e-12):
    """Positive square root of a self-adjoint PSD matrix.

    Eigenvalues in [-clamp, 0] are treated as zero; anything more negative
    raises ValueError carrying the offending eigenvalue.
    """
    w, v = np.linalg.eigh(hermitian_part(a))
    if w.size and w[0] < -clamp:
        raise ValueError(float(w[0]))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ adjoint(v)


def polar_unitary(g):
    """Unitary (partial isometry) factor maximizing Re<A, g> over the unit ball."""
    u, _, vh = np.linalg.svd(g)
    return u @ vh
