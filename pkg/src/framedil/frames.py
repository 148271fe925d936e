"""Finite frames: analysis/frame operators, bounds, duals and orthogonal dilations.

Vectors of a family are stored as the rows of an (m, d) complex array.
Inner products are linear in the first slot, so the analysis operator has
rows conj(x_i) and its adjoint sends e_i to x_i.
"""
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import MalformedInputError, NotADualPairError, NotAFrameError, PreconditionError

PARSEVAL_TOL = 1e-8
FRAME_RTOL = 1e-10


@dataclass(frozen=True)
class Frame:
    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] < 1 or vecs.shape[1] < 1:
            raise MalformedInputError(f"frame vectors must form an (m, d) array with m, d >= 1, got {vecs.shape}")
        if not np.all(np.isfinite(vecs)):
            raise MalformedInputError("frame vectors have non-finite entries")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def from_list(cls, vectors, dim=None):
        rows = [np.asarray(v, dtype=complex).ravel() for v in vectors]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1 or (dim is not None and lengths != {dim}):
            raise MalformedInputError(f"vector lengths {sorted(lengths)} do not match dimension {dim}")
        return cls(np.array(rows))

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float

    def is_frame(self, rtol=FRAME_RTOL):
        return self.upper > 0 and self.lower > rtol * self.upper


@dataclass(frozen=True)
class OrthogonalDilation:
    """(K, {u_i}, P): basis and dual basis in K = C^n, H embedded by `embed`.

    Columns of `basis` and `dual_basis` are u_i and u_i*.
    """
    ambient_dim: int
    embed: np.ndarray
    basis: np.ndarray
    dual_basis: np.ndarray
    projection: np.ndarray

    def residuals(self, x, y=None):
        """Worst deviation of each defining identity, keyed by name."""
        x = _vectors(x)
        d = x.shape[1]
        V, U, Ud, P = self.embed, self.basis, self.dual_basis, self.projection
        out = {
            "embed_isometry": la.op_norm(la.adjoint(V) @ V - np.eye(d)),
            "projection_idempotent": la.op_norm(P @ P - P),
            "projection_selfadjoint": la.op_norm(P - la.adjoint(P)),
            "projection_range": la.op_norm(P @ V - V),
            "biorthogonality": np.abs(la.adjoint(Ud) @ U - np.eye(self.ambient_dim)).max(),
            "compression_x": np.abs(P @ U - V @ x.T).max(),
        }
        if y is not None:
            out["compression_y"] = np.abs(P @ Ud - V @ _vectors(y).T).max()
        out["riesz_rank_deficit"] = float(self.ambient_dim - la.rank(U))
        return out


def _vectors(frame):
    return frame.vectors if isinstance(frame, Frame) else np.asarray(frame, dtype=complex)


def analysis_operator(frame):
    return np.conj(_vectors(frame))


def synthesis_operator(frame):
    return _vectors(frame).T.copy()


def frame_operator(frame):
    x = _vectors(frame)
    return x.T @ np.conj(x)


def _bounds_of(s):
    w = np.linalg.eigvalsh(la.hermitian_part(s))
    upper = max(float(w[-1]), 0.0)
    lower = max(float(w[0]), 0.0)
    return FrameBounds(lower, upper)


def frame_bounds(frame):
    """Optimal (A, B): extreme eigenvalues of the frame operator."""
    return _bounds_of(frame_operator(frame))


def is_parseval(frame, tol=PARSEVAL_TOL):
    return la.op_norm(frame_operator(frame) - np.eye(_vectors(frame).shape[1])) <= tol


def canonical_dual(frame):
    bounds = frame_bounds(frame)
    if not bounds.is_frame():
        raise NotAFrameError(
            f"not-a-frame: lower bound {bounds.lower:.3e} vs upper {bounds.upper:.3e}; vectors do not span")
    s = frame_operator(frame)
    # S^{-1} x_i as rows: (S^{-1} X^T)^T = X S^{-T}
    return Frame(np.linalg.solve(s, _vectors(frame).T).T)


def is_riesz_basis(frame):
    x = _vectors(frame)
    m, d = x.shape
    return m == d and la.rank(x) == d


def dilate_parseval(frame, tol=PARSEVAL_TOL):
    """Dilate a Parseval frame to the standard basis of C^m; P = Theta Theta*."""
    resid = la.op_norm(frame_operator(frame) - np.eye(frame.dim))
    if resid > tol:
        raise PreconditionError(
            f"not-parseval: ||S - I|| = {resid:.3e} > {tol:g}; use dilate_dual_pair with the canonical dual")
    theta = analysis_operator(frame)
    m = len(frame)
    eye = np.eye(m, dtype=complex)
    return OrthogonalDilation(m, theta, eye, eye.copy(), theta @ la.adjoint(theta))


def duality_residual(x, y):
    """||sum_i x_i y_i* - I||_op."""
    x, y = _vectors(x), _vectors(y)
    if x.shape != y.shape:
        raise MalformedInputError(f"families have shapes {x.shape} and {y.shape}")
    return la.op_norm(x.T @ np.conj(y) - np.eye(x.shape[1]))


def dilate_dual_pair(x, y, tol=PARSEVAL_TOL):
    """Riesz-basis dilation of a dual pair into H + N, N = range(Theta_y)^perp.

    u_i = Phi e_i with Phi(c) = Theta_x* c + P_N c; the dual basis is the
    columns of Phi^{-*} and P is the coordinate projection onto H.
    """
    xv, yv = _vectors(x), _vectors(y)
    if xv.shape != yv.shape:
        raise MalformedInputError(f"families have shapes {xv.shape} and {yv.shape}")
    m, d = xv.shape
    if m < d:
        raise NotADualPairError(f"not-a-dual-pair: {m} vectors cannot reconstruct dimension {d}")
    resid = duality_residual(xv, yv)
    if resid > tol:
        raise NotADualPairError(f"not-a-dual-pair: ||sum x_i y_i* - I|| = {resid:.3e} > {tol:g}")
    theta_x, theta_y = np.conj(xv), np.conj(yv)
    # orthonormal basis of range(theta_y)^perp, exactly m - d columns
    q, _ = np.linalg.qr(theta_y, mode="complete")
    q_n = q[:, d:]
    phi = np.vstack([la.adjoint(theta_x), la.adjoint(q_n)])
    dual = la.adjoint(np.linalg.inv(phi))
    embed = np.zeros((m, d), dtype=complex)
    embed[:d, :d] = np.eye(d)
    proj = np.zeros((m, m), dtype=complex)
    proj[:d, :d] = np.eye(d)
    return OrthogonalDilation(m, embed, phi, dual, proj)


def quadrature_frame_bounds(samples, weights):
    """Bounds of sum_i w_i F(w_i) F(w_i)*, a discretized continuous frame."""
    f = np.array(samples, dtype=complex)
    w = np.asarray(weights, dtype=float)
    if f.ndim != 2 or w.shape != (f.shape[0],):
        raise MalformedInputError(f"{len(w)} weights for samples of shape {f.shape}")
    if np.any(~(w > 0)):
        raise MalformedInputError("quadrature weights must be positive")
    return _bounds_of((f.T * w) @ np.conj(f))


def compress(frame, q_basis):
    """Coordinates of {Q u_i} in range(Q), Q the projection onto span(q_basis columns)."""
    qb = la.orth(q_basis)
    return Frame(_vectors(frame) @ np.conj(qb))
