"""Framing pairs in finite dimension, balanced rescaling, and the Fourier divergence demo."""
import warnings
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import DegenerateFramingError, MalformedInputError
from .frames import Frame, FrameBounds, frame_bounds

FRAMING_TOL = 1e-8


class AccuracyWarning(UserWarning):
    """Quadrature resolution below the recommended node count."""


@dataclass(frozen=True)
class Framing:
    x: Frame
    y: Frame

    def __post_init__(self):
        x = self.x if isinstance(self.x, Frame) else Frame(self.x)
        y = self.y if isinstance(self.y, Frame) else Frame(self.y)
        if x.vectors.shape != y.vectors.shape:
            raise MalformedInputError(f"x has shape {x.vectors.shape}, y has shape {y.vectors.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self):
        return self.x.dim

    def __len__(self):
        return len(self.x)

    def reconstruction_operator(self):
        """sum_i x_i y_i*."""
        return self.x.vectors.T @ np.conj(self.y.vectors)


@dataclass(frozen=True)
class RescalingResult:
    alphas: np.ndarray
    rescaled_x: Frame
    rescaled_y: Frame
    x_bounds: FrameBounds
    y_bounds: FrameBounds
    duality_residual: float
    is_dual_pair_after: bool


@dataclass(frozen=True)
class DivergenceReport:
    cutoffs: list
    partial_sums: list
    tail_products: list
    coefficients: np.ndarray

    def to_csv(self):
        lines = ["N,partial_sum,tail_product"]
        for n, s, t in zip(self.cutoffs, self.partial_sums, self.tail_products):
            lines.append(f"{n},{s!r},{t!r}")
        return "\n".join(lines) + "\n"


def verify_framing(candidate, tol=FRAMING_TOL):
    """Return (ok, residual) with residual = ||sum x_i y_i* - I||_op."""
    resid = la.op_norm(candidate.reconstruction_operator() - np.eye(candidate.dim))
    return resid <= tol, resid


def rescale(framing, alphas):
    """The pair (alpha_i x_i, conj(alpha_i)^{-1} y_i)."""
    a = np.asarray(alphas, dtype=complex)
    return Framing(Frame(framing.x.vectors * a[:, None]),
                   Frame(framing.y.vectors / np.conj(a)[:, None]))


def rescale_balanced(framing, tol=FRAMING_TOL):
    """Balance each pair so ||alpha_i x_i|| = ||y_i / conj(alpha_i)||.

    Pairs with both members zero keep alpha_i = 1; they add nothing to the
    reconstruction and stay as zero vectors so indices are preserved.
    """
    nx = np.linalg.norm(framing.x.vectors, axis=1)
    ny = np.linalg.norm(framing.y.vectors, axis=1)
    mixed = np.flatnonzero((nx == 0) != (ny == 0))
    if mixed.size:
        raise DegenerateFramingError(
            f"degenerate-framing: pairs {mixed.tolist()} have exactly one zero member")
    alphas = np.ones(len(framing), dtype=complex)
    live = nx > 0
    alphas[live] = np.sqrt(ny[live] / nx[live])
    out = rescale(framing, alphas)
    ok, resid = verify_framing(out, tol)
    xb, yb = frame_bounds(out.x), frame_bounds(out.y)
    return RescalingResult(alphas, out.x, out.y, xb, yb, resid,
                           bool(ok and xb.is_frame() and yb.is_frame()))


def _gauss_legendre_grid(nodes, order=16):
    panels = max(1, -(-nodes // order))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    s = (edges[:-1, None] + (x[None, :] + 1.0) * h[:, None] / 2).ravel()
    ws = (w[None, :] * h[:, None] / 2).ravel()
    return s, ws


def fourier_coefficients(n_max, quadrature_nodes):
    """c_n = int_0^1 t^{-1/2} e^{-2 pi i n t} dt for n = 0..n_max.

    With t = s^2 the integrand becomes 2 e^{-2 pi i n s^2} on [0, 1]; a fixed
    composite Gauss-Legendre grid serves every n, stepping the phase factor by
    repeated multiplication and refreshing it exactly every 64 steps.
    """
    s, ws = _gauss_legendre_grid(quadrature_nodes)
    ws = 2.0 * ws
    phase2 = -2j * np.pi * s * s
    step = np.exp(phase2)
    out = np.empty(n_max + 1, dtype=complex)
    cur = ws.astype(complex)
    out[0] = cur.sum()
    for n in range(1, n_max + 1):
        if n % 64 == 0:
            cur = ws * np.exp(n * phase2)
        else:
            cur *= step
        out[n] = cur.sum()
    return out


def fourier_framing_report(cutoffs, quadrature_nodes=None):
    """Partial sums sum_{|n|<=N} |<f, x_n>|^2 for f = t^{-1/4}, x_n = e^{2 pi i n t} f."""
    cutoffs = [int(n) for n in cutoffs]
    if not cutoffs or any(n < 1 for n in cutoffs) or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise MalformedInputError(f"cutoffs must be positive and strictly increasing, got {cutoffs}")
    n_max = cutoffs[-1]
    recommended = 64 * n_max
    if quadrature_nodes is None:
        quadrature_nodes = recommended
    if quadrature_nodes < recommended:
        warnings.warn(f"{quadrature_nodes} quadrature nodes < recommended {recommended}; "
                      f"high-frequency coefficients may be inaccurate", AccuracyWarning, stacklevel=2)
    c = fourier_coefficients(n_max, quadrature_nodes)
    # c_{-n} = conj(c_n) since the integrand t^{-1/2} is real
    sq = np.abs(c) ** 2
    running = sq[0] + 2.0 * np.cumsum(np.concatenate([[0.0], sq[1:]]))
    partial = [float(running[n]) for n in cutoffs]
    tails = [float(n * sq[n]) for n in cutoffs]
    return DivergenceReport(cutoffs, partial, tails, c)
