"""Seeded random instances: frames, Parseval frames, dual pairs and OVMs."""
import numpy as np

from . import _linalg as la
from .errors import MalformedInputError
from .frames import Frame, canonical_dual
from .framings import Framing
from .ovm import MAX_ATOMS, FiniteOVM, induce_from_framing


def make_rng(seed):
    """Generator for any integer seed; negative and 64-bit values fold into [0, 2^64)."""
    return np.random.default_rng(int(seed) % (1 << 64))


def _gaussian(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _check_dims(d, m, need_m_ge_d=True):
    if d < 1 or m < 1:
        raise MalformedInputError(f"dimensions must be positive, got d={d}, m={m}")
    if need_m_ge_d and m < d:
        raise MalformedInputError(f"a frame for C^{d} needs m >= d vectors, got m={m}")


def random_frame(rng, d, m):
    _check_dims(d, m)
    return Frame(_gaussian(rng, m, d))


def random_parseval(rng, d, m):
    """Rows of the conjugated isometry factor of a random m x d matrix."""
    _check_dims(d, m)
    q, r = np.linalg.qr(_gaussian(rng, m, d))
    # fix the phase ambiguity of QR so the output depends only on the draw
    q = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    return Frame(np.conj(q))


def random_dual_pair(rng, d, m, alternate=False):
    """A random frame with its canonical dual, or with an alternate dual when m > d.

    Alternate duals add rows z_i with sum_i x_i z_i* = 0.
    """
    x = random_frame(rng, d, m)
    y = canonical_dual(x).vectors
    if alternate and m > d:
        ker = la.null_space(x.vectors.T)  # conj(z) columns live here
        z = np.conj(ker @ _gaussian(rng, ker.shape[1], d))
        y = y + z
    return Framing(x, Frame(y))


def random_positive_ovm(rng, d, m, probability=True, max_rank=None):
    """Atoms G_i G_i*; with probability=True conjugated by (sum)^(-1/2)."""
    if not 1 <= m <= MAX_ATOMS or d < 1:
        raise MalformedInputError(f"need d >= 1 and 1 <= m <= {MAX_ATOMS}, got d={d}, m={m}")
    r = d if max_rank is None else max(1, min(int(max_rank), d))
    g = _gaussian(rng, m, d, r)
    atoms = g @ la.adjoint(g)
    if probability:
        total = atoms.sum(axis=0)
        w, v = np.linalg.eigh(la.hermitian_part(total))
        inv_sqrt = (v / np.sqrt(w)) @ la.adjoint(v)
        atoms = inv_sqrt[None] @ atoms @ inv_sqrt[None]
        atoms = la.hermitian_part(atoms)
    else:
        atoms = atoms * rng.uniform(0.1, 1.0)
    return FiniteOVM(atoms)


def random_ovm(rng, d, range_dim, m, ranks=None):
    """General (possibly rectangular) OVM with atom ranks drawn from 0..min(d, range_dim)."""
    if not 1 <= m <= MAX_ATOMS or d < 1 or range_dim < 1:
        raise MalformedInputError(f"bad dimensions d={d}, range_dim={range_dim}, m={m}")
    top = min(d, range_dim)
    ranks = rng.integers(0, top + 1, size=m) if ranks is None else np.asarray(ranks)
    atoms = np.zeros((m, range_dim, d), dtype=complex)
    for i, r in enumerate(ranks):
        atoms[i] = _gaussian(rng, range_dim, int(r)) @ _gaussian(rng, int(r), d)
    return FiniteOVM(atoms)


def random_framing_ovm(rng, d, m):
    """Atoms x_i y_i* from a random alternate dual pair."""
    return induce_from_framing(random_dual_pair(rng, d, m, alternate=True))
