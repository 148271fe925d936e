"""Operator-valued measures on finite power-set sigma-algebras.

Events are integer bitmasks over the atoms 0..m-1; E(B) is the sum of the
atoms in B.
"""
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from .errors import MalformedInputError, PreconditionError, ResourceError
from .framings import verify_framing

MAX_ATOMS = 24
EXHAUSTIVE_ATOMS = 12
CLASSIFY_TOL = 1e-10
CHUNK_BITS = 10


def mask_bits(masks, m):
    """(K, m) 0/1 float indicator rows for an array of masks."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(float)


def iter_mask_chunks(m, chunk_bits=CHUNK_BITS):
    """Yield (masks, indicators) covering all 2^m masks in order."""
    total = 1 << m
    step = 1 << min(chunk_bits, m)
    for start in range(0, total, step):
        masks = np.arange(start, start + step, dtype=np.int64)
        yield masks, mask_bits(masks, m)


def mask_to_indices(mask):
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def indices_to_mask(indices):
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


@dataclass(frozen=True)
class FiniteMeasurableSpace:
    atom_count: int

    def __post_init__(self):
        if not 1 <= self.atom_count <= MAX_ATOMS:
            raise MalformedInputError(f"atom count {self.atom_count} outside [1, {MAX_ATOMS}]")

    @property
    def omega(self):
        return (1 << self.atom_count) - 1

    def check_mask(self, mask):
        mask = int(mask)
        if mask < 0 or mask > self.omega:
            raise MalformedInputError(f"mask {mask} outside the {self.atom_count}-atom power set")
        return mask


@dataclass(frozen=True)
class FiniteOVM:
    atoms: np.ndarray

    def __post_init__(self):
        a = np.array(self.atoms, dtype=complex)
        if a.ndim != 3 or a.shape[1] < 1 or a.shape[2] < 1:
            raise MalformedInputError(f"atoms must form an (m, d', d) array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise MalformedInputError("atoms have non-finite entries")
        FiniteMeasurableSpace(a.shape[0])
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def space(self):
        return FiniteMeasurableSpace(self.atoms.shape[0])

    @property
    def atom_count(self):
        return self.atoms.shape[0]

    @property
    def domain_dim(self):
        return self.atoms.shape[2]

    @property
    def range_dim(self):
        return self.atoms.shape[1]

    @property
    def is_square(self):
        return self.domain_dim == self.range_dim


@dataclass(frozen=True)
class OVMClassification:
    is_probability: bool
    is_projection_valued: bool
    is_spectral: bool
    is_positive: bool
    is_self_adjoint: bool
    norm: float


@dataclass(frozen=True)
class PositiveNaimarkDilation:
    dilation_dim: int
    V: np.ndarray
    F_atoms: np.ndarray

    def F(self, mask):
        bits = mask_bits([mask], self.F_atoms.shape[0])[0]
        return np.tensordot(bits, self.F_atoms, axes=1)


def evaluate(ovm, mask):
    mask = ovm.space.check_mask(mask)
    bits = mask_bits([mask], ovm.atom_count)[0]
    return np.tensordot(bits, ovm.atoms, axes=1)


def evaluate_all(ovm, masks):
    """E(B) for an array of masks, shape (K, d', d)."""
    return np.einsum("km,mij->kij", mask_bits(masks, ovm.atom_count), ovm.atoms)


def scalar_measure(ovm, x, y):
    """Per-atom values <E({i}) x, y>."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.shape != (ovm.domain_dim,) or y.shape != (ovm.range_dim,):
        raise MalformedInputError(
            f"x has length {x.size} (need {ovm.domain_dim}), y has length {y.size} (need {ovm.range_dim})")
    return np.conj(y) @ (ovm.atoms @ x).T


def ovm_norm(ovm, return_mask=False):
    """sup_B ||E(B)||_op by full enumeration of the 2^m events."""
    m = ovm.atom_count
    if m > MAX_ATOMS:
        raise ResourceError(f"{m} atoms exceeds the enumeration cap {MAX_ATOMS}; sample masks instead")
    best, best_mask = 0.0, 0
    for masks, bits in iter_mask_chunks(m):
        vals = la.batched_op_norms(np.einsum("km,mij->kij", bits, ovm.atoms))
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_mask = float(vals[k]), int(masks[k])
    return (best, best_mask) if return_mask else best


def _sample_masks(m, count, rng):
    return rng.integers(0, 1 << m, size=count, dtype=np.int64)


def is_spectral_atoms(atoms, tol=CLASSIFY_TOL):
    """E_i E_j = delta_ij E_i for all atom pairs.

    By bilinearity this is equivalent to E(A n B) = E(A) E(B) for all events.
    """
    prods = np.einsum("iab,jbc->ijac", atoms, atoms)
    m = atoms.shape[0]
    target = np.zeros_like(prods)
    target[np.arange(m), np.arange(m)] = atoms
    return bool(np.abs(prods - target).max(initial=0.0) <= tol)


def spectral_residual_masks(atoms, masks_a, masks_b):
    m = atoms.shape[0]
    ea = np.einsum("km,mij->kij", mask_bits(masks_a, m), atoms)
    eb = np.einsum("km,mij->kij", mask_bits(masks_b, m), atoms)
    eab = np.einsum("km,mij->kij", mask_bits(np.bitwise_and(masks_a, masks_b), m), atoms)
    return float(np.abs(ea @ eb - eab).max(initial=0.0))


def classify(ovm, tol=CLASSIFY_TOL, exhaustive=False, rng=None):
    """Probability, projection, spectral, positivity and self-adjointness flags.

    Rectangular OVMs get every flag False.

    Spectrality is decided on atom pairs. With exhaustive=True it is also
    confirmed on all mask pairs (m <= 12) or 1000 sampled pairs.
    """
    norm = ovm_norm(ovm)
    if not ovm.is_square:
        return OVMClassification(False, False, False, False, False, norm)
    m, d = ovm.atom_count, ovm.domain_dim
    atoms = ovm.atoms
    rng = np.random.default_rng(0) if rng is None else rng
    total = atoms.sum(axis=0)
    is_prob = bool(np.abs(total - np.eye(d)).max() <= tol)
    self_adj = bool(np.abs(atoms - la.adjoint(atoms)).max() <= tol)
    positive = self_adj and bool(
        np.linalg.eigvalsh(la.hermitian_part(atoms))[:, 0].min() >= -tol)
    spectral = is_spectral_atoms(atoms, tol)
    if exhaustive and spectral:
        if m <= EXHAUSTIVE_ATOMS:
            all_masks = np.arange(1 << m, dtype=np.int64)
            for a in all_masks:
                if spectral_residual_masks(atoms, np.full_like(all_masks, a), all_masks) > tol:
                    spectral = False
                    break
        else:
            a, b = _sample_masks(m, 1000, rng), _sample_masks(m, 1000, rng)
            spectral = spectral_residual_masks(atoms, a, b) <= tol
    if m <= EXHAUSTIVE_ATOMS:
        proj = True
        for _, bits in iter_mask_chunks(m):
            e = np.einsum("km,mij->kij", bits, atoms)
            if np.abs(e @ e - e).max() > tol:
                proj = False
                break
    else:
        e = evaluate_all(ovm, _sample_masks(m, 1000, rng))
        proj = bool(np.abs(e @ e - e).max() <= tol)
    return OVMClassification(is_prob, proj, spectral, positive, self_adj, norm)


def induce_from_frame(frame):
    """Atoms x_i x_i*."""
    x = frame.vectors
    return FiniteOVM(x[:, :, None] * np.conj(x)[:, None, :])


def induce_from_framing(framing, tol=1e-8):
    """Atoms x_i y_i*; requires sum_i x_i y_i* = I."""
    ok, resid = verify_framing(framing, tol)
    if not ok:
        raise PreconditionError(f"not-a-framing: reconstruction residual {resid:.3e} > {tol:g}")
    x, y = framing.x.vectors, framing.y.vectors
    return FiniteOVM(x[:, :, None] * np.conj(y)[:, None, :])


def naimark_dilate_positive(ovm, herm_tol=1e-10, clamp=1e-12):
    """V stacks the positive square roots of the atoms; F_i projects onto block i."""
    if not ovm.is_square:
        raise PreconditionError(f"positive dilation needs square atoms, got {ovm.range_dim}x{ovm.domain_dim}")
    m, d = ovm.atom_count, ovm.domain_dim
    blocks = []
    for i, a in enumerate(ovm.atoms):
        skew = np.abs(a - la.adjoint(a)).max()
        if skew > herm_tol:
            raise PreconditionError(f"atom {i} is not self-adjoint (||E_i - E_i*||_max = {skew:.3e})")
        try:
            blocks.append(la.psd_sqrt(a, clamp))
        except ValueError as exc:
            raise PreconditionError(
                f"atom {i} is not positive: most negative eigenvalue {exc.args[0]:.3e}") from None
    V = np.vstack(blocks)
    F = np.zeros((m, m * d, m * d), dtype=complex)
    for i in range(m):
        F[i, i * d:(i + 1) * d, i * d:(i + 1) * d] = np.eye(d)
    return PositiveNaimarkDilation(m * d, V, F)


def naimark_residual(ovm, dil):
    """max_B ||V* F(B) V - E(B)|| over all events.

    F(B) is the sum of the stored F atoms, so V* F(B) V is accumulated from the
    per-atom compressions V* F_i V.
    """
    vh = la.adjoint(dil.V)
    comp = vh[None] @ dil.F_atoms @ dil.V[None]
    worst = 0.0
    for _, bits in iter_mask_chunks(ovm.atom_count):
        diff = np.einsum("km,mij->kij", bits, comp - ovm.atoms)
        worst = max(worst, float(np.abs(diff).max()))
    return worst
