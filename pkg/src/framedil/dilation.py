"""Elementary dilation space, the minimal dilation norm, and dilation-system diagnostics.

On a finite atomic space the span of the vector measures E_{B,x} is the direct
sum of the atom ranges, so M_E is modelled in coordinates: block i holds the
coefficients of a vector of range(E({i})) in an orthonormal range basis Q_i.
In these coordinates

    S f = sum_i Q_i f_i,   T x = (Q_i* E_i x)_i,   F(B) = block projection onto B,

and S F(B) T = sum_{i in B} E_i = E(B).
"""
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .errors import ConsistencyError, MalformedInputError, PreconditionError, ResourceError
from .ovm import EXHAUSTIVE_ATOMS, FiniteOVM, iter_mask_chunks, mask_bits, ovm_norm

ALPHA_MAX_ATOMS = 20
FACTOR_TOL = 1e-10
# per-call budget for (vectors x masks) subset-sum tables
_TABLE_BUDGET = 1 << 22


@dataclass(frozen=True)
class GenericDilationSystem:
    """(F, Z, S, T) with Z = C^n; F_atoms has shape (m, n, n)."""
    F_atoms: np.ndarray
    S: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        F = np.array(self.F_atoms, dtype=complex)
        S = np.array(self.S, dtype=complex)
        T = np.array(self.T, dtype=complex)
        if F.ndim != 3 or F.shape[1] != F.shape[2]:
            raise MalformedInputError(f"F_atoms must have shape (m, n, n), got {F.shape}")
        n = F.shape[1]
        if S.ndim != 2 or T.ndim != 2 or S.shape[1] != n or T.shape[0] != n:
            raise MalformedInputError(f"S {S.shape} and T {T.shape} do not match Z_dim {n}")
        for a in (F, S, T):
            a.setflags(write=False)
        object.__setattr__(self, "F_atoms", F)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)

    @property
    def Z_dim(self):
        return self.F_atoms.shape[1]

    @property
    def atom_count(self):
        return self.F_atoms.shape[0]

    def F(self, mask):
        return np.tensordot(mask_bits([mask], self.atom_count)[0], self.F_atoms, axes=1)


@dataclass(frozen=True)
class ElementaryDilationSystem:
    ovm: FiniteOVM
    range_bases: tuple
    offsets: np.ndarray
    S: np.ndarray
    T: np.ndarray
    F_atoms: np.ndarray

    @property
    def total_dim(self):
        return int(self.offsets[-1])

    @property
    def atom_count(self):
        return len(self.range_bases)

    def block(self, i):
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def F(self, mask):
        return np.tensordot(mask_bits([mask], self.atom_count)[0], self.F_atoms, axes=1)

    def as_generic(self):
        return GenericDilationSystem(self.F_atoms, self.S, self.T)

    def components(self, coords):
        """Range-space components f(i) = Q_i f_i, shape (..., m, d')."""
        coords = np.asarray(coords, dtype=complex)
        out = np.zeros(coords.shape[:-1] + (self.atom_count, self.ovm.range_dim), dtype=complex)
        for i, q in enumerate(self.range_bases):
            out[..., i, :] = coords[..., self.block(i)] @ q.T
        return out


@dataclass(frozen=True)
class ElementaryVector:
    system: ElementaryDilationSystem
    coords: np.ndarray

    @classmethod
    def from_components(cls, system, components, tol=1e-10):
        """Coordinates of a family with component i in range(E({i}))."""
        comps = np.asarray(components, dtype=complex)
        m, dr = system.atom_count, system.ovm.range_dim
        if comps.shape != (m, dr):
            raise MalformedInputError(f"components must have shape {(m, dr)}, got {comps.shape}")
        coords = np.zeros(system.total_dim, dtype=complex)
        for i, q in enumerate(system.range_bases):
            c = la.adjoint(q) @ comps[i]
            resid = np.linalg.norm(q @ c - comps[i])
            if resid > tol * max(1.0, np.linalg.norm(comps[i])):
                raise MalformedInputError(f"component {i} leaves range(E({{{i}}})) by {resid:.3e}")
            coords[system.block(i)] = c
        return cls(system, coords)

    @classmethod
    def from_generators(cls, system, terms):
        """sum_j C_j E_{B_j, x_j} for terms (C_j, mask_j, x_j)."""
        coords = np.zeros(system.total_dim, dtype=complex)
        for c, mask, x in terms:
            coords = coords + c * (system.F(mask) @ (system.T @ np.asarray(x, dtype=complex)))
        return cls(system, coords)

    def components(self):
        return self.system.components(self.coords)


def build_elementary(ovm, rtol=la.RANK_RTOL):
    m, dr, d = ovm.atoms.shape
    bases = tuple(la.orth(a, rtol) for a in ovm.atoms)
    offsets = np.concatenate([[0], np.cumsum([q.shape[1] for q in bases])]).astype(int)
    total = int(offsets[-1])
    S = np.hstack(bases) if total else np.zeros((dr, 0), dtype=complex)
    T = np.vstack([la.adjoint(q) @ a for q, a in zip(bases, ovm.atoms)]) if total \
        else np.zeros((0, d), dtype=complex)
    F = np.zeros((m, total, total), dtype=complex)
    for i in range(m):
        idx = np.arange(offsets[i], offsets[i + 1])
        F[i, idx, idx] = 1.0
    return ElementaryDilationSystem(ovm, bases, offsets, S, T, F)


def _combine(bits, stack):
    """sum_i bits[k, i] stack[i] for every row k, as one GEMM."""
    m = stack.shape[0]
    out = bits.astype(stack.dtype) @ stack.reshape(m, -1)
    return out.reshape((bits.shape[0],) + stack.shape[1:])


def _subset_sum_norms(components, masks_bits):
    """||sum_{i in B} comp_i|| for each vector (axis 0) and mask (axis 1)."""
    sums = _combine(masks_bits, np.swapaxes(components, 0, 1))  # (k, n, d')
    return np.sqrt(np.sum(sums.real ** 2 + sums.imag ** 2, axis=-1)).T


def alpha_norms(components):
    """Minimal dilation norm for a batch of component arrays of shape (N, m, d')."""
    comps = np.asarray(components, dtype=complex)
    if comps.ndim == 2:
        comps = comps[None]
    n, m, _ = comps.shape
    if m > ALPHA_MAX_ATOMS:
        raise ResourceError(f"exact alpha norm refused for {m} > {ALPHA_MAX_ATOMS} atoms")
    best = np.zeros(n)
    for _, bits in iter_mask_chunks(m):
        best = np.maximum(best, _subset_sum_norms(comps, bits).max(axis=1))
    return best


def alpha_norm(f):
    """sup_B ||sum_{i in B} f(i)|| over all events B."""
    return float(alpha_norms(f.components()[None])[0])


def factorization_residual(system, ovm):
    """(worst ||E(B) - S F(B) T||, worst mask) over all events, with F(B) formed explicitly."""
    worst, worst_mask = 0.0, 0
    n = system.F_atoms.shape[1]
    chunk = max(1, min(10, int(np.log2(max(1, _TABLE_BUDGET // max(1, n * n))))))
    for masks, bits in iter_mask_chunks(ovm.atom_count, chunk):
        fb = _combine(bits, system.F_atoms)
        e = _combine(bits, ovm.atoms)
        diff = np.abs(system.S[None] @ fb @ system.T[None] - e).reshape(len(masks), -1)
        if diff.size:
            per = diff.max(axis=1)
            k = int(np.argmax(per))
            if per[k] > worst:
                worst, worst_mask = float(per[k]), int(masks[k])
    return worst, worst_mask


def pvm_residuals(F_atoms, exhaustive=False, rng=None):
    """Idempotence, mutual annihilation, total = I, and the mask-pair spectral identity.

    The atom products already imply F(A n B) = F(A) F(B) by bilinearity; the
    mask-pair identity is still checked directly, on all pairs when
    exhaustive=True and m <= 12, otherwise on 200 random pairs.
    """
    F = np.asarray(F_atoms)
    m, n, _ = F.shape
    prods = np.einsum("iab,jbc->ijac", F, F)
    target = np.zeros_like(prods)
    target[np.arange(m), np.arange(m)] = F
    out = {
        "atom_products": float(np.abs(prods - target).max(initial=0.0)),
        "total_identity": float(np.abs(F.sum(axis=0) - np.eye(n)).max(initial=0.0)),
        "empty_zero": 0.0,
    }
    if exhaustive and m <= EXHAUSTIVE_ATOMS:
        masks = np.arange(1 << m, dtype=np.int64)
        fa_all = _combine(mask_bits(masks, m), F)
        worst = 0.0
        for a in masks:
            lhs = fa_all[a][None] @ fa_all
            rhs = fa_all[np.bitwise_and(a, masks)]
            worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
        out["mask_pairs"] = worst
        out["mask_pairs_mode"] = "exhaustive"
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        a = rng.integers(0, 1 << m, size=200, dtype=np.int64)
        b = rng.integers(0, 1 << m, size=200, dtype=np.int64)
        fa = _combine(mask_bits(a, m), F)
        fb = _combine(mask_bits(b, m), F)
        fab = _combine(mask_bits(np.bitwise_and(a, b), m), F)
        out["mask_pairs"] = float(np.abs(fa @ fb - fab).max(initial=0.0))
        out["mask_pairs_mode"] = "sampled"
    return out


@dataclass
class DilationNormReport:
    """Worst observed ratios; each must stay <= 1 (up to rounding) for a dilation norm."""
    s_ratio: float
    t_ratio: float
    f_ratio_all_masks: float
    f_ratio_direct: float
    domination_ratio: float
    pvm: dict
    passed: bool
    counterexample: dict = field(default=None)


def _apply(stack, vecs):
    """(N, m, d') array of stack[i] @ vecs[n]."""
    m, a, r = stack.shape
    return (vecs @ stack.reshape(m * a, r).T).reshape(len(vecs), m, a)


def _submask_max(table, m):
    """g[B] = max_{A subset of B} table[A] along the last axis."""
    g = table.copy()
    n = g.shape[0]
    for i in range(m):
        v = g.reshape(n, -1, 2, 1 << i)
        np.maximum(v[:, :, 1, :], v[:, :, 0, :], out=v[:, :, 1, :])
    return g


def verify_dilation_norm_conditions(system, samples=1000, rng=None, tol=1e-12, direct_masks=4,
                                    exhaustive=False):
    """Sample-based certificate that the alpha norm is a dilation norm for E.

    (i) ||S f|| <= ||f||_alpha, (ii) ||T x||_alpha <= ||E|| ||x||, (iii) each F(B)
    is alpha-contractive and F is a projection-valued probability measure.
    For (iii) every mask is covered through submask maxima of ||S F(A) f||,
    and a few masks per sample are also checked by forming F(B) f explicitly.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ovm = system.ovm
    m, R, d = system.atom_count, system.total_dim, ovm.domain_dim
    if m > ALPHA_MAX_ATOMS:
        raise ResourceError(f"exact alpha norm refused for {m} > {ALPHA_MAX_ATOMS} atoms")
    if R == 0:
        # zero OVM: M_E = {0} and every condition holds vacuously
        return DilationNormReport(0.0, 0.0, 0.0, 0.0, 0.0, pvm_residuals(system.F_atoms, exhaustive, rng), True)
    e_norm = ovm_norm(ovm)
    sf_atoms = system.S[None] @ system.F_atoms  # (m, d', R)
    full = (1 << m) - 1

    s_ratio = f_all = f_direct = t_ratio = dom_ratio = 0.0
    counter = None
    batch = max(1, _TABLE_BUDGET >> m)
    for start in range(0, samples, batch):
        nb = min(batch, samples - start)
        f = rng.normal(size=(nb, R)) + 1j * rng.normal(size=(nb, R))
        comps = _apply(sf_atoms, f)
        table = np.concatenate([_subset_sum_norms(comps, bits) for _, bits in iter_mask_chunks(m)], axis=1)
        alpha = table.max(axis=1)
        nz = alpha > 0
        sf = np.linalg.norm(f @ system.S.T, axis=1)
        r = np.where(nz, sf / np.where(nz, alpha, 1), 0.0)
        if r.max(initial=0.0) > s_ratio:
            s_ratio = float(r.max())
            if s_ratio > 1 + tol and counter is None:
                counter = {"condition": "S", "coords": f[int(np.argmax(r))]}
        g = _submask_max(table, m)
        r = np.where(nz[:, None], g / np.where(nz, alpha, 1)[:, None], 0.0)
        f_all = max(f_all, float(r.max(initial=0.0)))
        # explicit F(B) f for a handful of masks per sample
        masks = np.concatenate([[full], rng.integers(0, 1 << m, size=direct_masks)])
        fb = _combine(mask_bits(masks, m), system.F_atoms)
        pf = (f @ fb.reshape(-1, R).T).reshape(-1, R)
        a_pf = alpha_norms(_apply(sf_atoms, pf)).reshape(nb, -1)
        r = np.where(nz[:, None], a_pf / np.where(nz, alpha, 1)[:, None], 0.0)
        if r.max(initial=0.0) > f_direct:
            f_direct = float(r.max())
            if f_direct > 1 + tol and counter is None:
                k = int(np.argmax(r.max(axis=1)))
                counter = {"condition": "F", "coords": f[k]}

        x = rng.normal(size=(nb, d)) + 1j * rng.normal(size=(nb, d))
        tx = x @ system.T.T
        a_tx = alpha_norms(_apply(sf_atoms, tx))
        xn = np.linalg.norm(x, axis=1)
        if e_norm > 0:
            ratio = a_tx / (e_norm * xn)
            if ratio.max() > t_ratio:
                t_ratio = float(ratio.max())
                if t_ratio > 1 + tol and counter is None:
                    counter = {"condition": "T", "x": x[int(np.argmax(ratio))]}
            bmask = rng.integers(0, 1 << m, size=nb)
            fbt = (_combine(mask_bits(bmask, m), system.F_atoms) @ tx[:, :, None])[:, :, 0]
            dom = alpha_norms(_apply(sf_atoms, fbt)) / (e_norm * xn)
            dom_ratio = max(dom_ratio, float(dom.max()))
        elif np.abs(tx).max(initial=0.0) > 0:
            t_ratio = np.inf

    pvm = pvm_residuals(system.F_atoms, exhaustive, rng)
    pvm_ok = max(v for k, v in pvm.items() if k != "mask_pairs_mode") <= FACTOR_TOL
    passed = bool(max(s_ratio, t_ratio, f_all, f_direct, dom_ratio) <= 1 + tol and pvm_ok)
    return DilationNormReport(s_ratio, t_ratio, f_all, f_direct, dom_ratio, pvm, passed, counter)


@dataclass(frozen=True)
class MinimalityReport:
    injective: bool
    linearly_minimal: bool
    span_dim: int
    kernel_dim: int
    Z_dim: int
    factorizes: bool
    factorization_residual: float
    worst_mask: int
    injectivity_residual: float


def _span_generators(system):
    """Columns F_i T e_k spanning F(Sigma) T X."""
    ft = system.F_atoms @ system.T[None]  # (m, n, d)
    return np.concatenate(list(ft), axis=1) if ft.shape[0] else np.zeros((system.Z_dim, 0))


def verify_generic(system, ovm, tol=FACTOR_TOL):
    """Factorization, linear minimality and injectivity of a dilation system of `ovm`.

    A relation sum_j C_j E_{B_j, x_j} = 0 expands over the generators
    E_{{i}, e_k}, whose relations are exactly the kernels of the atoms. The
    system is injective iff F_i T kills ker E_i for every atom i.
    """
    if system.atom_count != ovm.atom_count or system.S.shape[0] != ovm.range_dim \
            or system.T.shape[1] != ovm.domain_dim:
        raise MalformedInputError("dilation system and OVM dimensions disagree")
    resid, worst_mask = factorization_residual(system, ovm)
    n = system.Z_dim
    gens = _span_generators(system)
    span = la.orth(gens)
    span_dim = span.shape[1]
    kernel_dim = span_dim - la.rank(system.S @ span) if span_dim else 0
    inj = 0.0
    for i in range(ovm.atom_count):
        ker = la.null_space(ovm.atoms[i])
        if ker.shape[1]:
            inj = max(inj, la.op_norm(system.F_atoms[i] @ system.T @ ker))
    scale = max(1.0, la.op_norm(system.T) * max(la.op_norm(f) for f in system.F_atoms))
    return MinimalityReport(
        injective=bool(inj <= tol * scale),
        linearly_minimal=span_dim == n,
        span_dim=span_dim,
        kernel_dim=kernel_dim,
        Z_dim=n,
        factorizes=resid <= tol,
        factorization_residual=resid,
        worst_mask=worst_mask,
        injectivity_residual=inj,
    )


def example_3_9(support_size=2, extra_atoms=1, alpha_weights=None):
    """Finite analog of a non-injective but linearly minimal dilation of a PVM.

    Atoms 0..k-1 carry X = C^k; atoms k..k+j-1 are null for X and carry the
    extra coordinates of Y = C^(k+j). T f = f + alpha(f) 1 on the extra atoms,
    S restricts to the first k coordinates, and both measures act by
    multiplication with indicators. Returns (phi, Phi).
    """
    k, j = int(support_size), int(extra_atoms)
    if k < 1 or j < 1:
        raise MalformedInputError(f"need support_size >= 1 and extra_atoms >= 1, got {k}, {j}")
    w = np.full(k, 1.0 / k) if alpha_weights is None else np.asarray(alpha_weights, dtype=complex).ravel()
    if w.shape != (k,):
        raise MalformedInputError(f"alpha_weights needs {k} entries, got {w.size}")
    if abs(w.sum() - 1) > 1e-12:
        raise MalformedInputError(f"alpha(1) = {w.sum()} must equal 1")
    m = k + j
    phi = np.zeros((m, k, k), dtype=complex)
    for i in range(k):
        phi[i, i, i] = 1.0
    Phi = np.zeros((m, m, m), dtype=complex)
    for i in range(m):
        Phi[i, i, i] = 1.0
    T = np.vstack([np.eye(k), np.outer(np.ones(j), w)]).astype(complex)
    S = np.hstack([np.eye(k), np.zeros((k, j))]).astype(complex)
    return FiniteOVM(phi), GenericDilationSystem(Phi, S, T)


def _compress(system, basis):
    qh = la.adjoint(basis)
    return GenericDilationSystem(qh[None] @ system.F_atoms @ basis[None], system.S @ basis, qh @ system.T)


def restriction_reduce(system):
    """Replace Z by span F(Sigma) T X; the result is linearly minimal."""
    return _compress(system, la.orth(_span_generators(system)))


def invariant_kernel(system, tol=1e-10):
    """Largest F-invariant subspace of ker S, as orthonormal columns."""
    basis = la.null_space(system.S)
    while basis.shape[1]:
        outside = np.eye(system.Z_dim) - basis @ la.adjoint(basis)
        cond = np.vstack([outside @ f @ basis for f in system.F_atoms])
        keep = la.null_space(cond)
        if keep.shape[1] == basis.shape[1]:
            break
        basis = la.orth(basis @ keep) if keep.shape[1] else basis[:, :0]
    return basis


def quotient_reduce(system, tol=1e-10):
    """Quotient Z by the largest F-invariant subspace K of ker S.

    Z/K is identified with K^perp; F, S and T descend as compressions to K^perp.
    """
    n = system.Z_dim
    span_dim = la.orth(_span_generators(system)).shape[1]
    if span_dim != n:
        raise PreconditionError(
            f"quotient_reduce needs a linearly minimal system (span {span_dim} < Z_dim {n}); "
            f"apply restriction_reduce first")
    K = invariant_kernel(system, tol)
    for f in system.F_atoms:
        leak = la.op_norm(f @ K - K @ (la.adjoint(K) @ f @ K)) if K.shape[1] else 0.0
        if leak > 1e-8:
            raise ConsistencyError(f"kernel subspace is not F-invariant (leak {leak:.3e})")
    if la.op_norm(system.S @ K) > 1e-8:
        raise ConsistencyError("invariant kernel escaped ker S")
    comp = la.null_space(la.adjoint(K)) if K.shape[1] else np.eye(n, dtype=complex)
    return _compress(system, comp)


@dataclass(frozen=True)
class RankReport:
    atoms: list
    events: list = None


def rank_report(system, ovm, rtol=la.RANK_RTOL):
    """Per-atom (rank F({i}), rank E({i})); for m <= 12 also per-event data.

    Each event row is (mask, rank E(B), sup_{A subset B} rank E(A), rank F(B)).
    """
    m = ovm.atom_count
    atoms = [(la.rank(system.F_atoms[i], rtol), la.rank(ovm.atoms[i], rtol)) for i in range(m)]
    if m > EXHAUSTIVE_ATOMS:
        return RankReport(atoms)
    masks = np.arange(1 << m, dtype=np.int64)
    bits = mask_bits(masks, m)
    rank_e = np.array([la.rank(e, rtol) for e in _combine(bits, ovm.atoms)])
    rank_f = np.array([la.rank(f, rtol) for f in _combine(bits, system.F_atoms)])
    sup = _submask_max(rank_e[None].astype(float), m)[0].astype(int)
    events = [(int(b), int(rank_e[b]), int(sup[b]), int(rank_f[b])) for b in masks]
    return RankReport(atoms, events)
