"""Unital matrix algebras, homomorphism dilations of linear maps, and cb-norm profiles.

A linear map w: A -> V is stored as a (p, v) array whose row l is w(b_l) for
the algebra basis b_0..b_{p-1}; flattened row-major it is a vector in C^(p v).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _linalg as la
from .errors import ConsistencyError, MalformedAlgebraError, MalformedInputError, ResourceError

CLOSURE_TOL = 1e-10
SNAP_TOL = 1e-12
AMPLIFICATION_CAP = 64
HOM_TOL = 1e-10
FACTOR_TOL = 1e-12


def _snap(a, tol=SNAP_TOL):
    """Round entries within tol of an integer (real and imaginary parts separately)."""
    re, im = np.real(a), np.imag(a)
    re = np.where(np.abs(re - np.round(re)) <= tol, np.round(re), re)
    im = np.where(np.abs(im - np.round(im)) <= tol, np.round(im), im)
    return re + 1j * im


@dataclass(frozen=True)
class FiniteAlgebra:
    """Unital subalgebra of M_k spanned by `basis` (p, k, k)."""
    ambient: int
    basis: np.ndarray
    identity_coords: np.ndarray = field(default=None)
    mult_table: np.ndarray = field(default=None)

    def __post_init__(self):
        k = int(self.ambient)
        b = np.array(self.basis, dtype=complex)
        if k < 1 or b.ndim != 3 or b.shape[1:] != (k, k) or b.shape[0] < 1:
            raise MalformedInputError(f"basis must have shape (p, {k}, {k}), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise MalformedInputError("basis has non-finite entries")
        p = b.shape[0]
        flat = b.reshape(p, -1)
        if la.rank(flat.T) < p:
            raise MalformedAlgebraError(f"basis of {p} matrices is linearly dependent")
        coord_map = np.linalg.pinv(flat.T)  # (p, k*k)
        prods = np.einsum("iab,jbc->ijac", b, b).reshape(p, p, -1)
        mult = prods @ coord_map.T
        closure = np.abs(mult @ flat - prods).max()
        scale = max(1.0, np.abs(prods).max())
        if closure > CLOSURE_TOL * scale:
            raise MalformedAlgebraError(f"basis is not closed under products (residual {closure:.3e})")
        eye = np.eye(k).reshape(-1)
        idc = coord_map @ eye
        unit = np.abs(idc @ flat - eye).max()
        if unit > CLOSURE_TOL:
            raise MalformedAlgebraError(f"identity matrix is not in the span (residual {unit:.3e})")
        mult, idc = _snap(mult), _snap(idc)
        for a in (b, mult, idc, coord_map):
            a.setflags(write=False)
        object.__setattr__(self, "ambient", k)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "mult_table", mult)
        object.__setattr__(self, "identity_coords", idc)
        object.__setattr__(self, "_coord_map", coord_map)

    @property
    def dim(self):
        return self.basis.shape[0]

    def coords(self, a):
        return self._coord_map @ np.asarray(a, dtype=complex).reshape(-1)

    def element(self, coords):
        return np.tensordot(np.asarray(coords, dtype=complex), self.basis, axes=1)

    def right_mult(self, coords):
        """R with R[r, l] = coords(b_l a)_r for a = sum coords_s b_s."""
        return np.einsum("s,lsr->rl", np.asarray(coords, dtype=complex), self.mult_table)

    @classmethod
    def diagonal(cls, m):
        basis = np.zeros((m, m, m))
        basis[np.arange(m), np.arange(m), np.arange(m)] = 1
        return cls(m, basis)

    @classmethod
    def upper_triangular(cls, k):
        units = []
        for i in range(k):
            for j in range(i, k):
                e = np.zeros((k, k))
                e[i, j] = 1
                units.append(e)
        return cls(k, np.array(units))

    @classmethod
    def full_matrix(cls, k):
        return cls(k, np.eye(k * k).reshape(k * k, k, k))


@dataclass(frozen=True)
class LinearMapOnAlgebra:
    algebra: FiniteAlgebra
    target_dim: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        t = int(self.target_dim)
        if v.ndim != 3 or v.shape != (self.algebra.dim, t, t):
            raise MalformedInputError(
                f"values must have shape ({self.algebra.dim}, {t}, {t}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise MalformedInputError("values have non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "target_dim", t)

    def __call__(self, a):
        return np.tensordot(self.algebra.coords(a), self.values, axes=1)


@dataclass(frozen=True)
class AlgebraicDilation:
    """(W, pi, T, S) with W given by `W_basis` columns in C^(p v).

    W_basis is the identity on the rows `pivots`, so those entries of a vector
    of W are its coordinates.
    """
    W_dim: int
    W_basis: np.ndarray
    pi: np.ndarray
    T: np.ndarray
    S: np.ndarray
    pivots: np.ndarray

    def coords(self, w):
        return np.asarray(w)[self.pivots]

    def pi_of(self, coords):
        return np.tensordot(np.asarray(coords, dtype=complex), self.pi, axes=1)

    def residuals(self, phi):
        alg = phi.algebra
        p = alg.dim
        if self.W_dim == 0:
            fac = np.abs(phi.values).max()
            return {"homomorphism": 0.0, "unital": 0.0, "factorization": float(fac)}
        prod = np.einsum("iab,jbc->ijac", self.pi, self.pi)
        lin = np.einsum("ijr,rac->ijac", alg.mult_table, self.pi)
        unit = self.pi_of(alg.identity_coords)
        fac = self.S[None] @ self.pi @ self.T[None] - phi.values
        return {
            "homomorphism": float(np.abs(prod - lin).max()),
            "unital": float(np.abs(unit - np.eye(self.W_dim)).max()),
            "factorization": float(np.abs(fac).max()) if p else 0.0,
        }


def _echelon_basis(gens, rtol=la.RANK_RTOL):
    """Basis Wb of the column span with Wb[piv] = I, plus the pivot rows."""
    u = la.orth(gens, rtol)
    r = u.shape[1]
    if r == 0:
        return np.zeros((gens.shape[0], 0), dtype=complex), np.zeros(0, dtype=int)
    _, _, perm = scipy.linalg.qr(u.T, pivoting=True, mode="economic")
    piv = np.sort(perm[:r])
    wb = u @ np.linalg.inv(u[piv])
    wb[piv] = np.eye(r)
    return wb, piv


def build_algebraic_dilation(phi):
    """W = span{a -> phi(a b) x}, pi(a) w = w(. a), T x = phi(.) x, S w = w(1).

    Evaluation at the identity is well defined on all of W, which settles how
    S extends linearly. W gets an echelon basis (identity on pivot rows) so
    coordinates are read off directly and pi(1) = I holds exactly.
    """
    alg = phi.algebra
    p, v = alg.dim, phi.target_dim
    # generator (j, k): rows l are phi(b_l b_j) e_k
    gens = np.einsum("ljr,rck->lcjk", alg.mult_table, phi.values).reshape(p * v, p * v)
    wb, piv = _echelon_basis(gens)
    n = wb.shape[1]
    eye_v = np.eye(v)
    T_full = phi.values.reshape(p * v, v)
    S_full = np.kron(alg.identity_coords[None, :], eye_v)
    pis = np.zeros((p, n, n), dtype=complex)
    for s in range(p):
        e = np.zeros(p)
        e[s] = 1
        big = np.kron(alg.right_mult(e).T, eye_v)
        pis[s] = (big @ wb)[piv]
    dil = AlgebraicDilation(n, wb, pis, T_full[piv], S_full @ wb, piv)
    res = dil.residuals(phi)
    if res["homomorphism"] > HOM_TOL or res["unital"] > HOM_TOL or res["factorization"] > FACTOR_TOL:
        raise ConsistencyError(f"algebraic dilation failed its checks: {res}")
    return dil


@dataclass(frozen=True)
class CbProfile:
    levels: list
    lower_bounds: list
    raw_bounds: list
    restarts: int
    iterations: int

    def to_csv(self):
        lines = ["level,lower_bound"]
        lines += [f"{n},{b!r}" for n, b in zip(self.levels, self.lower_bounds)]
        return "\n".join(lines) + "\n"


class _Amplifier:
    """phi_n on M_n(A) for values (p, r, c); A carries the ambient operator norm."""

    def __init__(self, basis, values, n):
        self.basis = np.asarray(basis, dtype=complex)
        self.values = np.asarray(values, dtype=complex)
        self.n = n
        p, k, _ = self.basis.shape
        self.k = k
        flat = self.basis.reshape(p, -1)
        self.coord_map = np.linalg.pinv(flat.T)
        self.proj = flat.T @ self.coord_map  # orthogonal projection onto span, on vec(M)
        self.full = np.abs(self.proj - np.eye(k * k)).max() < 1e-12

    def ambient(self, c):
        n, k = self.n, self.k
        return np.einsum("ijs,sab->iajb", c, self.basis).reshape(n * k, n * k)

    def image(self, c):
        n, (_, r, q) = self.n, self.values.shape
        return np.einsum("ijs,sab->iajb", c, self.values).reshape(n * r, n * q)

    def coords(self, m):
        n, k = self.n, self.k
        blocks = m.reshape(n, k, n, k).transpose(0, 2, 1, 3).reshape(n, n, k * k)
        return blocks @ self.coord_map.T

    def project(self, m):
        if self.full:
            return m
        n, k = self.n, self.k
        blocks = m.reshape(n, k, n, k).transpose(0, 2, 1, 3).reshape(n, n, k * k)
        blocks = blocks @ self.proj.T
        return blocks.reshape(n, n, k, k).transpose(0, 2, 1, 3).reshape(n * k, n * k)

    def gradient(self, eta, xi):
        """Ambient G (inside the algebra) with Re tr(G* M) = Re eta* phi_n(M) xi."""
        n, (_, r, q) = self.n, self.values.shape
        g = np.einsum("ia,sab,jb->ijs", np.conj(eta.reshape(n, r)), self.values, xi.reshape(n, q))
        vec = np.conj(g @ self.coord_map) @ self.proj.T
        k = self.k
        return vec.reshape(n, n, k, k).transpose(0, 2, 1, 3).reshape(n * k, n * k)

    def feasible(self, m, rounds=10):
        """Approximate projection onto the unit ball of M_n(A), then an exact rescale."""
        for _ in range(rounds):
            m = self.project(m)
            if self.full:
                break
            u, s, vh = np.linalg.svd(m)
            if s[0] <= 1:
                break
            m = (u * np.minimum(s, 1.0)) @ vh
        m = self.project(m)
        nrm = la.op_norm(m)
        if nrm == 0:
            return m
        # leave a hair of room so the computed norm is certainly <= 1
        return m / (nrm * (1 + 1e-13))

    def value(self, m):
        return la.op_norm(self.image(self.coords(m)))


def _maximize(basis, values, n, restarts, iterations, tol, rng):
    amp = _Amplifier(basis, values, n)
    size = n * amp.k
    best = 0.0
    for _ in range(restarts):
        m = amp.feasible(rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size)))
        val = amp.value(m)
        best = max(best, val)
        for _ in range(iterations):
            img = amp.image(amp.coords(m))
            u, s, vh = np.linalg.svd(img)
            if s[0] == 0:
                break
            g = amp.gradient(u[:, 0], np.conj(vh[0]))
            if not np.any(np.abs(g) > 0):
                break
            m = amp.feasible(la.polar_unitary(g))
            new = amp.value(m)
            best = max(best, new)
            if new - val < tol:
                break
            val = new
    return best


def amplification_norm(phi, n, restarts=16, iterations=200, tol=1e-9, rng=None):
    """Certified lower bound on ||phi_n|| by multi-start alternating maximization."""
    n = int(n)
    if n < 1:
        raise MalformedInputError(f"level must be >= 1, got {n}")
    if n * phi.algebra.ambient > AMPLIFICATION_CAP:
        raise ResourceError(f"level {n} on M_{phi.algebra.ambient} exceeds n*k <= {AMPLIFICATION_CAP}")
    rng = np.random.default_rng(0) if rng is None else rng
    return _maximize(phi.algebra.basis, phi.values, n, restarts, iterations, tol, rng)


def cb_profile(phi, n_max, restarts=16, iterations=200, tol=1e-9, rng=None):
    """Level profile of ||phi_n||, made nondecreasing by a running maximum."""
    n_max = int(n_max)
    if n_max < 1:
        raise MalformedInputError(f"n_max must be >= 1, got {n_max}")
    if n_max * phi.algebra.ambient > AMPLIFICATION_CAP:
        raise ResourceError(f"level {n_max} on M_{phi.algebra.ambient} exceeds n*k <= {AMPLIFICATION_CAP}")
    rng = np.random.default_rng(0) if rng is None else rng
    raw = [amplification_norm(phi, n, restarts, iterations, tol, rng) for n in range(1, n_max + 1)]
    return CbProfile(list(range(1, n_max + 1)), np.maximum.accumulate(raw).tolist(), raw,
                     restarts, iterations)


def transpose_map(k):
    """a -> a^T on M_k in the matrix-unit basis."""
    alg = FiniteAlgebra.full_matrix(k)
    return LinearMapOnAlgebra(alg, k, np.transpose(alg.basis, (0, 2, 1)))


def identity_map(alg):
    return LinearMapOnAlgebra(alg, alg.ambient, alg.basis)


@dataclass(frozen=True)
class DilationNorms:
    """Estimates are ratios of optimizer lower bounds; bounds are the analytic ones."""
    S_norm: float
    T_norm: float
    pi_ratio: float
    S_bound: float
    pi_bound: float


def _w_norm(alg, w, v, restarts, rng):
    """||w|| in L(A, V) with the ambient operator norm on A."""
    return _maximize(alg.basis, w.reshape(alg.dim, v, 1), 1, restarts, 100, 1e-9, rng)


def dilation_operator_norms(dil, phi, samples=8, restarts=4, rng=None):
    """Estimate ||S||, ||T|| and max_b ||pi(b)|| / ||b|| with W normed inside L(A, V).

    ||T|| = ||phi||; S is evaluation at the identity so ||S|| <= 1, and
    pi(b) is precomposition with right multiplication so ||pi(b)|| <= ||b||.
    """
    alg = phi.algebra
    rng = np.random.default_rng(0) if rng is None else rng
    v = phi.target_dim
    t_norm = amplification_norm(phi, 1, restarts=restarts, rng=rng)
    if dil.W_dim == 0:
        return DilationNorms(0.0, 0.0, 0.0, 1.0, 1.0)
    cands = [dil.W_basis[:, i] for i in range(dil.W_dim)]
    cands += list((rng.normal(size=(samples, dil.W_dim)) + 1j * rng.normal(size=(samples, dil.W_dim)))
                  @ dil.W_basis.T)
    b_norms = [la.op_norm(b) for b in alg.basis]
    s_best = pi_best = 0.0
    for w in cands:
        wn = _w_norm(alg, w, v, restarts, rng)
        if wn == 0:
            continue
        s_best = max(s_best, float(np.linalg.norm(dil.S @ dil.coords(w))) / wn)
        for s in range(alg.dim):
            pw = dil.W_basis @ (dil.pi[s] @ dil.coords(w))
            pi_best = max(pi_best, _w_norm(alg, pw, v, restarts, rng) / (wn * b_norms[s]))
    return DilationNorms(s_best, t_norm, pi_best, 1.0, 1.0)

