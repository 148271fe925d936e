import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framedil.dilation import (ElementaryVector, GenericDilationSystem, alpha_norm, alpha_norms,
                               build_elementary, example_3_9, factorization_residual, invariant_kernel,
                               pvm_residuals, quotient_reduce, rank_report, restriction_reduce,
                               verify_dilation_norm_conditions, verify_generic)
from framedil.errors import MalformedInputError, PreconditionError, ResourceError
from framedil.frames import Frame
from framedil.generators import make_rng, random_ovm, random_positive_ovm
from framedil.ovm import FiniteOVM, evaluate, induce_from_frame

from conftest import cgauss


def brute_alpha(components):
    m = len(components)
    best = 0.0
    for r in range(1, m + 1):
        for s in itertools.combinations(range(m), r):
            best = max(best, np.linalg.norm(sum(components[i] for i in s)))
    return best


def padded(system, pad=1):
    """Same system with `pad` unused coordinates added to atom 0."""
    F = system.F_atoms
    m, n, _ = F.shape
    Fp = np.zeros((m, n + pad, n + pad), dtype=complex)
    Fp[:, :n, :n] = F
    Fp[0, n:, n:] = np.eye(pad)
    S = np.hstack([system.S, np.zeros((system.S.shape[0], pad))])
    T = np.vstack([system.T, np.zeros((pad, system.T.shape[1]))])
    return GenericDilationSystem(Fp, S, T)


def test_onb_total_dim():
    sys_ = build_elementary(induce_from_frame(Frame(np.eye(4))))
    assert sys_.total_dim == 4


def test_scaled_identity_atoms_total_dim():
    m, d = 3, 2
    sys_ = build_elementary(FiniteOVM(np.array([np.eye(d) / m] * m)))
    assert sys_.total_dim == m * d


def test_factorization_random(rng):
    for _ in range(5):
        ovm = random_ovm(rng, 3, 4, 7)
        sys_ = build_elementary(ovm)
        resid, _ = factorization_residual(sys_, ovm)
        assert resid < 1e-12


def test_alpha_trivial_cases(rng):
    ovm = random_ovm(rng, 3, 3, 4, ranks=[3, 3, 3, 3])
    sys_ = build_elementary(ovm)
    v = cgauss(rng, 3)
    comps = np.zeros((4, 3), dtype=complex)
    comps[2] = v
    assert abs(alpha_norm(ElementaryVector.from_components(sys_, comps)) - np.linalg.norm(v)) < 1e-12
    comps[0] = -v
    # singletons win over the cancelling total
    assert abs(alpha_norm(ElementaryVector.from_components(sys_, comps)) - np.linalg.norm(v)) < 1e-12


def test_alpha_matches_brute_force(rng):
    for _ in range(5):
        ovm = random_ovm(rng, 2, 3, 6)
        sys_ = build_elementary(ovm)
        f = ElementaryVector(sys_, cgauss(rng, sys_.total_dim))
        assert abs(alpha_norm(f) - brute_alpha(f.components())) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 7))
def test_alpha_is_a_norm(seed, m):
    rng = make_rng(seed)
    ovm = random_ovm(rng, 3, 3, m)
    sys_ = build_elementary(ovm)
    R = sys_.total_dim
    f, g = cgauss(rng, 3, R)[:2]
    c = complex(rng.normal(), rng.normal())
    a = lambda v: float(alpha_norms(sys_.components(v)[None])[0])
    assert abs(a(c * f) - abs(c) * a(f)) <= 1e-12 * max(1, abs(c) * a(f))
    assert a(f + g) <= a(f) + a(g) + 1e-12
    if R:
        assert a(f) > 0
    assert a(np.zeros(R)) == 0


def test_from_generators_matches_components(rng):
    ovm = random_ovm(rng, 3, 4, 5)
    sys_ = build_elementary(ovm)
    terms = [(complex(rng.normal(), rng.normal()), int(rng.integers(0, 32)), cgauss(rng, 3)) for _ in range(4)]
    f = ElementaryVector.from_generators(sys_, terms)
    expect = np.zeros((5, 4), dtype=complex)
    for c, mask, x in terms:
        for i in range(5):
            if mask >> i & 1:
                expect[i] += c * ovm.atoms[i] @ x
    assert np.abs(f.components() - expect).max() < 1e-12
    # ||E_{B,x}||_alpha = max over A of ||E(B n A) x||
    x = cgauss(rng, 3)
    g = ElementaryVector.from_generators(sys_, [(1.0, 0b10110, x)])
    brute = max(np.linalg.norm(evaluate(ovm, 0b10110 & a) @ x) for a in range(32))
    assert abs(alpha_norm(g) - brute) < 1e-12


def test_from_components_rejects_out_of_range(rng):
    ovm = random_ovm(rng, 3, 3, 2, ranks=[1, 1])
    sys_ = build_elementary(ovm)
    with pytest.raises(MalformedInputError, match="leaves range"):
        ElementaryVector.from_components(sys_, cgauss(rng, 2, 3))


def test_dilation_norm_conditions(rng):
    ovm = random_ovm(rng, 3, 3, 6)
    sys_ = build_elementary(ovm)
    rep = verify_dilation_norm_conditions(sys_, samples=300, rng=rng, exhaustive=True)
    assert rep.passed and rep.counterexample is None
    assert rep.pvm["mask_pairs_mode"] == "exhaustive" and rep.pvm["mask_pairs"] == 0
    # S f is the total sum, so the ratio reaches 1 only in degenerate directions
    assert rep.s_ratio <= 1 + 1e-12 and rep.f_ratio_all_masks <= 1 + 1e-12
    assert np.abs(sys_.F(63) - np.eye(sys_.total_dim)).max() == 0
    assert not np.any(sys_.F(0))


def test_zero_ovm_has_trivial_dilation():
    ovm = FiniteOVM(np.zeros((3, 2, 2)))
    sys_ = build_elementary(ovm)
    assert sys_.total_dim == 0
    assert verify_dilation_norm_conditions(sys_).passed


def test_alpha_atom_cap():
    ovm = FiniteOVM(np.ones((21, 1, 1)))
    sys_ = build_elementary(ovm)
    with pytest.raises(ResourceError):
        alpha_norm(ElementaryVector(sys_, np.ones(21)))


def test_verify_generic_elementary_and_padded(rng):
    ovm = random_ovm(rng, 3, 3, 5)
    sys_ = build_elementary(ovm).as_generic()
    rep = verify_generic(sys_, ovm)
    assert rep.injective and rep.linearly_minimal and rep.factorizes
    rep = verify_generic(padded(sys_, 2), ovm)
    assert rep.injective and not rep.linearly_minimal
    assert rep.Z_dim - rep.span_dim == 2


def test_verify_generic_reports_bad_factorization(rng):
    ovm = random_ovm(rng, 2, 2, 3, ranks=[2, 2, 2])
    sys_ = build_elementary(ovm).as_generic()
    broken = GenericDilationSystem(sys_.F_atoms, 2 * sys_.S, sys_.T)
    rep = verify_generic(broken, ovm)
    assert not rep.factorizes and rep.worst_mask != 0
    with pytest.raises(MalformedInputError):
        verify_generic(sys_, random_ovm(rng, 3, 2, 3))


def test_example_3_9_structure():
    phi, Phi = example_3_9(2, 1)
    assert np.abs(Phi.S @ Phi.T - np.eye(2)).max() == 0
    rep = verify_generic(Phi, phi)
    assert not rep.injective and rep.linearly_minimal and rep.factorizes
    assert rep.kernel_dim == 1


@pytest.mark.parametrize("k,j", [(1, 1), (2, 1), (3, 2), (4, 3)])
def test_example_3_9_reductions(k, j, rng):
    w = rng.normal(size=k)
    w = w / w.sum()
    phi, Phi = example_3_9(k, j, w)
    red = quotient_reduce(restriction_reduce(Phi))
    assert red.Z_dim == k
    rep = verify_generic(red, phi)
    assert rep.factorization_residual < 1e-10 and rep.injective


def test_example_3_9_bad_weights():
    with pytest.raises(MalformedInputError, match="must equal 1"):
        example_3_9(2, 1, [0.5, 0.4])
    with pytest.raises(MalformedInputError):
        example_3_9(2, 1, [1.0])
    with pytest.raises(MalformedInputError):
        example_3_9(0, 1)


def test_restriction_reduce_dimensions(rng):
    ovm = random_ovm(rng, 3, 3, 4)
    el = build_elementary(ovm)
    sys_ = el.as_generic()
    assert restriction_reduce(sys_).Z_dim == el.total_dim
    assert restriction_reduce(padded(sys_, 3)).Z_dim == el.total_dim
    # conjugate into a bigger Z by an isometry; the complement goes to atom 0
    n, extra = el.total_dim, 3
    U = np.linalg.qr(cgauss(rng, n + extra, n))[0]
    comp = np.eye(n + extra) - U @ U.conj().T
    F = U[None] @ sys_.F_atoms @ U.conj().T[None]
    F[0] += comp
    big = GenericDilationSystem(F, sys_.S @ U.conj().T, U @ sys_.T)
    assert factorization_residual(big, ovm)[0] < 1e-12
    red = restriction_reduce(big)
    assert red.Z_dim == n
    assert verify_generic(red, ovm).factorization_residual < 1e-10


def test_quotient_reduce_cases(rng):
    ovm = random_ovm(rng, 3, 3, 4)
    sys_ = build_elementary(ovm).as_generic()
    assert quotient_reduce(sys_).Z_dim == sys_.Z_dim
    with pytest.raises(PreconditionError, match="restriction_reduce"):
        quotient_reduce(padded(sys_))
    # S injective: nothing to remove
    onb = build_elementary(induce_from_frame(Frame(np.eye(3)))).as_generic()
    assert invariant_kernel(onb).shape[1] == 0
    assert quotient_reduce(onb).Z_dim == 3


def test_rank_report(rng):
    onb = induce_from_frame(Frame(np.eye(3)))
    assert rank_report(build_elementary(onb), onb).atoms == [(1, 1)] * 3
    m, d = 3, 2
    flat = FiniteOVM(np.array([np.eye(d) / m] * m))
    rep = rank_report(build_elementary(flat), flat)
    assert rep.atoms == [(d, d)] * m
    ovm = random_ovm(rng, 3, 4, 5)
    rep = rank_report(build_elementary(ovm), ovm)
    assert all(a == b for a, b in rep.atoms)
    atom_ranks = [b for _, b in rep.atoms]
    for mask, rank_e, sup_rank, rank_f in rep.events:
        members = [i for i in range(5) if mask >> i & 1]
        assert rank_f == sum(atom_ranks[i] for i in members)
        assert sup_rank >= max([atom_ranks[i] for i in members], default=0)
        assert rank_e <= rank_f


def test_pvm_residuals_sampled(rng):
    ovm = random_positive_ovm(rng, 2, 14)
    sys_ = build_elementary(ovm)
    res = pvm_residuals(sys_.F_atoms, exhaustive=True, rng=rng)
    assert res["mask_pairs_mode"] == "sampled" and res["mask_pairs"] == 0
