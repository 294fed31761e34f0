import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import even_family
from isingobs.core import OmegaIndicatrix
from isingobs.fock import (
    FockSpace,
    FockVector,
    PowerIterationError,
    RapidityGrid,
    TruncatedFockOperator,
    TruncationError,
    annihilator,
    assemble_observable,
    closability_sum,
    conjugate_by_J,
    creator,
    damping,
    dump_operator,
    field,
    hamiltonian,
    identity,
    load_operator,
    monomial_operator,
    projector,
    qomega_norm,
    spectral_norm,
)
from isingobs.oracles import dense_assembly, dense_operator_blocks, jordan_wigner_modes


def cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def test_space_dimensions():
    S = FockSpace(6, 3)
    assert S.dims == [math.comb(6, k) for k in range(4)]
    assert S.total_dim == sum(S.dims)
    assert FockSpace(3, 7).K == 3
    assert FockSpace(5, 0).dims == [1]


def test_index_inverts_masks():
    S = FockSpace(7, 3)
    for k in range(4):
        assert np.array_equal(S.index(k, S.masks[k]), np.arange(S.dim(k)))


def test_grid_inner_product(rng):
    grid = RapidityGrid(12, 3.0)
    g, h = cvec(rng, 12), cvec(rng, 12)
    assert grid.inner(g, h) == pytest.approx(np.sum(grid.weights * np.conj(g) * h))
    assert np.sum(grid.weights) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        RapidityGrid(0)


@pytest.mark.parametrize("N", [3, 4])
def test_modes_match_jordan_wigner(N, rng):
    # single-node creators are sqrt(w_i) c_i^dagger in the dense JW picture
    grid = RapidityGrid(N, 2.0)
    S = FockSpace(N, N)
    c = jordan_wigner_modes(N)
    for i in range(N):
        e = np.eye(N)[i]
        op = creator(S, grid, e)
        ref = dense_operator_blocks(np.sqrt(grid.weights[i]) * c[i].T, S)
        for key, blk in ref.items():
            assert np.allclose(op.block(*key), blk, atol=1e-15)


def test_car_relations(rng):
    N, K = 10, 3
    grid, S = RapidityGrid(N, 3.0), FockSpace(N, K)
    g, h = cvec(rng, N), cvec(rng, N)
    zd_h, zd_g = creator(S, grid, h), creator(S, grid, g)
    z_g = annihilator(S, grid, np.conj(g))
    ac = (z_g @ zd_h + zd_h @ z_g).project(K - 1) - grid.inner(g, h) * projector(S, K - 1)
    assert abs(ac.to_sparse()).max() < 1e-12
    assert (zd_h @ zd_g + zd_g @ zd_h).to_sparse().nnz == 0 or abs((zd_h @ zd_g + zd_g @ zd_h).to_sparse()).max() < 1e-14


def test_adjoint_of_creator(rng):
    grid, S = RapidityGrid(5, 2.0), FockSpace(5, 3)
    h = cvec(rng, 5)
    diff = creator(S, grid, h).adjoint() - annihilator(S, grid, np.conj(h))
    assert abs(diff.to_sparse()).max() < 1e-15


def test_operator_algebra(rng):
    grid, S = RapidityGrid(5, 2.0), FockSpace(5, 3)
    A = creator(S, grid, cvec(rng, 5)) + annihilator(S, grid, cvec(rng, 5))
    B = 2.0 * creator(S, grid, cvec(rng, 5))
    lhs = (A @ B).adjoint().to_matrix()
    rhs = (B.adjoint() @ A.adjoint()).to_matrix()
    assert np.allclose(lhs, rhs)
    assert np.allclose((A - A).to_matrix(), 0)
    assert A.particle_span == 1
    assert np.allclose((identity(S) @ A).to_matrix(), A.to_matrix())


def test_truncation_errors():
    S = FockSpace(4, 0)
    with pytest.raises(TruncationError):
        creator(S, RapidityGrid(4), np.ones(4))
    S2 = FockSpace(4, 2)
    with pytest.raises(TruncationError):
        monomial_operator(S2, 3, 0, np.zeros((4, 1)))
    with pytest.raises(ValueError):
        monomial_operator(S2, 1, 1, np.zeros((3, 4)))
    with pytest.raises(TruncationError):
        TruncatedFockOperator(S2, {(3, 0): sp.csr_matrix((4, 1))})


def test_hamiltonian_and_damping():
    grid, S = RapidityGrid(4, 2.0), FockSpace(4, 2)
    H = hamiltonian(S, grid)
    ch = np.cosh(grid.nodes)
    assert np.allclose(np.diag(H.block(1, 1)).real, ch)
    D = damping(S, grid, OmegaIndicatrix.log(2))
    assert np.allclose(np.diag(D.block(1, 1)).real, (1 + ch) ** -2)


@given(st.integers(0, 2**32 - 1))
def test_tensor_roundtrip(seed):
    rng = np.random.default_rng(seed)
    N = 5
    grid, S = RapidityGrid(N, 2.0), FockSpace(N, 3)
    T = rng.normal(size=(N, N, N)) + 1j * rng.normal(size=(N, N, N))
    A = sum(s * T.transpose(p) for s, p in [(1, (0, 1, 2)), (-1, (1, 0, 2)), (-1, (0, 2, 1)),
                                            (1, (1, 2, 0)), (1, (2, 0, 1)), (-1, (2, 1, 0))])
    v = FockVector.from_tensors(grid, S, {3: A})
    assert np.allclose(v.to_tensors()[3], A)
    # <v, v> in stored form equals the full weighted sum divided by 3!
    w = grid.weights
    full = np.einsum("ijk,i,j,k->", np.abs(A) ** 2, w, w, w) / 6
    assert v.norm() ** 2 == pytest.approx(full)


def test_from_tensors_rejects_symmetric():
    grid, S = RapidityGrid(3, 2.0), FockSpace(3, 2)
    with pytest.raises(ValueError):
        FockVector.from_tensors(grid, S, {2: np.ones((3, 3))})


def test_vacuum_and_creator_action():
    grid, S = RapidityGrid(4, 2.0), FockSpace(4, 2)
    h = np.array([1.0, 2.0, 0.5j, -1.0])
    v = creator(S, grid, h).apply(FockVector.vacuum(grid, S))
    # z^dagger(h) Omega has one-particle wave function h
    assert np.allclose(v.sectors[1], h)
    assert v.norm() ** 2 == pytest.approx(grid.inner(h, h).real)


def test_spectral_norm_matches_svd(rng):
    M = rng.normal(size=(30, 20)) + 1j * rng.normal(size=(30, 20))
    assert spectral_norm(sp.csr_matrix(M), tol=1e-12) == pytest.approx(np.linalg.norm(M, 2), rel=1e-6)
    assert spectral_norm(sp.csr_matrix((3, 3))) == 0.0
    with pytest.raises(PowerIterationError):
        spectral_norm(sp.csr_matrix(M), max_iter=1)


def test_qomega_vacuum_projector():
    grid, S = RapidityGrid(6, 3.0), FockSpace(6, 2)
    assert qomega_norm(projector(S, 0), 2, OmegaIndicatrix.log(3), grid) == pytest.approx(2.0)


def test_qomega_single_node_creator():
    grid, S = RapidityGrid(6, 3.0), FockSpace(6, 2)
    om = OmegaIndicatrix.log(3)
    i = 2
    A = creator(S, grid, np.eye(6)[i])
    expected = math.sqrt(grid.weights[i]) * (1 + math.exp(-om(math.cosh(grid.nodes[i]))))
    assert qomega_norm(A, 2, om, grid, tol=1e-12) == pytest.approx(expected, rel=1e-8)


def test_qomega_monotone_in_strength(even1):
    grid, S = RapidityGrid(8, 3.0), FockSpace(8, 2)
    A = assemble_observable(even1, S, grid)
    vals = [qomega_norm(A, 2, OmegaIndicatrix.log(l), grid) for l in (1, 2, 4, 8)]
    assert all(b <= a * (1 + 1e-8) for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("K", [1, 2])
def test_assembly_matches_dense_oracle(small_bump, odd, K):
    from isingobs.formfactors import OddTower

    grid = RapidityGrid(3, 3.0)
    fams = [even_family(1, small_bump), OddTower(odd.tower, small_bump, 0.5)]
    for fam in fams:
        A = assemble_observable(fam, FockSpace(3, K), grid)
        ref = dense_assembly(fam, 3, K, grid)
        assert max(np.abs(A.block(*key) - blk).max() for key, blk in ref.items()) < 1e-12


def test_quadratic_form_matches_matrix_elements(even1):
    # <Phi, A Psi> from the assembled matrix equals the kernel sum over index pairs
    grid, S = RapidityGrid(4, 2.0), FockSpace(4, 2)
    A = assemble_observable(even1, S, grid)
    from isingobs.formfactors import boundary_coefficient

    psi = FockVector.vacuum(grid, S)
    phi_coeffs = {2: np.arange(1, 7) * (1 + 0.5j)}
    phi = FockVector(grid, S, phi_coeffs)
    lhs = phi.inner(A.apply(psi))
    th, w = grid.nodes, grid.weights
    rhs = 0j
    for a, (i, j) in enumerate(S.combos[2]):
        f = boundary_coefficient(even1, 2, 0, th[[i, j]], np.zeros(0)).value
        rhs += np.conj(phi_coeffs[2][a]) * f * w[i] * w[j]
    assert lhs == pytest.approx(complex(rhs), rel=1e-12)


def test_J_is_an_involution(rng):
    grid, S = RapidityGrid(5, 2.0), FockSpace(5, 3)
    A = creator(S, grid, cvec(rng, 5)) @ annihilator(S, grid, cvec(rng, 5))
    assert np.allclose(conjugate_by_J(conjugate_by_J(A)).to_matrix(), A.to_matrix())


def test_fields_are_hermitian(bump):
    grid, S = RapidityGrid(6, 3.0), FockSpace(6, 3)
    for kind in ("phi", "phi_prime"):
        F = field(bump, kind, S, grid)
        M = F.to_matrix()
        # the top sector loses its creator partner under truncation
        top = S.offsets()[S.K]
        assert np.allclose(M[:top, :top], M[:top, :top].conj().T, atol=1e-14)
    with pytest.raises(ValueError):
        field(bump, "psi", S, grid)


def test_dump_roundtrip(tmp_path, even1):
    grid, S = RapidityGrid(4, 2.0), FockSpace(4, 2)
    A = assemble_observable(even1, S, grid)
    dump_operator(A, grid, tmp_path / "a.npz")
    B = load_operator(S, tmp_path / "a.npz")
    assert np.array_equal(A.to_matrix(), B.to_matrix())
    dump_operator(A, grid, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0].startswith("# nodes") and lines[1].startswith("# weights")
    assert lines[2] == "k_out,k_in,row,col,re,im"


def test_even_closability_terminates(bump):
    from isingobs.formfactors import EvenTerminating
    from isingobs.laurent import SymmetricLaurentPolynomial

    fam = EvenTerminating(1, SymmetricLaurentPolynomial.constant(2), bump, 0.5)
    rep = closability_sum(fam, 0, OmegaIndicatrix.log(4), M_max=4, nodes=24)
    assert rep.verdict == "converging" and rep.note == "terminating series"
    assert sum(1 for t in rep.terms if t) == 1
    rows = rep.rows()
    assert [r[0] for r in rows] == list(range(5))
