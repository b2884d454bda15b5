import numpy as np
import pytest

from phonon_bell.errors import CapacityError, ParameterError
from phonon_bell.modespace import (
    build_mode_space,
    embed_projector,
    ladder_operator,
)


def test_dims_and_total_dim():
    s = build_mode_space([2, 3, 4])
    assert s.n_modes == 3
    assert s.total_dim == 24


def test_rejects_bad_dims():
    with pytest.raises(ParameterError):
        build_mode_space([])
    with pytest.raises(ParameterError):
        build_mode_space([3, 1, 3])
    with pytest.raises(ParameterError):
        build_mode_space([3, -2, 3])


def test_capacity_cap():
    with pytest.raises(CapacityError):
        build_mode_space([10, 10, 10, 10], dim_cap=256)


def test_single_mode_ladder_matrix_elements():
    s = build_mode_space([4])
    a = s.annihilation(0)
    # a|n> = sqrt(n)|n-1>
    for n in range(1, 4):
        assert a[n - 1, n] == pytest.approx(np.sqrt(n))
    assert np.count_nonzero(a) == 3


def test_commutator_truncated():
    # [a, a^dag] = 1 on all but the top Fock level
    s = build_mode_space([5])
    a = s.annihilation(0)
    comm = a @ a.conj().T - a.conj().T @ a
    expect = np.eye(5)
    expect[-1, -1] = -4.0  # truncation artifact on the edge state
    assert np.allclose(comm, expect)


def test_number_operator_consistency():
    s = build_mode_space([3, 3])
    for m in range(2):
        a = s.annihilation(m)
        assert np.allclose(s.number(m), a.conj().T @ a)


def test_embedding_acts_on_correct_mode():
    s = build_mode_space([2, 3])
    n1 = s.number(1)
    # diagonal pattern: occupation of mode 1 repeats for each level of mode 0
    assert np.allclose(np.diag(n1), [0, 1, 2, 0, 1, 2])


def test_operators_commute_across_modes(rng):
    s = build_mode_space([3, 3, 3])
    a0 = s.annihilation(0)
    a2 = s.creation(2)
    assert np.allclose(a0 @ a2, a2 @ a0)


def test_projector_resolution_of_identity():
    s = build_mode_space([3, 4])
    for m in range(2):
        tot = sum(s.projector(m, k) for k in range(s.dims[m]))
        assert np.allclose(tot, np.eye(s.total_dim))


def test_projector_is_idempotent():
    s = build_mode_space([3, 3])
    P = s.projector(1, 1)
    assert np.allclose(P @ P, P)
    assert np.allclose(P, P.conj().T)


def test_wrapper_ops_match_methods():
    s = build_mode_space([3, 3])
    assert np.allclose(ladder_operator(s, 0, "annihilation").mat, s.annihilation(0))
    assert np.allclose(ladder_operator(s, 1, "creation").mat, s.creation(1))
    assert np.allclose(ladder_operator(s, 1, "number").mat, s.number(1))
    assert np.allclose(embed_projector(s, 0, 2).mat, s.projector(0, 2))


def test_bad_mode_and_level():
    s = build_mode_space([3, 3])
    with pytest.raises(ParameterError):
        s.annihilation(5)
    with pytest.raises(ParameterError):
        s.projector(0, 3)
    with pytest.raises(ParameterError):
        ladder_operator(s, 0, "nonsense")
