import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiport import (
    PortPair,
    TransferMatrix,
    UndefinedVisibilityError,
    ValidationError,
    VisibilityMatrix,
    beamsplitter_matrix,
    classical_coincidence,
    fourport_closed_form,
    quantum_coincidence,
    symmetric_tritter_reference,
    tritter_unitary,
    visibility,
    visibility_matrix,
    visibility_sweep,
)
from multiport.two_photon import distinct_pairs, two_photon_probability
from oracles import coincidence_visibility, fock_output_distribution, random_unitary

unitary_seeds = st.integers(0, 2**32 - 1)


def test_port_pair_normalizes_order():
    assert PortPair(3, 1) == PortPair(1, 3)
    assert PortPair.of((2, 2)).distinct is False
    assert PortPair(1, 2).label == "12"
    with pytest.raises(ValidationError):
        PortPair(0, 1)
    with pytest.raises(ValidationError):
        PortPair(1, 4).check(3)


def test_distinct_pairs_count():
    assert len(distinct_pairs(3)) == 3
    assert len(distinct_pairs(4)) == 6


def test_balanced_beamsplitter_full_dip():
    u = beamsplitter_matrix(1, 2, 0.5, 2)
    assert abs(visibility(u, (1, 2), (1, 2)) - 1.0) <= 1e-12
    assert quantum_coincidence(u, (1, 2), (1, 2)) == pytest.approx(0.0, abs=1e-15)


def test_same_port_input_has_no_interference():
    for u in (beamsplitter_matrix(1, 2, 0.5, 2), tritter_unitary((0.81, 0.51))):
        assert abs(visibility(u, (1, 1), (1, 2))) <= 1e-12


def test_fourier_tritter_all_half():
    vm = visibility_matrix(symmetric_tritter_reference())
    assert len(vm) == 9
    assert np.allclose(vm.as_array(), 0.5, atol=1e-12)


def test_fourport_entry_by_direct_arithmetic():
    eta = 0.377
    u = fourport_closed_form((eta, 0.07 * math.pi))
    q = (eta**2 - eta * (1 - eta)) ** 2
    c = eta**4 + eta**2 * (1 - eta) ** 2
    assert visibility(u, (1, 2), (1, 2)) == pytest.approx((c - q) / c, abs=1e-12)
    assert visibility(u, (1, 2), (1, 2)) == pytest.approx(0.88587, abs=1e-5)


def test_fourport_visibilities_exceed_half_in_magnitude():
    vm = visibility_matrix(fourport_closed_form((0.377, 0.07 * math.pi)))
    assert len(vm) == 36
    assert np.all(np.abs(vm.as_array()) > 0.5)
    assert np.any(vm.as_array() < 0) and np.any(vm.as_array() > 0)


def test_tritter_reduced_entries():
    vm = visibility_matrix(tritter_unitary((0.81, 0.51)))
    low = {vm.key(*k) for k in [((1, 2), (2, 3)), ((1, 3), (1, 3)), ((2, 3), (1, 2))]}
    reduced = [vm.values[k] for k in low]
    others = [v for k, v in vm.values.items() if k not in low]
    assert max(reduced) < 0.15 < min(others)


def test_tritter_against_fock_oracle():
    u = tritter_unitary((0.81, 0.51))
    vm = visibility_matrix(u)
    for (ip, op), v in vm.values.items():
        ref = coincidence_visibility(u.u, ip.a - 1, ip.b - 1, op.a - 1, op.b - 1)
        assert v == pytest.approx(ref, abs=1e-12)


def test_identity_entries_are_undefined():
    vm = visibility_matrix(TransferMatrix(np.eye(3)))
    assert len(vm) == 3 and len(vm.undefined) == 6
    assert np.isnan(vm.as_array()).sum() == 6
    with pytest.raises(UndefinedVisibilityError) as exc:
        visibility(np.eye(3), (1, 2), (1, 3))
    assert exc.value.classical == 0.0


def test_visibility_matrix_accessors():
    vm = visibility_matrix(tritter_unitary((0.81, 0.51)))
    assert ((2, 1), (3, 1)) in vm
    assert vm.get((1, 2), (1, 3)) == vm[(1, 2), (1, 3)]
    assert vm.sigma((1, 2), (1, 3)) is None
    sub = vm.for_input((2, 3))
    assert len(sub) == 3 and sub.input_pairs == (PortPair(2, 3),)
    assert vm.keys() == sorted(vm.keys())
    assert VisibilityMatrix(3).as_array().shape == (0, 0)


def test_sweep_grid_and_validation():
    sweep = visibility_sweep(1.0, 2.0, 5)
    assert [g for g, _ in sweep] == pytest.approx([0, 0.5, 1.0, 1.5, 2.0])
    assert len(sweep[0][1]) == 3  # identity at g = 0: only (ij, ij) defined
    with pytest.raises(ValidationError):
        visibility_sweep(1.0, 2.0, 1)
    with pytest.raises(ValidationError):
        visibility_sweep(-1.0, 2.0, 3)


def test_symmetric_sweep_crosses_at_half():
    g0 = 2 * math.pi / 9
    sweep = visibility_sweep(1.0, 2 * g0, 101)
    g, vm = sweep[50]
    assert g == pytest.approx(g0)
    assert np.allclose(vm.as_array(), 0.5, atol=1e-9)


def relabel(u, p_in, p_out):
    return u[np.ix_(p_in, p_out)]


@settings(max_examples=40, deadline=None)
@given(unitary_seeds, st.sampled_from([3, 4]))
def test_relabeling_covariance(seed, n):
    rng = np.random.default_rng(seed)
    u = random_unitary(n, rng)
    p_in, p_out = rng.permutation(n), rng.permutation(n)
    w = relabel(u, p_in, p_out)
    inv_in, inv_out = np.argsort(p_in), np.argsort(p_out)
    for (i, j), (k, l) in itertools.product(itertools.combinations(range(n), 2), repeat=2):
        v_new = visibility(w, (inv_in[i] + 1, inv_in[j] + 1), (inv_out[k] + 1, inv_out[l] + 1))
        assert v_new == pytest.approx(visibility(u, (i + 1, j + 1), (k + 1, l + 1)), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(unitary_seeds, st.sampled_from([2, 3, 4]))
def test_local_phase_invariance(seed, n):
    rng = np.random.default_rng(seed)
    u = random_unitary(n, rng)
    d_in = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    d_out = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    w = d_in[:, None] * u * d_out[None, :]
    a, b = visibility_matrix(u), visibility_matrix(w)
    for k, v in a.values.items():
        assert b.values[k] == pytest.approx(v, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(unitary_seeds, st.sampled_from([2, 3, 4, 5]))
def test_probabilities_sum_to_one_and_match_fock_oracle(seed, n):
    u = random_unitary(n, np.random.default_rng(seed))
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        ref = fock_output_distribution(u, [i, j])
        total = 0.0
        for k, l in itertools.combinations_with_replacement(range(n), 2):
            p = two_photon_probability(u, (i + 1, j + 1), (k + 1, l + 1))
            assert p == pytest.approx(ref.get((k, l), 0.0), abs=1e-12)
            total += p
        assert total == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(unitary_seeds)
def test_visibility_bounds(seed):
    u = random_unitary(4, np.random.default_rng(seed))
    vm = visibility_matrix(u)
    arr = vm.as_array()
    assert np.all(arr <= 1 + 1e-12) and np.all(arr >= -1 - 1e-12)
    for ip, op in vm.keys():
        assert quantum_coincidence(u, ip, op) <= 2 * classical_coincidence(u, ip, op) + 1e-12
