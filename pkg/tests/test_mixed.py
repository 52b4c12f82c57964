"""Tests for spectral preparation, gauge search, filtering, and mixed verdicts."""

import numpy as np
import pytest

from statekit.factor import kron as kron_factors
from statekit.linalg import SystemShape, kron_list
from statekit.mixed import (
    MixedState,
    _ratio_complete,
    build_scaling,
    check_mixed_equivalence,
    cluster_pairings,
    gauge_search,
    invariant_screen,
    normal_form,
    spectral_prep,
)
from statekit.oracle import FixtureParams, fixtures, make_equivalent_pair
from util import checked_mixed, random_complex, random_density

TWO_QUBITS = SystemShape((2, 2))
THREE_QUBITS = SystemShape((2, 2, 2))


def test_state_validation():
    bad_herm = np.eye(4, dtype=complex)
    bad_herm[0, 1] = 1.0
    with pytest.raises(ValueError):
        MixedState(TWO_QUBITS, bad_herm / 4.0)
    with pytest.raises(ValueError):
        MixedState(TWO_QUBITS, np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex))
    with pytest.raises(ValueError):
        MixedState(TWO_QUBITS, np.eye(4, dtype=complex) / 2.0)
    with pytest.raises(ValueError):
        MixedState(TWO_QUBITS, np.eye(8, dtype=complex) / 8.0)


def test_spectral_prep_full_corner_spectrum():
    a, b, c = 0.45, 0.4, 0.3
    state, _ = fixtures(2, FixtureParams(a=a, b=b, c=c, alpha=0.9, beta=0.8, gamma=0.6))
    k = 2 + a + b + c + 1 / a + 1 / b + 1 / c
    expected = np.array([1 / c, 1 / b, 1 / a, 2.0, a, b, c, 0.0]) / k
    data = spectral_prep(state)
    assert np.allclose(data.eigvals, expected, atol=1e-12)
    assert data.support_rank == 7
    assert np.all(np.diff(data.eigvals) <= 0)


def test_spectral_prep_half_corner_spectrum():
    a, b, c = 0.64, 0.58, 0.54
    state, _ = fixtures(3, FixtureParams(a=a, b=b, c=c))
    k = 2 + a + b + c + 1 / a + 1 / b + 1 / c
    expected = np.array([1 / c, 1 / b, 1 / a, 1.5, a, b, c, 0.5]) / k
    data = spectral_prep(state)
    assert np.allclose(data.eigvals, expected, atol=1e-12)
    assert data.support_rank == 8


def test_spectral_prep_reconstructs_and_clusters():
    rho = np.diag([0.4, 0.4, 0.2, 0.0]).astype(complex)
    data = spectral_prep(rho, (2, 2))
    assert data.support_rank == 3
    assert data.clusters == ((0, 1), (2,), (3,))
    q, w = data.eigvecs, data.eigvals
    assert np.allclose(q @ np.diag(w) @ q.conj().T, rho)


def test_build_scaling_satisfies_spectral_law():
    s1 = spectral_prep(random_density((2, 2), 0))
    s2 = spectral_prep(random_density((2, 2), 1))
    gauge = build_scaling(s1, s2)
    mags = np.array(gauge.magnitudes)
    r = gauge.support_rank
    assert np.allclose(mags[:r] * s2.eigvals[:r] * mags[:r], s1.eigvals[:r])
    assert np.all(mags[r:] == 1.0)
    assert gauge.phases == (0.0,) * len(mags)


def test_build_scaling_rejects_support_mismatch():
    full = spectral_prep(random_density((2, 2), 2))
    deficient = spectral_prep(np.diag([0.5, 0.3, 0.2, 0.0]).astype(complex), (2, 2))
    with pytest.raises(ValueError):
        build_scaling(full, deficient)


def test_gauge_search_identity_frames():
    lam = np.array([0.4, 0.3, 0.2, 0.1])
    s = spectral_prep(np.diag(lam).astype(complex), (2, 2))
    gauge = build_scaling(s, s)
    eye = np.eye(4, dtype=complex)
    result = gauge_search(eye, eye, gauge, (2, 2), eigvals=(s.eigvals, s.eigvals), seed=0)
    assert result is not None
    assert result.residual <= 1e-12
    assert np.allclose(np.abs(result.diagonal), 1.0)
    assert np.allclose(result.connector, eye)


def test_cluster_pairings_identity_first():
    pairings = cluster_pairings([(0, 1), (2,)])
    assert pairings[0] == (0, 1, 2)
    assert set(pairings) == {(0, 1, 2), (1, 0, 2)}


def test_cluster_pairings_refuses_large_clusters():
    assert cluster_pairings([tuple(range(5))]) is None
    assert cluster_pairings([(0, 1, 2), (3, 4, 5), (6, 7, 8)], budget=100) is None


def test_ratio_completion_fills_kernel_entry():
    diag = np.diag(kron_list([np.diag([1.0, 2.0]), np.diag([1.0, 3.0]), np.diag([1.0, 5.0])])).copy()
    pinned = diag.astype(complex)
    pinned[7] = np.nan
    filled, ratio = _ratio_complete(pinned, (2, 2, 2), kernel=[7])
    assert filled is not None
    assert np.isclose(complex(filled[7]).real, diag[7].real)
    assert np.isclose(complex(ratio), 2.0)


def test_ratio_completion_requires_known_leading_row():
    pinned = np.array([np.nan, 1.0, 1.0, 1.0], dtype=complex)
    filled, ratio = _ratio_complete(pinned, (2, 2), kernel=[0])
    assert filled is None and ratio is None


def test_ratio_completion_refuses_inconsistent_rows():
    # second row is not proportional to the first on its known entries
    pinned = np.array([1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 7.0, np.nan], dtype=complex)
    filled, _ = _ratio_complete(pinned, (2, 4), kernel=[7])
    assert filled is None


def test_invariant_screen_global_rank():
    rank2 = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    full = random_density((2, 2), 3).rho
    message = invariant_screen(rank2, full, (2, 2))
    assert message is not None and "global rank" in message


def test_invariant_screen_reduced_rank():
    # equal global ranks, different single-party reduced ranks
    rho_a = kron_list([np.diag([1.0, 0.0]), np.eye(2) / 2.0])
    rho_b = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)
    message = invariant_screen(rho_a, rho_b, (2, 2))
    assert message is not None and "party 1" in message


def test_invariant_screen_passes_constructed_pairs():
    for seed in range(6):
        base = random_density((2, 2, 2), 400 + seed)
        other, _ = make_equivalent_pair(base, 500 + seed)
        assert invariant_screen(base.rho, other.rho, (2, 2, 2)) is None


def test_normal_form_reaches_maximally_mixed_marginals():
    base = random_density((2, 2), 8)
    out = normal_form(base.rho, (2, 2))
    assert out is not None
    filtered, filters = out
    big = kron_list(filters)
    image = big @ base.rho @ big.conj().T
    assert np.allclose(filtered, image / np.trace(image).real)
    from statekit.linalg import partial_trace_keep

    for party in (1, 2):
        red = partial_trace_keep(filtered, (2, 2), party)
        assert np.linalg.norm(2.0 * red - np.eye(2)) <= 1e-9


def test_normal_form_fixed_point_of_balanced_state():
    state, _ = fixtures(1, FixtureParams(lam=(0.4, 0.3, 0.2, 0.1), mu=(0.25,) * 4))
    out = normal_form(state.rho, (2, 2))
    assert out is not None
    filtered, filters = out
    assert np.linalg.norm(filtered - state.rho) <= 1e-10
    for f in filters:
        scaled = f / np.linalg.norm(f) * np.sqrt(2.0)
        assert np.allclose(scaled, np.eye(2))


def test_normal_form_refuses_singular_marginal():
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    assert normal_form(rho, (2, 2)) is None


def test_check_requires_tagged_states():
    rho = random_density((2, 2), 9)
    with pytest.raises(ValueError):
        check_mixed_equivalence(rho.rho, rho.rho)
    other = random_density((2, 2, 2), 10)
    with pytest.raises(ValueError):
        check_mixed_equivalence(rho, other)


def test_reflexivity():
    state = random_density((2, 2), 11)
    verdict = checked_mixed(state, state)
    assert verdict.outcome == "Equivalent"


@pytest.mark.parametrize("dims", [(2, 2), (3, 3), (2, 2, 2)])
def test_constructed_pairs_are_recovered(dims):
    for seed in range(3):
        base = random_density(dims, 600 + seed)
        other, _ = make_equivalent_pair(base, 700 + seed)
        verdict = checked_mixed(base, other, seed=seed)
        assert verdict.outcome == "Equivalent", verdict.reason


def test_rank_mismatch_is_inequivalent():
    rank2 = MixedState(TWO_QUBITS, np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex))
    full = random_density((2, 2), 12)
    verdict = checked_mixed(rank2, full)
    assert verdict.outcome == "Inequivalent"
    assert "rank" in verdict.reason


def test_failed_search_is_inconclusive_with_evidence():
    pair = fixtures(2, FixtureParams(a=0.3, b=0.4, c=0.5, alpha=0.6, beta=1.6, gamma=4.05))
    verdict = checked_mixed(*pair)
    assert verdict.outcome == "Inconclusive"
    assert verdict.witness is None
    assert verdict.reason


def test_swapping_arguments_never_contradicts():
    pairs = [
        fixtures(2, FixtureParams(a=0.3, b=0.4, c=0.5, alpha=0.6, beta=1.6, gamma=4.0)),
        (random_density((2, 2), 13), random_density((2, 2), 14)),
    ]
    base = random_density((2, 2, 2), 15)
    other, _ = make_equivalent_pair(base, 16)
    pairs.append((base, other))
    for a, b in pairs:
        fwd = checked_mixed(a, b).outcome
        rev = checked_mixed(b, a).outcome
        assert {fwd, rev} != {"Equivalent", "Inequivalent"}
