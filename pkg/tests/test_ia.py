import numpy as np
import pytest

from crlab.errors import RankDeficiencyError, SingularMatrixError
from crlab.ia import (NullSpaceBasis, compute_bases, effective_gain, feasibility,
                      psnr_increase, two_by_two_alignment, zero_forcing_residual)


def test_two_by_two_identity():
    assert np.allclose(two_by_two_alignment(np.eye(2)), np.eye(2))


def test_two_by_two_diagonal():
    weights = two_by_two_alignment(np.diag([2.0, 4.0]))
    assert np.allclose(weights, np.diag([0.5, 0.25]))


def test_two_by_two_random_residual():
    rng = np.random.default_rng(0)
    for _ in range(20):
        gains = rng.normal(size=(2, 2)) + np.eye(2)
        if np.linalg.cond(gains.T) > 1e6:
            continue
        weights = two_by_two_alignment(gains)
        assert np.abs(gains.T @ weights - np.eye(2)).max() < 1e-10


def test_two_by_two_singular():
    with pytest.raises(SingularMatrixError):
        two_by_two_alignment(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_feasibility():
    assert feasibility(3, 4)
    assert feasibility(4, 4)
    assert not feasibility(5, 4)


def test_bases_square_case_no_prefix():
    rng = np.random.default_rng(1)
    gains = rng.normal(size=(3, 3))
    bases = compute_bases(gains)
    for j, basis in enumerate(bases):
        assert basis.width == 1
        assert basis.shared_prefix.shape == (3, 0)
        for i in range(3):
            if i != j:
                assert abs(basis.last @ gains[:, i]) < 1e-9
        assert abs(basis.last @ gains[:, j]) > 1e-6


def test_bases_rectangular_case():
    rng = np.random.default_rng(2)
    gains = rng.normal(size=(3, 2))
    bases = compute_bases(gains)
    for j, basis in enumerate(bases):
        assert basis.width == 2  # K - N + 1
        other = gains[:, 1 - j]
        for col in basis.matrix.T:
            assert abs(col @ other) < 1e-9
    # shared prefix identical across users and orthogonal to every gain
    prefix0, prefix1 = bases[0].shared_prefix, bases[1].shared_prefix
    assert np.array_equal(prefix0, prefix1)
    assert np.abs(gains.T @ prefix0).max() < 1e-10


def test_bases_rank_deficient_names_column():
    gains = np.array([[1.0, 2.0, 2.0],
                      [2.0, 4.0, 1.0],
                      [3.0, 6.0, 5.0]])  # column 1 = 2 * column 0
    with pytest.raises(RankDeficiencyError) as err:
        compute_bases(gains)
    assert err.value.column in (0, 1)


def test_bases_more_users_than_transmitters():
    with pytest.raises(RankDeficiencyError):
        compute_bases(np.ones((2, 3)))


def test_effective_gain_selection():
    rng = np.random.default_rng(3)
    per_channel = rng.normal(size=(4, 3, 2))
    b = np.array([[1, 0], [0, 1], [0, 0]])
    gains = effective_gain(b, per_channel)
    assert np.allclose(gains[:, 0], per_channel[:, 0, 0])
    assert np.allclose(gains[:, 1], per_channel[:, 1, 1])
    assert np.allclose(gains[:, 2], 0.0)


def test_effective_gain_single_channel_all_users():
    rng = np.random.default_rng(4)
    per_channel = rng.normal(size=(4, 3, 1))
    b = np.ones((3, 1), dtype=int)
    assert np.allclose(effective_gain(b, per_channel), per_channel[:, :, 0])


def test_effective_gain_transceiver_violation():
    with pytest.raises(ValueError):
        effective_gain(np.ones((2, 2), dtype=int), np.ones((3, 2, 2)))


def test_psnr_increase_values():
    basis = NullSpaceBasis(np.array([[0.0], [1.0]]))
    gain = np.array([0.0, 1.0])
    assert psnr_increase(0.0, basis, gain, beta=2.0, bandwidth=1.0,
                         gop_slots=1.0, noise_power=1.0) == 0.0
    assert psnr_increase(1.0, basis, gain, beta=1.0, bandwidth=1.0,
                         gop_slots=1.0, noise_power=1.0) == pytest.approx(1.0)


def test_psnr_increase_matches_full_weight_form():
    # the shared prefix is orthogonal to the user's own gains, so the rate
    # from the full weight vector equals the last-coefficient shortcut
    rng = np.random.default_rng(5)
    for _ in range(25):
        k = int(rng.integers(3, 6))
        n = int(rng.integers(2, k + 1))
        gains = rng.normal(size=(k, n))
        bases = compute_bases(gains)
        j = int(rng.integers(n))
        c = rng.normal(size=bases[j].width)
        weights_j = bases[j].matrix @ c
        full_signal = float(weights_j @ gains[:, j])
        short_signal = c[-1] * float(bases[j].last @ gains[:, j])
        lam_full = 0.3 * np.log2(1 + full_signal ** 2 / 0.01)
        lam_short = psnr_increase(c[-1], bases[j], gains[:, j], beta=0.3,
                                  bandwidth=1.0, gop_slots=1.0, noise_power=0.01)
        assert lam_short == pytest.approx(lam_full, abs=1e-10)


def test_zero_forcing_residual_random_instances():
    rng = np.random.default_rng(6)
    for _ in range(30):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(2, k + 1))
        gains = rng.normal(size=(k, n))
        bases = compute_bases(gains)
        coeffs = [rng.uniform(-1, 1, b.width) for b in bases]
        weights = np.column_stack([b.matrix @ c for b, c in zip(bases, coeffs)])
        assert zero_forcing_residual(weights, gains) < 1e-9
