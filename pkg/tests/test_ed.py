import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

import oracles as orc
from qdl.ed import (
    ScalingFit, SectorBasis, critical_mass_from_gaps, crossing_point, default_grid, gap_scan,
    gaps_to_csv, ground_state, lowest_eigenpairs, mass_gap, scaling_ratio, sector_hamiltonian,
    z_profile,
)
from qdl.errors import DegenerateGapError, InputError, SizeLimitError
from qdl.operators import PauliSum, SchwingerParams, schwinger_hamiltonian, total_z


def _dense_sector_gap(n, x):
    h = orc.schwinger_dense(n, 2.0, x)
    idx = np.flatnonzero(orc.total_z_dense(n).diagonal().real == 0)
    vals = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
    return vals[1] - vals[0]


# -- sectors ------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 4, 8, 20])
def test_sector_dimension(n):
    assert SectorBasis.zero_magnetization(n).dim == math.comb(n, n // 2)


def test_sector_dimension_n20():
    assert SectorBasis.zero_magnetization(20).dim == 184756


def test_sector_errors():
    with pytest.raises(InputError):
        SectorBasis.zero_magnetization(5)
    with pytest.raises(SizeLimitError):
        SectorBasis.full(30)


def test_total_z_vanishes_in_sector():
    m = sector_hamiltonian(total_z(6), SectorBasis.zero_magnetization(6))
    assert abs(m).max() == 0


def test_non_conserving_operator_refused():
    with pytest.raises(InputError):
        sector_hamiltonian(PauliSum.single(4, {0: "X"}), SectorBasis.zero_magnetization(4))
    with pytest.raises(InputError):
        sector_hamiltonian(PauliSum.single(10, {3: "X"}), SectorBasis.zero_magnetization(10))


def test_sector_spectrum_is_subset_of_full():
    h = schwinger_hamiltonian(SchwingerParams(6, 2.0, 0.3, math.pi))
    sec = np.linalg.eigvalsh(sector_hamiltonian(h, SectorBasis.zero_magnetization(6)).toarray())
    full = np.linalg.eigvalsh(h.to_dense())
    assert all(np.min(np.abs(full - e)) < 1e-10 for e in sec)


# -- eigensolver ------------------------------------------------------------------

def test_lowest_of_diagonal():
    vals, _ = lowest_eigenpairs(sp.diags([3.0, 1.0, 2.0]).tocsr(), 2)
    assert np.allclose(vals, [1, 2])


@pytest.mark.parametrize("dim", [50, 800])
def test_random_hermitian_matches_dense(rng, dim):
    a = rng.normal(size=(dim, dim))
    h = (a + a.T) / 2
    vals, vecs = lowest_eigenpairs(sp.csr_matrix(h), 3)
    assert np.allclose(vals, np.linalg.eigvalsh(h)[:3], atol=1e-9)
    assert np.linalg.norm(h @ vecs - vecs * vals, axis=0).max() < 1e-8


def test_degenerate_pair_orthogonal(rng):
    q, _ = np.linalg.qr(rng.normal(size=(900, 900)))
    h = (q * np.r_[-1.0, -1.0, np.linspace(0, 5, 898)]) @ q.T
    vals, vecs = lowest_eigenpairs(sp.csr_matrix(h), 2)
    assert np.allclose(vals, [-1, -1], atol=1e-9)
    assert abs(vecs[:, 0] @ vecs[:, 1]) < 1e-8


def test_bad_k():
    with pytest.raises(InputError):
        lowest_eigenpairs(sp.eye(3).tocsr(), 3)


# -- gaps and ratios ---------------------------------------------------------------

@pytest.mark.parametrize("n, x", [(4, -2.0), (4, 0.14), (6, 0.5), (10, -2.0)])
def test_gap_matches_dense_oracle(n, x):
    assert abs(mass_gap(n, x) - _dense_sector_gap(n, x)) < 1e-8


def test_gap_frozen_n10():
    # independent dense-oracle value
    assert mass_gap(10, 0.14) == pytest.approx(0.28547286203286104, abs=1e-9)


def test_gap_scan_equals_pointwise():
    grid = [0.1, 0.12, 0.14]
    assert np.allclose(gap_scan(8, grid), [mass_gap(8, x) for x in grid], atol=1e-10)


def test_ratio_synthetic():
    assert scaling_ratio(10, gaps=(3 / 10, 3 / 12)) == pytest.approx(1.0, abs=1e-15)
    assert scaling_ratio(10, gaps=(0.4, 0.4)) == pytest.approx(10 / 12, abs=1e-15)
    with pytest.raises(DegenerateGapError):
        scaling_ratio(10, gaps=(0.4, 0.0))


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(1e-3, 1e3))
def test_ratio_scale_invariant(a, b, alpha):
    r1 = scaling_ratio(12, gaps=(a, b))
    assert scaling_ratio(12, gaps=(alpha * a, alpha * b)) == pytest.approx(r1, rel=1e-12)


def test_ratio_brackets_crossing_n10():
    assert 0.9 <= scaling_ratio(10, 0.14) <= 1.1


# -- crossings and extrapolation -------------------------------------------------

def test_synthetic_family_extrapolates_exactly():
    grid = default_grid()
    sizes = [10, 12, 14, 16]
    # gaps chosen so that R_N(x) = 1 + (x - 0.2) N/(N+2)
    gaps = {sizes[-1]: np.ones_like(grid)}
    for n in reversed(sizes[:-1]):
        r = 1 + (grid - 0.2) * n / (n + 2)
        gaps[n] = r * (n + 2) * gaps[n + 2] / n
    fit = critical_mass_from_gaps(grid, gaps)
    assert np.allclose(fit.crossing_points, 0.2, atol=1e-12)
    assert fit.extrapolated == pytest.approx(0.2, abs=1e-12)


def test_crossing_uses_falling_branch():
    x = np.linspace(0, 1, 101)
    r = 1 + 0.5 * np.sin(2 * np.pi * x)  # rises through 1 at 0, falls through 1 at 0.5
    xc, idx = crossing_point(x, r)
    assert abs(xc - 0.5) < 1e-3 and len(idx) == 5


def test_no_crossing_error():
    with pytest.raises(InputError, match="grid"):
        crossing_point(np.linspace(0, 1, 10), np.full(10, 0.5))


def test_frozen_crossings_small_lattices():
    grid = default_grid()
    gaps = {n: gap_scan(n, grid) for n in (10, 12, 14)}
    fit = critical_mass_from_gaps(grid, gaps)
    assert fit.crossing_points == pytest.approx([0.11943822085598024, 0.13076091021695124],
                                                abs=1e-8)
    assert isinstance(fit, ScalingFit) and "inverse_square" in fit.alternatives


def test_too_few_sizes():
    with pytest.raises(InputError):
        critical_mass_from_gaps([0.1, 0.2], {10: np.ones(2), 12: np.ones(2)})


def test_gaps_csv():
    text = gaps_to_csv([0.1, 0.2], {4: np.array([1.0, 2.0])})
    assert text.splitlines() == ["N,x,gap", "4,0.1,1.0", "4,0.2,2.0"]


# -- profiles ------------------------------------------------------------------

def test_z_profile_basis_state():
    assert np.array_equal(z_profile(orc.basis(8, "01010101")), [1, -1] * 4)


def test_z_profile_sums_to_zero_in_sector():
    _, psi = ground_state(8, 0.3)
    assert abs(z_profile(psi).sum()) < 1e-10


def test_ground_state_energy_frozen():
    e, _ = ground_state(8, -2.0)
    assert e == pytest.approx(-2.3275856708142544, abs=1e-9)
