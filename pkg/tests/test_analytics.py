import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from necorpia import analytics as an
from necorpia.analytics import RankProfile
from necorpia.montecarlo import sample_rank_profiles, sample_rho1


def stirling2(n, k):
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def occupancy_exact(g, L, k):
    return Fraction(math.comb(L, k) * math.factorial(k) * stirling2(g, k), L ** g)


@pytest.mark.parametrize("g, L", [(1, 1), (2, 2), (5, 100), (12, 7), (30, 100), (40, 50)])
def test_occupancy_matches_exact_oracle(g, L):
    pmf = an.occupancy_pmf(g, L)
    for k, p in enumerate(pmf):
        assert p == pytest.approx(float(occupancy_exact(g, L, k)), rel=1e-10, abs=1e-300)


def test_occupancy_small_cases():
    assert an.occupancy_pmf(1, 9).tolist() == [0.0, 1.0]
    assert an.occupancy_pmf(2, 2).tolist() == [0.0, 0.5, 0.5]
    assert an.occupancy_pmf(0, 4).tolist() == [1.0]
    with pytest.raises(ValueError):
        an.occupancy_pmf(3, 0)


@given(st.integers(0, 120), st.integers(1, 300))
def test_pmfs_are_distributions(g, L):
    p = an.occupancy_pmf(g, L)
    assert (p >= 0).all() and abs(p.sum() - 1) < 1e-12


@given(st.integers(1, 60), st.integers(2, 60), st.integers(2, 60))
def test_joint_nv2_is_a_distribution_with_exact_rho1_marginal(g, L1, L2):
    joint = an.joint_rank_pmf_nv2(g, L1, L2)
    assert all(p >= 0 for p in joint.values())
    assert abs(sum(joint.values()) - 1) < 1e-12
    marg = np.zeros(min(g, L1) + 1)
    for (r1, r2, r3), p in joint.items():
        assert r1 + r2 + r3 == g and r2 <= L2
        marg[r1] += p
    assert np.allclose(marg, an.occupancy_pmf(g, L1), atol=1e-15, rtol=0)


def test_paper_rank_probabilities():
    ccdf = lambda g: an.rho2_ccdf_nv1(g, 100)[1]
    assert ccdf(5) < 0.0025
    assert ccdf(10) < 0.062
    assert ccdf(30) > 0.94
    for g, target in ((30, 0.013), (40, 0.038)):
        joint = an.joint_rank_pmf_nv2(g, 50, 50)
        p = sum(v for r, v in joint.items() if r[2] > 1)
        assert p == pytest.approx(target, rel=0.2)


@given(st.integers(1, 80), st.integers(1, 200))
def test_rho2_ccdf(g, L):
    c = an.rho2_ccdf_nv1(g, L)
    assert c[0] == 1.0 - an.f_occ(g, L, g)
    assert (np.diff(c) <= 1e-15).all()


@pytest.mark.parametrize("g", [5, 10, 20, 30])
def test_occupancy_monte_carlo(g):
    n = 10_000
    pmf = an.occupancy_pmf(g, 100)
    counts = np.bincount(sample_rho1(g, 100, n, g), minlength=pmf.size)
    sigma = np.sqrt(n * pmf * (1 - pmf))
    assert (np.abs(counts - n * pmf) <= 3 * sigma + 1).all()


def test_full_rank_upper_bound():
    assert an.full_rank_upper_bound(1, (3,)) == 1.0
    assert an.full_rank_upper_bound(4, (1, 3)) == 0.0
    assert an.full_rank_upper_bound(2, (2, 2)) == pytest.approx(0.75)


def test_branch_bound_examples():
    for g in (1, 4, 9):
        assert an.branch_bound(RankProfile.of(g, 0))[2] == 2 * g
    r1, r2, r3 = 5, 3, 2
    assert an.branch_bound(RankProfile.of(r1, r2, r3))[2] == r1 + r1 * (r2 + 1) + r1 * (r2 + 1) * 2 ** r3
    assert an.branch_bound(RankProfile.of(0, 4)) == ((0,), 0, 0)
    assert an.branch_bound(RankProfile.of(2, 1, 0, 3), q=2) == ((2, 4, 4), 32, 42)


def test_expected_branches_g1():
    assert an.expected_branches(1, (100,)) == 2.0
    assert an.expected_branches(1, (50, 50)) == 3.0
    assert an.expected_branches(1, (100,), part="terminal") == 1.0


def test_nv3_requires_empirical():
    with pytest.raises(ValueError):
        an.expected_branches(5, (4, 4, 4))
    profiles = sample_rank_profiles(5, (4, 4, 4), 200, 1)
    val = an.expected_branches(5, (4, 4, 4), pmf_source="empirical", profiles=profiles)
    assert val == pytest.approx(np.mean([an.branch_bound(p)[2] for p in profiles]))


def test_decoding_error_prob():
    assert an.decoding_error_prob(7, 7, 2, 16) == 0.0
    assert an.decoding_error_prob(3, 7, 2, 16) == 0.0
    assert an.decoding_error_prob(8, 7, 2, 16) == pytest.approx(2.0 ** -16, rel=1e-12)
    assert an.decoding_error_prob(10**12, 0, 2, 8) == pytest.approx(1.0)


def test_expected_error_nv1_g20():
    assert an.expected_error_bound(20, (100,), L_h=16) == pytest.approx(1e-3, rel=0.3)


@given(st.integers(1, 60), st.integers(0, 12), st.integers(1, 200), st.integers(0, 4000), st.integers(1, 80))
def test_eq18_identity(rho1, rho2, L1, L_p, extra):
    g = rho1 + rho2
    prof = RankProfile.of(rho1, rho2)
    assert an.cost_sle(prof, (L1,), L_p, g) == an.cost_sle_nv1_closed(rho1, rho2, L1, L_p, g)


def test_cost_sle_nv2_matches_expanded_form():
    c = an.DEFAULT_CONSTS
    r1, r2, r3, L1, L2, Lp = 7, 4, 2, 50, 50, 1932
    g = r1 + r2 + r3
    want = (r1 * L1 ** 2 + r1 * L2 * (c.K_m * r1 + 2 + (r2 + 1) * L2)
            + r1 * (r2 + 1) * Lp * (c.K_m * g + 1 + 2 ** r3 * (c.K_m * r3 + 1 + c.K_c)))
    assert an.cost_sle(RankProfile.of(r1, r2, r3), (L1, L2), Lp) == want


def test_cost_lut_nv2_matches_expanded_form():
    c = an.DEFAULT_CONSTS
    r1, r2, r3, L1, L2, Lp = 7, 4, 2, 50, 50, 1932
    g = r1 + r2 + r3
    tables = sum(r + L * r * (r + 1) // 2 + r * (L + 1 + r * L) for r, L in ((r1, L1), (r2, L2)))
    want = (tables + L1 * (1 + r1) + r1 * L2 * (c.K_m * r1 + 2 + r2)
            + r1 * (r2 + 1) * Lp * (c.K_m * g + 1 + 2 ** r3 * (c.K_m * r3 + 1 + c.K_c)))
    assert an.cost_lut(RankProfile.of(r1, r2, r3), (L1, L2), Lp) == want


def test_costs_vanish_without_level1_rank():
    assert an.cost_sle(RankProfile.of(0, 3), (10,), 100) == 0


def test_plain_nc_cost_and_ratio():
    assert an.cost_plain_nc(10, 2048) == 3 * 100 * 2048
    for v in ("sle", "lut"):
        assert an.expected_cost_ratio(10, (100,), variant=v) > 1


def test_profile_validation():
    with pytest.raises(ValueError):
        RankProfile((3, 1), 5)
    with pytest.raises(ValueError):
        RankProfile.of(5, 0).check_lengths((4,))
    RankProfile.of(4, 1).check_lengths((4,))


def test_csv_emitters():
    buf = io.StringIO()
    an.write_pmf_csv(buf, {2: an.occupancy_pmf(2, 2), 1: an.occupancy_pmf(1, 3)})
    assert buf.getvalue() == "g,k,probability\n1,0,0.0\n1,1,1.0\n2,0,0.0\n2,1,0.5\n2,2,0.5\n"
    buf = io.StringIO()
    an.write_expectation_csv(buf, {5: 0.1})
    assert buf.getvalue() == "g,value\n5,0.1\n"
    with pytest.raises(ValueError):
        an.write_expectation_csv(io.StringIO(), {1: float("nan")})
