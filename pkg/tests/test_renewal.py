"""Exact tables vs independent oracles: direct summation, brute convolution
powers, hand values, and the closed-form constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iterlog.dist import LatticeLaw, SmoothLaw, geometric_lattice
from iterlog.renewal import (
    AsymptoticConstants,
    ExponentialRenewal,
    _convolve_stieltjes,
    check_subadditivity,
    convolve_levels,
    increment_asymptote,
    leading_term,
    lil_constant,
    perturbed_table,
    renewal_sequence,
    renewal_table,
    second_order,
    subadditivity_sweep,
    write_table_csv,
)

GEOM = geometric_lattice(0.5)
UNIT = LatticeLaw(1.0, np.array([1.0]))


def _hit_probability_oracle(pmf: np.ndarray, n_max: int) -> np.ndarray:
    """u_n = sum_j P{S_j = n} via brute-force convolution powers of the pmf."""
    u = np.zeros(n_max + 1)
    u[0] = 1.0
    dist = np.zeros(n_max + 1)
    dist[1 : min(pmf.size, n_max) + 1] = pmf[: min(pmf.size, n_max)]
    power = dist.copy()
    for _ in range(n_max):
        u[1:] += power[1:]
        power = np.convolve(power, dist)[: n_max + 1]
    return u


def test_renewal_sequence_unit_law():
    u = renewal_sequence(UNIT, 10)
    assert np.array_equal(u, np.ones(11))


def test_renewal_sequence_geometric_vs_oracle():
    u = renewal_sequence(GEOM, 40)
    oracle = _hit_probability_oracle(GEOM.pmf, 40)
    assert np.max(np.abs(u - oracle)) < 1e-12
    assert np.max(np.abs(u[1:] - 0.5)) < 1e-12


def test_renewal_sequence_two_point_hand_values():
    u = renewal_sequence(LatticeLaw(1.0, np.array([0.5, 0.5])), 3)
    assert u[0] == 1.0
    assert u[1] == 0.5
    assert u[2] == 0.75
    assert u[3] == 0.625


def test_renewal_sequence_bounds():
    for law in (GEOM, LatticeLaw(1.0, np.array([0.2, 0.5, 0.3]))):
        u = renewal_sequence(law, 500)
        assert np.all(u >= 0.0)
        assert np.all(u <= 1.0 + 1e-12)


def test_unit_law_binomial_identity():
    table = renewal_table(UNIT, 4, 60)
    for k in range(1, 5):
        oracle = np.array([math.comb(n, k) for n in range(61)], dtype=float)
        assert np.max(np.abs(table.level(k) - oracle)) <= 1e-9


def test_level_one_passthrough():
    table = renewal_table(GEOM, 1, 50)
    extended = convolve_levels(table, 3)
    assert np.array_equal(extended.level(1), table.level(1))


def test_convolution_symmetry_both_orders():
    table = renewal_table(GEOM, 3, 2000)
    v1 = table.level(1)
    du1 = np.concatenate(([0.0], np.diff(v1)))
    for k in (2, 3):
        dk = np.concatenate(([0.0], np.diff(table.level(k - 1))))
        reversed_order = _convolve_stieltjes(dk, v1)
        forward = table.level(k)
        scale = np.maximum(np.abs(forward), 1.0)
        assert np.max(np.abs(forward - reversed_order) / scale) < 1e-9
    assert np.array_equal(_convolve_stieltjes(du1, v1), convolve_levels(table, 2).level(2))


def _perturbed_oracle(xi: LatticeLaw, eta: LatticeLaw, n_max: int) -> np.ndarray:
    """V*(n) = sum_j P{S_{j-1} + eta_j <= n} by brute-force convolutions."""
    out = np.zeros(n_max + 1)
    step = np.zeros(n_max + 1)
    step[1 : min(xi.pmf.size, n_max) + 1] = xi.pmf[: min(xi.pmf.size, n_max)]
    eta_pmf = np.zeros(n_max + 1)
    eta_pmf[1 : min(eta.pmf.size, n_max) + 1] = eta.pmf[: min(eta.pmf.size, n_max)]
    s_dist = np.zeros(n_max + 1)
    s_dist[0] = 1.0  # S_0 = 0
    for _ in range(1, n_max + 2):
        t_dist = np.convolve(s_dist, eta_pmf)[: n_max + 1]
        out += np.cumsum(t_dist)
        s_dist = np.convolve(s_dist, step)[: n_max + 1]
    return out


def test_perturbed_table_vs_direct_summation():
    u = renewal_sequence(GEOM, 25)
    table = perturbed_table(u, GEOM.span, GEOM, 25, GEOM.moments().mean)
    oracle = _perturbed_oracle(GEOM, GEOM, 25)
    assert np.max(np.abs(table.level(1) - oracle)) < 1e-10


def test_perturbed_equals_standard_for_matching_laws():
    # independent eta with the step law's distribution leaves the chain alone
    mu = GEOM.moments().mean
    u = renewal_sequence(GEOM, 2000)
    table = perturbed_table(u, GEOM.span, GEOM, 2000, mu)
    grid = np.arange(2001.0)
    assert np.max(np.abs(table.level(1) - grid / mu)) < 1e-9


def test_perturbed_point_mass_shift():
    # eta = d shifts by one site: V*(nd) = U((n-1)d)
    mu = GEOM.moments().mean
    u = renewal_sequence(GEOM, 100)
    big_u = np.concatenate(([1.0], 1.0 + np.cumsum(u[1:])))
    table = perturbed_table(u, 1.0, UNIT, 100, mu)
    assert np.max(np.abs(table.level(1)[1:] - big_u[:-1])) < 1e-12
    assert table.level(1)[4] == pytest.approx(2.5, abs=1e-12)


def test_perturbed_mismatched_spans():
    u = renewal_sequence(GEOM, 10)
    with pytest.raises(ValueError, match="incommensurable"):
        perturbed_table(u, 1.0, LatticeLaw(0.5, np.array([1.0])), 10, 2.0)


def test_memory_guard():
    with pytest.raises(ValueError, match="horizon too large"):
        renewal_table(GEOM, 5, 50_000_000)
    with pytest.raises(ValueError, match="horizon too large"):
        renewal_table(GEOM, 1, 100, max_entries=50)


def test_leading_term_values():
    assert leading_term(2, 1.0, 10.0) == 50.0
    assert leading_term(1, 2.0, 8.0) == 4.0
    # Poisson case identity: the level expectation is exactly the leading term
    exp_eval = ExponentialRenewal(1.0)
    assert exp_eval.at(2, 10.0) == leading_term(2, 1.0, 10.0)


def test_increment_asymptote():
    assert increment_asymptote(1, 2.0, 1.0, 100.0) == 0.5  # h / mu
    assert increment_asymptote(2, 2.0, 1.0, 100.0) == 25.0
    with pytest.raises(ValueError, match="increment not on lattice"):
        increment_asymptote(2, 2.0, 0.3, 100.0, span=1.0)


def test_increment_against_exact_table():
    table = renewal_table(GEOM, 2, 2001)
    n = 2000
    increment = table.level(2)[n + 1] - table.level(2)[n]
    assert abs(increment / (0.25 * n) - 1.0) < 0.01


def test_second_order_exponential_vanishes():
    const = AsymptoticConstants.from_moments(3, SmoothLaw("exp", {"rate": 1.0}).moments())
    assert const.b == 0.0
    assert second_order(3, const, 50.0, "nonlattice") == 0.0


def test_lattice_constants_against_exact_tables():
    # eta = xi: second-order residual of the level tables, on three laws
    cases = [
        (GEOM, 4000),
        (UNIT, 2000),
        (LatticeLaw(1.0, np.array([0.5, 0.5])), 4000),
    ]
    for law, n in cases:
        m = law.moments()
        mu = m.mean
        u = renewal_sequence(law, n)
        table = convolve_levels(perturbed_table(u, law.span, law, n, mu), 3)
        for k in (1, 2, 3):
            const = AsymptoticConstants.from_moments(k, m, span=law.span, eta_mean=mu)
            residual = table.level(k)[n] - leading_term(k, mu, float(n))
            normalized = residual * mu ** (k - 1) * math.factorial(k - 1) / n ** (k - 1)
            predicted = second_order(k, const, float(n), "lattice") * mu ** (k - 1) * math.factorial(k - 1) / n ** (k - 1)
            assert predicted == pytest.approx(const.c_k)
            if abs(const.c_k) > 1e-12:
                assert abs(normalized / const.c_k - 1.0) < 0.02
            else:
                assert abs(normalized) <= 0.5


def test_unit_law_renewal_limit_is_exact():
    # U(n) - n/mu equals its limit d/(2 mu) + E xi^2/(2 mu^2) at every site
    u = renewal_sequence(UNIT, 50)
    big_u = np.concatenate(([1.0], 1.0 + np.cumsum(u[1:])))
    const = AsymptoticConstants.from_moments(1, UNIT.moments(), span=1.0)
    assert const.d_lim == 1.0
    assert np.max(np.abs(big_u - np.arange(51.0) - 1.0)) < 1e-12


def test_two_point_renewal_limit():
    law = LatticeLaw(1.0, np.array([0.5, 0.5]))
    m = law.moments()
    u = renewal_sequence(law, 200)
    big_u = np.concatenate(([1.0], 1.0 + np.cumsum(u[1:])))
    const = AsymptoticConstants.from_moments(1, m, span=1.0)
    assert const.d_lim == pytest.approx(8.0 / 9.0, abs=1e-12)
    # the defect decays geometrically; far sites sit on the limit
    assert abs(big_u[200] - 200.0 / m.mean - const.d_lim) < 1e-12


def test_lil_constant():
    assert lil_constant(1, 1.0, 1.0) == 1.0
    assert lil_constant(2, 1.0, 1.0) == pytest.approx(math.sqrt(3.0))
    assert lil_constant(3, 1.0, 1.0) == pytest.approx(2.0 * math.sqrt(5.0))
    m = GEOM.moments()
    assert lil_constant(1, m.mean, m.sigma) == pytest.approx(2.0, abs=1e-10)
    assert lil_constant(1, 4.0, 2.0) == pytest.approx(4.0**1.5 / 2.0)
    with pytest.raises(ValueError, match="degenerate"):
        lil_constant(1, 1.0, 0.0)


def test_subadditivity_examples():
    table = renewal_table(UNIT, 2, 20)
    holds, slack = check_subadditivity(table, 5, 5, 2)
    assert holds
    assert slack == pytest.approx(25.0)  # right 60, left 35
    holds, _ = check_subadditivity(table, 0, 7, 2)
    assert holds
    with pytest.raises(ValueError, match="off the table grid"):
        check_subadditivity(table, 15, 10, 2)


def test_subadditivity_sweep_small():
    table = renewal_table(GEOM, 3, 300)
    violations, min_slack = subadditivity_sweep(table, 3)
    assert violations == 0
    assert min_slack >= 0.0


def test_monotone_levels():
    table = renewal_table(GEOM, 3, 500)
    for k in (1, 2, 3):
        level = table.level(k)
        assert level[0] == 0.0
        assert np.all(np.diff(level) >= -1e-12)


def test_table_at_step_lookup():
    table = renewal_table(UNIT, 2, 10)
    assert table.at(1, 3.0) == 3.0
    assert table.at(1, 3.7) == 3.0
    with pytest.raises(ValueError, match="horizon"):
        table.at(1, 11.0)


def test_csv_round_trip(tmp_path):
    table = renewal_table(GEOM, 2, 20)
    path = tmp_path / "table.csv"
    write_table_csv(table, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,t,V1,V2"
    for n, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert int(cells[0]) == n
        assert float(cells[2]) == table.level(1)[n]  # 17 digits round-trip
        assert float(cells[3]) == table.level(2)[n]


@st.composite
def small_lattice_laws(draw):
    size = draw(st.integers(min_value=1, max_value=4))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=size, max_size=size))
    pmf = np.array(weights)
    pmf[0] = max(pmf[0], 0.05)
    pmf /= math.fsum(pmf.tolist())
    return LatticeLaw(1.0, pmf)


@settings(max_examples=25, derandomize=True, deadline=None)
@given(small_lattice_laws())
def test_table_properties(law):
    table = renewal_table(law, 3, 60)
    for k in (1, 2, 3):
        level = table.level(k)
        assert level[0] == 0.0
        assert np.all(np.diff(level) >= -1e-12)
    violations, _ = subadditivity_sweep(table, 3)
    assert violations == 0
    u = renewal_sequence(law, 60)
    oracle = _hit_probability_oracle(law.pmf, 30)
    assert np.max(np.abs(u[:31] - oracle)) < 1e-10
