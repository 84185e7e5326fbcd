"""Analytic trajectory functions: identities, derivatives, counts."""

import math

import pytest
from scipy.integrate import quad

from sparsesteiner import configs as C
from sparsesteiner import trajectory as T


@pytest.fixture(scope="module")
def catalog():
    return C.enumerate_erdos(8)


@pytest.fixture(scope="module")
def erd_counts(catalog):
    return catalog.erd_counts()


def params(n, k, catalog, **kw):
    return T.TrajectoryParams.from_catalog(n, k, catalog, **kw)


# ---------------------------------------------------------------------------
# Densities and initial conditions
# ---------------------------------------------------------------------------


def test_densities(catalog):
    p = params(100, 4, catalog)
    assert p.p(0) == 1.0
    assert p.p(p.i_end) == pytest.approx(0.0, abs=1e-12)
    assert p.p_C(0) == 0.0
    assert p.rho(0) == 0.0


def test_initial_values(catalog):
    p = params(200, 6, catalog)
    assert p.f_edge(0) == 198
    assert p.A_traj(0) == math.comb(200, 3)
    for j in range(6, 9):
        assert p.f_jc(0, j, 0) == p.J[j]
        for c in range(1, j - 3):
            assert p.f_jc(0, j, c) == 0.0
    assert p.eps(0) == p.eps0
    assert p.eps_kl(0, 2, 5) == 200 ** (2 + 5 / (p.m + 2))


def test_param_validation(catalog):
    with pytest.raises(ValueError):
        T.TrajectoryParams(100, 4, {6: 0.0})
    with pytest.raises(ValueError):
        T.TrajectoryParams(100, 4, {5: 3.0, 6: 1.0})
    with pytest.raises(ValueError):
        params(100, 4, catalog, eps0=0.0)
    with pytest.raises(ValueError):
        params(100, 4, catalog, gamma=1.5)


def test_range_guard(catalog):
    p = params(100, 4, catalog)
    with pytest.raises(ValueError):
        p.p(p.i_end + 10)


# ---------------------------------------------------------------------------
# Identities on a grid
# ---------------------------------------------------------------------------


def test_available_identity(catalog):
    p = params(300, 6, catalog)
    for i in p.grid(40):
        assert p.A_traj(i) == pytest.approx(p.A_traj_identity(i), rel=1e-12)


def test_big_F_over_A_is_rho_prime(catalog):
    p = params(300, 6, catalog)
    for i in p.grid(40):
        assert p.F_traj(i) / p.A_traj(i) == pytest.approx(p.rho_prime(i), rel=1e-12)


def test_small_f_over_A(catalog):
    p = params(300, 4, catalog)
    n = 300
    for i in p.grid(40):
        lhs = p.f_edge(i) / p.A_traj(i)
        assert lhs == pytest.approx(6 / (p.p(i) * n * (n - 1)), rel=1e-12)
        # also equals -p'/p with p' = -6/(n(n-1))
        assert lhs == pytest.approx((6 / (n * (n - 1))) / p.p(i), rel=1e-12)


def test_consecutive_c_ratio(catalog):
    p = params(300, 6, catalog)
    for i in p.grid(10):
        for j in range(6, 9):
            for c in range(1, j - 3):
                lhs = p.f_jc(i, j, c - 1) / p.f_jc(i, j, c)
                rhs = c * p.A_traj(i) / ((j - 2 - c) * i)
                assert lhs == pytest.approx(rhs, rel=1e-12)


def test_monotonicity_and_positivity(catalog):
    p = params(500, 4, catalog)
    grid = [0.0] + p.grid(30) + [float(p.tau_cut())]
    last_rho = -1.0
    last_p = 2.0
    for i in grid:
        assert p.rho(i) >= last_rho
        assert p.p(i) < last_p or i == 0.0
        last_rho, last_p = p.rho(i), p.p(i)
        assert p.f_edge(i) > 0 and p.A_traj(i) > 0
        for j in range(6, 7):
            for c in range(0, j - 3):
                if c > 0 and i == 0.0:
                    continue
                assert p.f_jc(i, j, c) >= 0


def test_rho_bounded(catalog):
    # rho = O(1) and rho' = O(n^-2) for fixed k: evaluate on a doubling of n
    # and check the bound does not grow with n.
    caps = []
    prime_caps = []
    for n in (1000, 2000, 4000):
        p = params(n, 6, catalog)
        caps.append(max(p.rho(i) for i in p.grid(50)))
        prime_caps.append(max(p.rho_prime(i) for i in p.grid(50)) * n * n)
    assert max(caps) <= caps[0] * 1.1 + 1
    assert max(prime_caps) <= prime_caps[0] * 1.1 + 1


# ---------------------------------------------------------------------------
# Error envelope
# ---------------------------------------------------------------------------


def test_eps_properties(catalog):
    p = params(400, 4, catalog)
    for i in p.grid(20):
        assert p.eps(i) <= p.eps_bound()
        delta = p.eps(i + 1) - p.eps(i)
        assert delta == pytest.approx(p.C_err * p.eps(i) / 400**2, rel=1e-6)


def test_strict_hierarchy_margin(catalog):
    # In the faithful asymptotic regime (eps0 far below 1/C), the envelope
    # stays under the edge trajectory at the cutoff.
    p = params(10_000, 4, catalog, eps0=2e-5)
    assert p.validate(strict_hierarchy=True) > 0
    # Desk-scale calibrated defaults trade that margin for band coverage.
    pd = params(500, 4, catalog)
    assert pd.survival_margin() < 0
    with pytest.raises(ValueError):
        pd.validate(strict_hierarchy=True)


# ---------------------------------------------------------------------------
# Derivatives vs finite differences
# ---------------------------------------------------------------------------


def test_derivative_residuals(catalog):
    p = params(10_000, 4, catalog)
    worst = 0.0
    for i in p.grid(100):
        worst = max(worst, T.derivative_checks(p, i).max_residual())
    assert worst <= 1e-6


def test_derivative_residuals_k6(catalog):
    p = params(2_000, 6, catalog)
    for i in p.grid(20):
        res = T.derivative_checks(p, i)
        assert res.max_residual() <= 1e-4  # coarser n, same identities


# ---------------------------------------------------------------------------
# Conjectured counts
# ---------------------------------------------------------------------------


def test_conjectured_constants(erd_counts):
    _, c4 = T.conjectured_log_count(1000, 4, erd_counts)
    assert c4 == 2 + 6 / math.factorial(4) == 2.25
    _, c3 = T.conjectured_log_count(1000, 3, erd_counts)
    assert c3 == 2.0
    val, _ = T.conjectured_log_count(1000, 4, erd_counts)
    assert val == pytest.approx((1000**2 / 6) * (math.log(1000) - 2.25))


def test_rho_integral_matches_quadrature(catalog, erd_counts):
    n, k = 2000, 4
    p = params(n, k, catalog)
    upper = n * n / 6
    numeric, _ = quad(p.rho, 0, upper, limit=200)
    closed = T.rho_integral_closed_form(p, upper)
    assert numeric == pytest.approx(closed, rel=1e-6)
    target = (n * n / 6) * sum(
        erd_counts[j] / math.factorial(j - 2) for j in range(6, k + 3)
    )
    assert abs(numeric - target) / target < 0.01


def test_columns_schema(catalog):
    cols = T.trajectory_columns(4)
    assert cols == ["i", "p", "rho", "f_edge", "A", "F", "f_6_0", "f_6_1", "f_6_2", "eps"]
    p = params(100, 4, catalog)
    rows = T.trajectory_rows(p, [0.0, 100.0])
    assert len(rows) == 2 and len(rows[0]) == len(cols)
