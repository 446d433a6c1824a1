import numpy as np
import pytest

from argmin_unique import (ExplicitBound, MultistartConfig, PenaltySpec,
                           RegressionData, enumerate_best_subsets,
                           global_minimize, multistart_global_minimize,
                           partition_domain, penalized_objective, penalty_value)
from argmin_unique.penalized import ols_solution, penalty_rho, scad_derivative

from oracles import best_subset_bruteforce, ols_beta, scad_rho_quadrature


def toy_data():
    # n=2, d=1, X=(1,1)', Y=(1,3)': OLS beta = 2
    return RegressionData(y=(1.0, 3.0), x=((1.0,), (1.0,)))


def seeded_data(seed=0, n=20, d=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    beta0 = np.zeros(d)
    beta0[:2] = (1.5, -1.0)
    y = X @ beta0 + rng.standard_normal(n)
    return RegressionData(y=tuple(y), x=tuple(tuple(r) for r in X))


# -------------------------------------------------------------- validation

def test_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec(kind="l1", lam=1.0)
    with pytest.raises(ValueError):
        PenaltySpec(kind="l0", lam=0.0)
    with pytest.raises(ValueError):
        PenaltySpec(kind="bridge", lam=1.0, q=1.0)
    with pytest.raises(ValueError):
        PenaltySpec(kind="scad", lam=1.0, a=2.0)
    with pytest.raises(ValueError):
        PenaltySpec(kind="mcp", lam=1.0, gamma=1.0)


def test_data_requires_full_rank():
    with pytest.raises(ValueError):
        RegressionData(y=(1.0, 2.0), x=((1.0, 2.0), (2.0, 4.0)))
    with pytest.raises(ValueError):
        RegressionData(y=(1.0,), x=((1.0, 0.0),))  # n < d


# ----------------------------------------------------------------- penalty

@pytest.mark.parametrize("spec", [
    PenaltySpec(kind="l0", lam=2.0),
    PenaltySpec(kind="bridge", lam=1.5, q=0.5),
    PenaltySpec(kind="scad", lam=1.0, a=3.7),
    PenaltySpec(kind="mcp", lam=1.0, gamma=3.0),
])
def test_penalty_zero_at_origin(spec):
    assert penalty_value(spec, np.zeros(4)) == 0.0


def test_l0_counts_support():
    spec = PenaltySpec(kind="l0", lam=1.0)
    assert penalty_value(spec, [0.0, 3.0, -2.0]) == 2.0


def test_scad_plateau_value():
    spec = PenaltySpec(kind="scad", lam=1.0, a=3.7)
    for t in (3.7, 5.0, 100.0):
        assert penalty_rho(spec, t) == pytest.approx(2.35, abs=1e-12)


def test_scad_rho_matches_derivative_quadrature():
    spec = PenaltySpec(kind="scad", lam=1.0, a=3.7)
    for t in (0.5, 1.0, 2.0, 3.0, 4.5):
        want = scad_rho_quadrature(spec.lam, spec.a, t)
        assert penalty_rho(spec, t) == pytest.approx(want, abs=1e-6)
        # slope consistency at a few interior points
        h = 1e-6
        fd = (penalty_rho(spec, t + h) - penalty_rho(spec, t - h)) / (2 * h)
        assert fd == pytest.approx(scad_derivative(spec, t), abs=1e-5)


def test_mcp_formulas():
    spec = PenaltySpec(kind="mcp", lam=1.0, gamma=3.0)
    assert penalty_rho(spec, 1.0) == pytest.approx(1.0 - 1.0 / 6.0)
    assert penalty_rho(spec, 3.0) == pytest.approx(1.5)
    assert penalty_rho(spec, 10.0) == pytest.approx(1.5)


def test_penalty_even_and_monotone():
    rng = np.random.default_rng(1)
    specs = [PenaltySpec(kind="bridge", lam=1.0, q=0.3),
             PenaltySpec(kind="scad", lam=0.7, a=3.7),
             PenaltySpec(kind="mcp", lam=0.9, gamma=2.0),
             PenaltySpec(kind="l0", lam=0.4)]
    for spec in specs:
        ts = np.sort(rng.uniform(0, 5, 20))
        vals = [penalty_rho(spec, t) for t in ts]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        for t in ts:
            assert penalty_rho(spec, -t) == penalty_rho(spec, t)


# --------------------------------------------------------------- objective

def test_objective_at_zero_is_half_norm():
    data = seeded_data()
    spec = PenaltySpec(kind="scad", lam=1.0)
    want = 0.5 * float(data.y_arr @ data.y_arr)
    assert penalized_objective(spec, data, np.zeros(data.d)) == pytest.approx(want)


def test_objective_tiny_lambda_matches_ols_value():
    data = seeded_data()
    beta_hat = ols_beta(data.x_arr, data.y_arr)
    resid = data.y_arr - data.x_arr @ beta_hat
    want = 0.5 * float(resid @ resid)
    spec = PenaltySpec(kind="scad", lam=1e-12)
    assert penalized_objective(spec, data, beta_hat) == pytest.approx(want, abs=1e-9)


def test_l0_two_candidate_example():
    data = toy_data()
    spec = PenaltySpec(kind="l0", lam=10.0)
    assert penalized_objective(spec, data, [0.0]) == pytest.approx(5.0)
    assert penalized_objective(spec, data, [2.0]) == pytest.approx(11.0)


# ---------------------------------------------------------------- partition

def test_partition_counts():
    assert len(partition_domain(PenaltySpec(kind="l0", lam=1.0), 1).pieces) == 2
    assert len(partition_domain(PenaltySpec(kind="l0", lam=1.0), 3).pieces) == 8
    assert len(partition_domain(PenaltySpec(kind="bridge", lam=1.0), 2).pieces) == 4
    assert len(partition_domain(PenaltySpec(kind="scad", lam=1.0), 2).pieces) == 1
    assert len(partition_domain(PenaltySpec(kind="mcp", lam=1.0), 7).pieces) == 1


def test_partition_enumeration_cap():
    with pytest.raises(ExplicitBound):
        partition_domain(PenaltySpec(kind="l0", lam=1.0), 21)


def test_partition_pieces_fix_zero_coordinates():
    dom = partition_domain(PenaltySpec(kind="l0", lam=1.0), 2)
    dims = sorted(p.intrinsic_dim for p in dom.pieces)
    assert dims == [0, 1, 1, 2]


# ----------------------------------------------------------- global minimum

def test_global_minimize_l0_toy():
    report = global_minimize(PenaltySpec(kind="l0", lam=10.0), toy_data())
    assert report.verdict == "unique"
    assert report.global_value == pytest.approx(5.0, abs=1e-12)
    assert report.clusters[0].representative == (0.0,)


def test_global_minimize_near_zero_lambda_recovers_ols():
    data = seeded_data(3)
    beta_hat = ols_beta(data.x_arr, data.y_arr)
    for kind in ("scad", "mcp"):
        spec = PenaltySpec(kind=kind, lam=1e-12)
        report = global_minimize(spec, data, MultistartConfig(seed=0, n_starts=24))
        got = np.asarray(report.clusters[0].representative)
        assert report.verdict == "unique"
        assert np.max(np.abs(got - beta_hat)) < 1e-5
        resid = data.y_arr - data.x_arr @ beta_hat
        assert report.global_value == pytest.approx(0.5 * float(resid @ resid),
                                                    abs=1e-8)


def test_l0_enumeration_matches_bruteforce_oracle():
    data = seeded_data(11)
    spec = PenaltySpec(kind="l0", lam=1.0)
    want_beta, want_val = best_subset_bruteforce(data.x_arr, data.y_arr, spec.lam)
    report = global_minimize(spec, data)
    assert report.global_value == pytest.approx(want_val, abs=1e-10)
    assert np.allclose(report.clusters[0].representative, want_beta, atol=1e-8)


def test_l0_multistart_agrees_with_enumeration():
    for seed in (0, 1, 2):
        data = seeded_data(seed)
        spec = PenaltySpec(kind="l0", lam=1.0)
        enum = global_minimize(spec, data)
        multi = multistart_global_minimize(spec, data,
                                           MultistartConfig(seed=seed, n_starts=128))
        assert abs(enum.global_value - multi.global_value) < 1e-8


def test_seeded_trials_unique_all_penalties():
    specs = [PenaltySpec(kind="l0", lam=1.0),
             PenaltySpec(kind="bridge", lam=0.5, q=0.5),
             PenaltySpec(kind="scad", lam=1.0, a=3.7),
             PenaltySpec(kind="mcp", lam=1.0, gamma=3.0)]
    rng = np.random.default_rng(77)
    X = rng.standard_normal((20, 5))
    beta0 = np.array([1.5, -1.0, 0.0, 0.0, 0.0])
    for spec in specs:
        for trial in range(3):  # desk-size smoke; the 200-trial run is acceptance
            y = X @ beta0 + np.random.default_rng(100 + trial).standard_normal(20)
            data = RegressionData(y=tuple(y), x=tuple(tuple(r) for r in X))
            report = global_minimize(spec, data, MultistartConfig(seed=trial,
                                                                  n_starts=64))
            assert report.verdict == "unique"


def test_ols_solution_matches_normal_equations():
    data = seeded_data(5)
    assert np.allclose(ols_solution(data), ols_beta(data.x_arr, data.y_arr),
                       atol=1e-10)


def test_regression_objective_grad_z_matches_fd():
    from argmin_unique.penalized import regression_objective

    data = seeded_data(9)
    obj = regression_objective(PenaltySpec(kind="scad", lam=0.8), data)
    rng = np.random.default_rng(4)
    for _ in range(100):
        beta = rng.uniform(-2, 2, data.d)
        y = rng.standard_normal(data.n)
        analytic = obj.grad_z(beta, y)
        h = 1e-5
        for i in rng.choice(data.n, size=3, replace=False):
            yp, ym = y.copy(), y.copy()
            yp[i] += h
            ym[i] -= h
            fd = (obj.eval(beta, yp) - obj.eval(beta, ym)) / (2 * h)
            assert abs(analytic[i] - fd) <= 1e-4 * (1 + abs(analytic[i]))
