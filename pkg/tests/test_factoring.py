import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from onequmode.estimation import ExperimentConfig
from onequmode.factoring import (
    BudgetExhausted,
    ClassicalRejection,
    FactorResult,
    classical_check,
    continued_fraction_recover,
    coprime_mass,
    convergents,
    euler_phi,
    exact_run_success_probability,
    factor,
    is_order,
    order_from_samples,
    formula_run_success_probability,
    run_bound,
    run_outcomes,
    to_turns,
    totient_bound_check,
)
from onequmode.spectrum import ModularProblem, register_qubits
from oracles import binomial_se, brute_order, euler_phi as phi_oracle, fractions_within


@pytest.mark.parametrize("p,N,out", [(0.0, 15, (0, 1)), (0.25, 15, (1, 4)), (0.3330, 15, (1, 3)),
                                     (1 - 1e-6, 15, (0, 1)), (0.5 + 1 / 450 * 1.5, 15, None)])
def test_recover_examples(p, N, out):
    assert continued_fraction_recover(p, N) == out


@given(st.integers(2, 200), st.floats(0, 1, exclude_max=True))
def test_recover_matches_exhaustive_search(N, p):
    tol = 1 / (2 * N * N)
    found = fractions_within(p, N, tol * (1 - 1e-9))
    got = continued_fraction_recover(p, N)
    if found:
        assert got == found[0]
    elif got is not None:
        # only allowed inside the rounding slack at the window edge
        assert fractions_within(p, N, tol * (1 + 2e-9)) == [got]


def test_recover_validation():
    with pytest.raises(ValueError):
        continued_fraction_recover(1.0, 15)
    with pytest.raises(ValueError):
        continued_fraction_recover(0.5, 1)


def test_convergents():
    assert convergents(Fraction(415, 93)) == [(4, 1), (9, 2), (58, 13), (415, 93)]
    assert convergents(Fraction(415, 93), 10)[-1] == (58, 13)


@given(st.integers(3, 300).flatmap(lambda N: st.tuples(st.just(N), st.integers(2, N - 1))))
def test_is_order_matches_brute_force(pair):
    N, q = pair
    if math.gcd(N, q) != 1:
        return
    r = brute_order(N, q)
    assert is_order(N, q, r)
    assert not is_order(N, q, 2 * r)
    assert all(not is_order(N, q, d) for d in range(1, r))


def test_to_turns_folds():
    t = to_turns(np.array([-1e-18, 2 * math.pi, -math.pi, 7.0]))
    assert np.all((t >= 0) & (t < 1))
    assert t[2] == pytest.approx(0.5)


def test_order_recovery_15():
    cfg = ExperimentConfig(s0=256, tau=1, T_bound=200, seed=4)
    res = order_from_samples(ModularProblem(15, 2), cfg)
    assert res.recovered_r == 4 and res.runs_used == len(res.per_run_log)
    res = order_from_samples(ModularProblem(15, 4), cfg)
    assert res.recovered_r == 2


def test_order_recovery_lcm_mode():
    cfg = ExperimentConfig(s0=4096, tau=1, T_bound=200, seed=1)
    for N, q in [(21, 2), (35, 2), (33, 5)]:
        res = order_from_samples(ModularProblem(N, q), cfg, combine_lcm=True)
        assert res.recovered_r == brute_order(N, q)


def test_order_requires_squeezing():
    with pytest.raises(ValueError):
        order_from_samples(ModularProblem(15, 2), ExperimentConfig(s0=1, tau=0.5))


def test_run_success_formulas_15():
    cfg = ExperimentConfig(s0=225, tau=1)
    p = ModularProblem(15, 2)
    assert formula_run_success_probability(p, cfg) == pytest.approx(6 / 16 * math.erf(math.pi))
    assert exact_run_success_probability(p, cfg) == pytest.approx(0.375, abs=2e-4)
    # l -> 4l mod 15 has fixed points 0, 5, 10 and the pad 15; the other 12 states pair up
    q4 = ModularProblem(15, 4)
    assert formula_run_success_probability(q4, cfg) == pytest.approx(6 / 16 * math.erf(math.pi))
    low = ExperimentConfig(s0=1, tau=1)
    assert formula_run_success_probability(p, low) == pytest.approx(math.erf(math.pi / 225) * 6 / 16)


def test_run_outcomes_rate():
    cfg = ExperimentConfig(s0=256, tau=1, seed=12)
    p = ModularProblem(21, 2)
    ok = run_outcomes(p, cfg, 4000)
    P = exact_run_success_probability(p, cfg)
    assert abs(ok.mean() - P) < 5 * binomial_se(P, ok.size)


@pytest.mark.parametrize("N,facts", [(15, (3, 5)), (21, (3, 7)), (35, (5, 7)), (91, (7, 13))])
def test_factor(N, facts):
    n = register_qubits(N)
    res = factor(N, ExperimentConfig(s0=2.0 ** (2 * n), T_bound=500), seed=3)
    assert res.factors == facts


def test_factor_21_via_q2():
    # order(21, 2) = 6 and 2^3 = 8, so gcd(7, 21) = 7 and gcd(9, 21) = 3
    y = pow(2, 3, 21)
    assert (math.gcd(y - 1, 21), math.gcd(y + 1, 21)) == (7, 3)


def test_factor_lucky_gcd():
    # some seeds draw a q sharing a factor with 15 first and need no runs at all
    results = [factor(15, ExperimentConfig(s0=256, T_bound=100), s) for s in range(20)]
    lucky = [r for r in results if math.gcd(r.q_used, 15) > 1]
    assert lucky and all(r.order is None for r in lucky)
    assert any(r.total_runs == 0 for r in lucky)


@pytest.mark.parametrize("N,msg", [(17, "prime"), (16, "even"), (27, "prime power"), (3, "not composite")])
def test_classical_rejection(N, msg):
    with pytest.raises(ClassicalRejection, match=msg):
        classical_check(N)
    with pytest.raises(ClassicalRejection):
        factor(N, ExperimentConfig(s0=256), 0)


def test_budget_exhausted():
    with pytest.raises(BudgetExhausted) as exc:
        for seed in range(50):
            factor(15, ExperimentConfig(s0=1, tau=1, T_bound=1), seed)
    assert exc.value.total_runs == 1


def test_factor_result_validation():
    with pytest.raises(ValueError):
        FactorResult(15, (1, 15), 2, 0)


def test_run_bound():
    assert run_bound(15, 256, 1) == pytest.approx(1.774, abs=1e-3)
    assert run_bound(15, 1e-300, 1) == math.inf or run_bound(15, 1e-300, 1) > 1e100
    vals = [run_bound(33, s, 1) for s in (1, 10, 100, 1000, 4096)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_totient_checks():
    c = totient_bound_check(10)
    assert c.phi == 4 and c.lower == pytest.approx(6.73, abs=0.01) and c.ok is False
    assert totient_bound_check(4).phi == 2
    one = totient_bound_check(1)
    assert one.phi == 1 and one.vacuous


@given(st.integers(1, 5000))
def test_euler_phi_oracle(r):
    assert euler_phi(r) == phi_oracle(r)


@pytest.mark.parametrize("N", [15, 21, 33, 35, 39, 51, 55, 65, 77, 91, 95])
def test_squeezed_run_success_independent_of_N(N):
    # at s0 tau = 2^(2n) each coprime peak keeps at least erf(pi) of its mass in the window
    n = register_qubits(N)
    cfg = ExperimentConfig(s0=2.0 ** (2 * n), tau=1)
    for q in (2, N - 2):
        p = ModularProblem(N, q)
        assert exact_run_success_probability(p, cfg) >= math.erf(math.pi) * coprime_mass(p) * (1 - 1e-12)
