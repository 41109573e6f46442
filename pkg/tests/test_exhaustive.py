import numpy as np
import pytest

from nsccert.exhaustive import EsmBudgetError, esm_alpha
from nsccert.matrices import SensingMatrix, binom, gen_gaussian
from nsccert.tree_search import tsa

from oracles import alpha_k_bruteforce

ONES = SensingMatrix(np.ones((1, 3)), provenance="ones1x3")


def test_ones_k1():
    r = esm_alpha(ONES, 1)
    assert r.report.upper == pytest.approx(0.5, abs=1e-9)
    assert r.report.exact and r.report.lower == r.report.upper
    assert len(r.argmax) == 1


def test_ones_k2_and_tie_break():
    r = esm_alpha(ONES, 2)
    assert r.report.upper == pytest.approx(1.0, abs=1e-9)
    # every pair achieves 1.0; lexicographically smallest argmax wins
    assert r.argmax.indices == (1, 2)


def test_matches_bruteforce():
    a = gen_gaussian(4, 8, 50)
    for k in (1, 2, 3):
        got = esm_alpha(a, k).report.upper
        assert got == pytest.approx(alpha_k_bruteforce(a.entries, k), abs=1e-8)


def test_cross_oracle_with_tsa():
    a = gen_gaussian(8, 16, 51)
    r = esm_alpha(a, 2)
    t = tsa(a, 2, 1)
    assert r.report.upper == pytest.approx(t.glb, abs=1e-6)


def test_nondecreasing_in_k():
    a = gen_gaussian(5, 10, 52)
    values = [esm_alpha(a, k).report.upper for k in (1, 2, 3, 4)]
    assert all(b >= a_ - 1e-12 for a_, b in zip(values, values[1:]))


def test_k_equals_n():
    a = gen_gaussian(4, 6, 53)  # nontrivial null space
    assert esm_alpha(a, 6).report.upper == pytest.approx(1.0, abs=1e-9)
    eye = SensingMatrix(np.eye(3), provenance="eye3")
    assert esm_alpha(eye, 3).report.upper == 0.0


def test_square_fourier_has_zero_alpha():
    # full-rank square generator output: trivial null space downstream
    from nsccert.matrices import gen_partial_fourier

    a = gen_partial_fourier(4, 4, 1)
    for k in (1, 2):
        r = esm_alpha(a, k)
        assert r.report.upper == 0.0
        assert r.report.nsc_decision.value == "holds"


def test_witness_invariants():
    a = gen_gaussian(6, 12, 54)
    r = esm_alpha(a, 2)
    z = r.witness
    assert np.abs(a.entries @ z).max() <= 1e-7
    assert np.abs(z).sum() <= 1.0 + 1e-9
    assert np.abs(z[r.argmax.zero_based()]).sum() >= r.report.upper - 1e-7


def test_lp_solve_accounting():
    a = gen_gaussian(4, 8, 55)
    r = esm_alpha(a, 3)
    assert r.report.lp_solves == binom(8, 3) * 4


def test_budget_refusal_with_estimate():
    a = gen_gaussian(6, 12, 56)
    with pytest.raises(EsmBudgetError) as exc:
        esm_alpha(a, 3, budget=100)
    err = exc.value
    assert err.num_subsets == binom(12, 3)
    assert err.lp_solves == binom(12, 3) * 4
    assert err.estimated_seconds > 0


def test_parallel_matches_serial():
    a = gen_gaussian(6, 12, 57)
    serial = esm_alpha(a, 2)
    parallel = esm_alpha(a, 2, processes=2)
    assert parallel.report.upper == serial.report.upper
    assert parallel.argmax == serial.argmax


def test_bad_k():
    with pytest.raises(ValueError):
        esm_alpha(ONES, 0)
    with pytest.raises(ValueError):
        esm_alpha(ONES, 4)
