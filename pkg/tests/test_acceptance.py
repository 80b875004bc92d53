"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the PASS
lines on the terminal). Criteria 4b and 7b assert properties that the
implemented algorithms demonstrably do not have; they fail with concrete
counterexamples rather than being weakened (details in the failure
messages).
"""

import random
import time
from functools import lru_cache

import pytest

from dpnl import (
    CnfFormula,
    SequentialOrder,
    SumInstanceSpec,
    SymbolicFunction,
    WeightMap,
    ad_recover,
    ad_transform,
    approx_dpnl,
    bound_trace,
    bruteforce_probability,
    build_sum_instance,
    check_completeness,
    check_validity,
    dpnl,
    dpnl_gradient,
    exhaustive_oracle,
    finite_difference_partials,
    fresh_valuation,
    logic_instance,
    naive_oracle,
    output_distribution,
    probdpll,
    provenance_clause_count,
    pwmc_bruteforce,
    reachability_program,
    right_to_left_order,
    success_probability,
    success_probability_bruteforce,
    sum_distribution_reference,
    sum_function,
    total_completions,
)
from dpnl.approx import EpsAdditive, EpsMultiplicative, Exhaustive, Fifo, MaxProbability, RandomChoice
from conftest import (
    count_simple_paths,
    random_cnf,
    random_digit_rows,
    random_horn_program,
    random_table_instance,
)

UNSAT = [[1, 2, -3], [1, 2, 3], [2, -1], [-2, 3], [-2, -3]]


def _ok(cid: str, detail: str) -> None:
    print("ACCEPTANCE %s: PASS (%s)" % (cid, detail))


def test_c01_probdpll_exactness():
    rng = random.Random(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        g, sigma = random_cnf(rng, max_vars=14, max_clauses=40)
        worst = max(worst, abs(probdpll(g, sigma) - pwmc_bruteforce(g, sigma)))
        assert worst <= 1e-12
    assert probdpll(CnfFormula(3, UNSAT), WeightMap([0.3, 0.6, 0.7])) == 0.0
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _ok("1", "500 formulas, max |diff| %.2e, %.1fs" % (worst, elapsed))


def test_c02_dpnl_exactness():
    rng = random.Random(202)
    start = time.perf_counter()
    worst_ref = 0.0
    worst_spread = 0.0
    for _ in range(200):
        inst, sfn = random_table_instance(rng, m_max=6, size_max=5)
        perm = list(range(inst.m))
        rng.shuffle(perm)
        orders = [SequentialOrder(), SequentialOrder(list(range(inst.m - 1, -1, -1))), SequentialOrder(perm)]
        oracles = [naive_oracle(sfn), exhaustive_oracle(sfn)]
        for o in range(inst.output_domain.size):
            expected = bruteforce_probability(inst, sfn, o)
            values = [
                dpnl(inst, o, oracle, order=order)[0]
                for oracle in oracles
                for order in orders
            ]
            worst_ref = max(worst_ref, max(abs(v - expected) for v in values))
            worst_spread = max(worst_spread, max(values) - min(values))
            assert worst_ref <= 1e-10
            assert worst_spread <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _ok("2", "200 instances, ref err %.2e, spread %.2e, %.1fs" % (worst_ref, worst_spread, elapsed))


def test_c03_sum_task_correctness():
    # uniform digits: 5 of 100 pairs sum to 4, 10 of 100 sum to 9
    inst, _, oracle = build_sum_instance(SumInstanceSpec.uniform(1))
    order = right_to_left_order(1)
    assert abs(dpnl(inst, 4, oracle, order=order)[0] - 0.05) <= 1e-12
    assert abs(dpnl(inst, 9, oracle, order=order)[0] - 0.10) <= 1e-12

    rng = random.Random(303)
    worst = 0.0
    checked = 0
    # 20 random distribution sets across N=1..4; all outputs are checked up
    # to N=2, a fixed-plus-random sample beyond (a full per-output sweep at
    # N=4 is ~2e9 oracle calls, hours of work; see the decisions notes)
    for n, repeats in ((1, 8), (2, 6), (3, 4), (4, 2)):
        for _ in range(repeats):
            spec = SumInstanceSpec(n, random_digit_rows(rng, n))
            inst_n, _, oracle_n = build_sum_instance(spec)
            order_n = right_to_left_order(n)
            reference = sum_distribution_reference(spec)
            size = 2 * 10**n
            if n <= 2:
                outputs = range(size)
            else:
                outputs = sorted(
                    {0, 1, size // 2, size - 2, size - 1}
                    | {rng.randrange(size) for _ in range(5)}
                )
            for o in outputs:
                value, _ = dpnl(inst_n, o, oracle_n, order=order_n)
                worst = max(worst, abs(value - reference[o]))
                checked += 1
                assert worst <= 1e-10

    # scale check: one N=4 query with full-support distributions
    inst4, _, oracle4 = build_sum_instance(SumInstanceSpec.uniform(4))
    start = time.perf_counter()
    value4, stats4 = dpnl(inst4, 9999, oracle4, order=right_to_left_order(4))
    single_query = time.perf_counter() - start
    assert single_query <= 10.0
    ref4 = sum_distribution_reference(SumInstanceSpec.uniform(4))
    assert abs(value4 - ref4[9999]) <= 1e-10
    _ok("3", "%d outputs checked, err %.2e; N=4 query %.2fs" % (checked, worst, single_query))


def test_c04a_addition_oracle_validity():
    sfn1 = sum_function(1)
    _, _, oracle1 = build_sum_instance(SumInstanceSpec.uniform(1))
    report = check_validity(oracle1, sfn1, exhaustive=True)
    assert report.passed, report.counterexample
    assert report.checked == 11 * 11 * 20  # every (valuation, output) pair

    sfn2 = sum_function(2)
    _, _, oracle2 = build_sum_instance(SumInstanceSpec.uniform(2))
    report2 = check_validity(oracle2, sfn2, budget=10**5, seed=404)
    assert report2.passed, report2.counterexample
    _ok("4a", "N=1 exhaustive (%d pairs) and N=2 with %d samples" % (report.checked, report2.checked))


def test_c04b_addition_oracle_r2l_completeness():
    # Literal criterion: along the right-to-left order at N=1, no undecided
    # verdict may have homogeneous completions. The digit-scan oracle cannot
    # satisfy this: it is undecided whenever the current position pair has an
    # unassigned digit, regardless of what the completions do.
    sfn = sum_function(1)
    _, _, oracle = build_sum_instance(SumInstanceSpec.uniform(1))
    perm = right_to_left_order(1).permutation
    reachable = [fresh_valuation(2)]
    frontier = [fresh_valuation(2)]
    for k in perm:
        frontier = [v.assign(k, x) for v in frontier for x in range(10)]
        reachable.extend(frontier)
    violations = []
    for v in reachable:
        for o in range(20):
            if oracle(v, o).answer is not None:
                continue
            outcomes = {sfn.fn(w.cells) == o for w in total_completions(v, sfn.domains)}
            if len(outcomes) == 1:
                violations.append((v, o, "agree" if True in outcomes else "disagree"))
    if violations:
        print("ACCEPTANCE 4b: FAIL (%d homogeneous undecided verdicts)" % len(violations))
        v, o, kind = violations[0]
        pytest.fail(
            "criterion not satisfiable by the digit-scan oracle: "
            "%d of the order-reachable (valuation, output) pairs get an "
            "undecided verdict although every completion %ss, e.g. %r with "
            "output %d (completions sum to 9..18). The oracle must report "
            "unknown at any position pair with an unassigned digit, so this "
            "holds by construction; value correctness is unaffected "
            "(criteria 2-3)." % (len(violations), kind, v, o)
        )
    _ok("4b", "no homogeneous undecided verdicts along the order")


def test_c05_approx_guarantees():
    rng = random.Random(505)
    heuristics = [MaxProbability(), Fifo(), RandomChoice(5)]
    pairs = 0
    for trial in range(5):
        spec = SumInstanceSpec(1, random_digit_rows(rng, 1))
        inst, _, oracle = build_sum_instance(spec)
        order = right_to_left_order(1)
        reference = sum_distribution_reference(spec)
        for o in range(20):
            exact, _ = dpnl(inst, o, oracle, order=order)
            assert abs(exact - reference[o]) <= 1e-10
            heuristic = heuristics[(trial + o) % 3]

            # (a) every snapshot brackets the exact value, (e) mass conservation
            for snap in bound_trace(inst, o, oracle, heuristic, max_steps=10**6, order=order):
                assert snap.bounds.low - 1e-12 <= exact <= snap.bounds.up + 1e-12
                balance = snap.bounds.low + (1.0 - snap.bounds.up) + snap.frontier_mass
                assert abs(balance - 1.0) <= 1e-9

            # (b) multiplicative guarantee
            bounds, _ = approx_dpnl(inst, o, oracle, EpsMultiplicative(0.1), heuristic, order=order)
            if exact == 0.0:
                assert bounds.estimate == 0.0
            else:
                assert exact / 1.1 - 1e-12 <= bounds.estimate <= exact * 1.1 + 1e-12

            # (c) additive guarantee
            bounds, _ = approx_dpnl(inst, o, oracle, EpsAdditive(0.05), heuristic, order=order)
            assert abs(bounds.estimate - exact) <= 0.05 + 1e-12

            # (d) exhaustive run reproduces the exact value
            bounds, _ = approx_dpnl(inst, o, oracle, Exhaustive(), heuristic, order=order)
            assert abs(bounds.estimate - exact) <= 1e-10
            pairs += 1
    assert pairs == 100
    _ok("5", "%d (instance, output) pairs under all stop policies" % pairs)


def test_c06_logic_oracle():
    rng = random.Random(606)
    worst = 0.0
    for _ in range(100):
        prog = random_horn_program(rng, m_max=8)
        inst, sfn, oracle = logic_instance(prog)
        cached = SymbolicFunction(
            sfn.domains, sfn.output_domain, lru_cache(maxsize=None)(sfn.fn)
        )
        assert check_validity(oracle, cached, exhaustive=True).passed
        assert check_completeness(oracle, cached, exhaustive=True).passed
        value, _ = success_probability(prog)
        worst = max(worst, abs(value - success_probability_bruteforce(prog)))
        assert worst <= 1e-10
    _ok("6", "100 programs, validity+completeness exhaustive, err %.2e" % worst)


def test_c07a_provenance_counts():
    expected = [1, 2, 5, 16, 65, 326]
    for n, want in zip(range(2, 8), expected):
        assert provenance_clause_count(n) == want
        assert count_simple_paths(n) == want
    _ok("7a", "closed form equals path enumeration for n=2..7")


def test_c07b_search_growth_versus_provenance():
    # Literal criterion: branch nodes on complete-graph reachability must
    # grow strictly slower than the proof count over n=4..7. Reachability
    # probability is #P-hard and this search has no component caching, so
    # its tree grows much faster; the comparison already fails from n=4 to
    # n=5, and n >= 6 is out of desk reach entirely (>2 minutes at n=6).
    measured = {}
    for n in (4, 5):
        prog = reachability_program(n, [[0.5] * n for _ in range(n)])
        _, stats = success_probability(prog)
        measured[n] = stats.branch_nodes
    node_growth = measured[5] / measured[4]
    clause_growth = provenance_clause_count(5) / provenance_clause_count(4)
    if node_growth >= clause_growth:
        print("ACCEPTANCE 7b: FAIL (node growth %.1fx vs clause growth %.1fx)" % (node_growth, clause_growth))
        pytest.fail(
            "criterion not satisfiable: branch nodes grow faster than the "
            "proof count (n=4: %d nodes vs 5 clauses; n=5: %d nodes vs 16 "
            "clauses; growth %.1fx vs %.1fx). The proof count is the number "
            "of simple paths, while the search tree must resolve every "
            "probability-relevant edge subset without caching; what stays "
            "polynomial here is the oracle's per-call cost, not the tree "
            "size (two-terminal reliability is #P-hard)."
            % (measured[4], measured[5], node_growth, clause_growth)
        )
    _ok("7b", "branch node growth below clause growth")


def test_c08_gradients():
    rng = random.Random(808)
    worst_fd = 0.0
    worst_recon = 0.0
    cases = 0

    def check(inst, sfn, oracle, o, order=None):
        nonlocal worst_fd, worst_recon, cases
        grad, _ = dpnl_gradient(inst, o, oracle, order=order)
        numeric = finite_difference_partials(inst, sfn, o, h=1e-6)
        for row_a, row_n in zip(grad.partials, numeric):
            for a, n in zip(row_a, row_n):
                worst_fd = max(worst_fd, abs(a - n) / max(1.0, abs(a), abs(n)))
        for k in range(inst.m):
            worst_recon = max(worst_recon, abs(grad.reconstruct(inst, k) - grad.value))
        assert worst_fd <= 1e-6
        assert worst_recon <= 1e-9
        cases += 1

    for _ in range(35):
        spec = SumInstanceSpec(1, random_digit_rows(rng, 1))
        inst, sfn, oracle = build_sum_instance(spec)
        check(inst, sfn, oracle, rng.randrange(19), order=right_to_left_order(1))
    for _ in range(3):
        spec = SumInstanceSpec(2, random_digit_rows(rng, 2))
        inst, sfn, oracle = build_sum_instance(spec)
        check(inst, sfn, oracle, rng.randrange(199), order=right_to_left_order(2))
    for _ in range(12):
        prog = random_horn_program(rng, m_max=8)
        inst, sfn, oracle = logic_instance(prog)
        check(inst, sfn, oracle, 1)

    assert cases == 50
    _ok("8", "50 instances, fd err %.2e, reconstruction err %.2e" % (worst_fd, worst_recon))


def test_c09_normalization():
    rng = random.Random(202)  # same stream as criterion 2
    worst = 0.0
    for _ in range(60):
        inst, sfn = random_table_instance(rng, m_max=6, size_max=5)
        for oracle in (naive_oracle(sfn), exhaustive_oracle(sfn)):
            dist, _ = output_distribution(inst, oracle)
            worst = max(worst, abs(sum(dist.values()) - 1.0))
            assert worst <= 1e-9
    rng3 = random.Random(303)  # same stream as criterion 3
    for n, repeats in ((1, 8), (2, 6)):
        for _ in range(repeats):
            spec = SumInstanceSpec(n, random_digit_rows(rng3, n))
            inst, _, oracle = build_sum_instance(spec)
            dist, _ = output_distribution(inst, oracle, order=right_to_left_order(n))
            worst = max(worst, abs(sum(dist.values()) - 1.0))
            assert worst <= 1e-9
    _ok("9", "distributions normalized, worst dev %.2e" % worst)


def test_c10_ad_round_trip():
    rng = random.Random(1010)
    worst = 0.0
    for _ in range(1000):
        size = rng.randint(1, 8)
        raw = [rng.random() + 1e-3 for _ in range(size)]
        total = sum(raw)
        p = [x / total for x in raw]
        back = ad_recover(ad_transform(p))
        worst = max(worst, max(abs(a - b) for a, b in zip(p, back)))
        assert worst <= 1e-12
    forward = ad_transform([0.2, 0.3, 0.5])
    assert max(abs(a - b) for a, b in zip(forward, [0.2, 0.375, 1.0])) <= 1e-12
    back = ad_recover([0.2, 0.375, 1.0])
    assert max(abs(a - b) for a, b in zip(back, [0.2, 0.3, 0.5])) <= 1e-12
    _ok("10", "1000 round trips, worst dev %.2e" % worst)
