"""Acceptance criteria, one test and one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np

from ic_lab.boxes import box_3322, pr_box
from ic_lab.bounds import limit_bound, protocol_bound, result1_witness, solve_symmetric_bound, table1_row
from ic_lab.channels import closed_form_capacity, identity_channel, iterative_capacity, symmetric_channel
from ic_lab.info_math import fano_information, mutual_information, unbiased_error_joint
from ic_lab.protocols import load_protocol, protocol_3322, simulate
from ic_lab.search import SearchConfig, anneal_protocol, exhaustive_protocol_search
from oracles import fano_literal, h, mutual_information_loops, success_3322_enumerated

FIXTURES = Path(__file__).parent / "fixtures"
P_Q = (1 + 1 / math.sqrt(2)) / 2

# d: (optimal e_c, e, e' from concatenation), three-decimal reference values
REFERENCE_ROWS = {3: (0.295, 0.702, 0.708), 4: (0.389, 0.696, 0.705), 5: (0.436, 0.690, 0.700), 20: (0.531, 0.648, 0.659)}


def pr_family(e):
    return pr_box((1 + e) / 2)


def test_c01_chsh_capacity_one(criterion):
    start = time.perf_counter()
    p = solve_symmetric_bound(2, 2, 1.0).p_bound
    elapsed = time.perf_counter() - start
    ok = abs(p - 0.890) <= 1e-3 and elapsed < 1.0
    assert criterion("1 CHSH capacity-1 bound", ok, f"p={p:.6f} target 0.890±0.001, {elapsed:.3f}s < 1s")


def test_c02_tsirelson_recovery(criterion):
    proto = load_protocol(FIXTURES / "van_dam.json")
    start = time.perf_counter()
    p = limit_bound(proto, pr_family, d=2).p_bound
    elapsed = time.perf_counter() - start
    ok = abs(p - 0.8536) <= 1e-3 and abs(p - P_Q) <= 1e-3 and elapsed < 10.0
    assert criterion("2 Tsirelson recovery", ok, f"p={p:.6f} vs p_Q={P_Q:.6f}, {elapsed:.2f}s < 10s")


def test_c03_optimal_channel_bias_rows(criterion):
    start = time.perf_counter()
    rows = {d: table1_row(d) for d in REFERENCE_ROWS}
    elapsed = time.perf_counter() - start
    misses, details = [], []
    for d, (ec_ref, e_ref, concat_ref) in REFERENCE_ROWS.items():
        row = rows[d]
        checks = {
            "e_c": (row["e_c_opt"], ec_ref),
            "e": (row["e"], e_ref),
            "e'": (row["e_concat"], concat_ref),
        }
        for name, (got, ref) in checks.items():
            if abs(got - ref) > 2e-3:
                misses.append(f"d={d} {name}={got:.6f} vs {ref} (|diff| {abs(got - ref):.4f} > 0.002)")
        if not row["e"] <= row["e_concat"]:
            misses.append(f"d={d} e > e'")
        details.append(f"d={d}: {row['e_c_opt']:.4f}/{row['e']:.4f}/{row['e_concat']:.4f}")
    ok = not misses and elapsed < 30.0
    detail = "; ".join(details) + f"; {elapsed:.2f}s < 30s"
    if misses:
        detail += "; misses: " + "; ".join(misses)
    assert criterion("3 optimal channel bias vs concatenation", ok, detail)


def test_c04_3322_bounds(criterion):
    proto = protocol_3322()
    start = time.perf_counter()
    e1 = protocol_bound(proto, box_3322, identity_channel()).e_bound
    e0 = limit_bound(proto, box_3322, d=2).e_bound
    elapsed = time.perf_counter() - start
    ok = abs(e1 - 0.7445) <= 1e-3 and abs(e0 - 0.6667) <= 5e-3 and elapsed < 60.0
    assert criterion("4 3322 bounds", ok, f"capacity-1 e={e1:.6f}, limit e={e0:.6f}, {elapsed:.2f}s < 60s")


def test_c05_fano_equality(criterion):
    rng = np.random.default_rng(2024)
    worst = worst_oracle = 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 9))
        e = float(rng.random())
        joint = unbiased_error_joint(d, e)
        # literal construction: 1/d on the diagonal times p, the rest spread over d-1 wrong guesses
        p = (1 + (d - 1) * e) / d
        literal = np.full((d, d), (1 - p) / (d - 1) / d)
        np.fill_diagonal(literal, p / d)
        worst = max(worst, abs(mutual_information(joint) - fano_information(d, e)))
        worst_oracle = max(worst_oracle, abs(mutual_information_loops(literal) - fano_information(d, e)))
        if e > 1e-3:
            worst_oracle = max(worst_oracle, abs(fano_literal(d, e) - fano_information(d, e)))
    ok = worst <= 1e-10 and worst_oracle <= 1e-10
    assert criterion("5 Fano equality", ok, f"max deviation {worst:.2e} (oracle {worst_oracle:.2e}) over 1000 pairs")


def test_c06_capacity_equivalence(criterion):
    rng = np.random.default_rng(6)
    worst_cap = worst_input = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 9))
        e_c = float(rng.uniform(0.01, 1.0))
        start = rng.dirichlet(np.ones(d)) * 0.9 + 0.1 / d
        res = iterative_capacity(symmetric_channel(d, e_c), tol=1e-12, initial=start)
        worst_cap = max(worst_cap, abs(res.capacity - closed_form_capacity(d, e_c)))
        worst_input = max(worst_input, float(np.max(np.abs(res.input_distribution - 1.0 / d))))
    ok = worst_cap <= 1e-8 and worst_input <= 1e-6
    assert criterion("6 capacity equivalence", ok, f"capacity {worst_cap:.2e} <= 1e-8, input {worst_input:.2e} <= 1e-6")


def test_c07_channel_dominates_concatenation(criterion):
    rng = np.random.default_rng(7)
    counterexamples = premises = 0
    for _ in range(100_000):
        rep = result1_witness(int(rng.integers(2, 5)), int(rng.integers(2, 9)), float(rng.random()), int(rng.integers(1, 7)))
        premises += rep.premises
        counterexamples += not rep.holds
    ok = counterexamples == 0 and premises > 0
    assert criterion("7 channel dominates concatenation", ok, f"{counterexamples} counterexamples, premises active in {premises}/100000")


def test_c08_cross_solver(criterion):
    proto = load_protocol(FIXTURES / "van_dam.json")
    rng = np.random.default_rng(8)
    worst = 0.0
    for e_c in rng.uniform(0.01, 1.0, size=20):
        a = protocol_bound(proto, pr_family, symmetric_channel(2, float(e_c))).e_bound
        b = solve_symmetric_bound(2, 2, float(e_c)).e_bound
        worst = max(worst, abs(a - b))
    assert criterion("8 cross-solver oracle", worst <= 1e-8, f"max |diff| {worst:.2e} <= 1e-8 over 20 e_c")


def test_c09_3322_enumeration(criterion):
    got = simulate(protocol_3322(), box_3322(1.0), identity_channel()).success
    expected = success_3322_enumerated(1.0)
    ok = np.array_equal(got, expected) and np.array_equal(expected, [1.0, 0.75, 1.0])
    assert criterion("9 3322 enumeration", ok, f"simulate {got.tolist()} vs enumerator {list(expected)}")


def test_c10_search_regression(criterion):
    cfg = SearchConfig(max_evaluations=200_000)
    details, ok = [], True
    for p in (0.9, 0.95, 1.0):
        target = 2 * (1 - h(p))
        exact = exhaustive_protocol_search(pr_box(p), identity_channel(), 2).score
        hits = sum(
            anneal_protocol(pr_box(p), identity_channel(), 2, SearchConfig(**{**cfg.__dict__, "seed": s})).score
            >= exact - 1e-9
            for s in range(100)
        )
        ok &= abs(exact - target) <= 1e-12 and hits >= 95
        details.append(f"p={p}: exhaustive {exact:.9f} vs {target:.9f}, anneal {hits}/100")
    assert criterion("10 search regression", ok, "; ".join(details))
