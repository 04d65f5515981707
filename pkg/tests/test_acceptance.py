"""Acceptance criteria, each at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line (printed immediately and
again in the terminal summary).  Statistical checks use a single master
seed fixed before any run; it is never tuned.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rcflab.canonical import is_similar, rcf
from rcflab.fp import Poly, divrem, factor, irreducibles, poly_product
from rcflab.matrix import MatFp, charpoly, inverse, mat_poly_eval, random_invertible
from rcflab.measures import aut_cardinality, mu, nu
from rcflab.moduletype import enumerate_module_types, parse_module_type
from rcflab.modules import aut_count_bruteforce, aut_count_oracle, exact_moment, realize, sur_count_from_matrix
from rcflab.partitions import Partition, partitions_of
from rcflab.sampler import (
    ExperimentConfig,
    run_convergence_experiment,
    run_experiment,
    run_moment_experiment,
    run_multiplicity_experiment,
    validate_dist,
)
from rcflab.snf import char_invariant_factors, type_at, type_at_rank_oracle

MASTER_SEED = 20240101
UNIFORM2 = validate_dist([Fraction(1, 2), Fraction(1, 2)])
SKEWED2 = validate_dist([Fraction(3, 4), Fraction(1, 4)], Fraction(1, 4))
T = irreducibles(2, 1)[0]
T1 = irreducibles(2, 1)[1]


def record(k: int, passed: bool, detail: str, seconds: float) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail} [{seconds:.1f}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)


def test_criterion_1_aut_formula():
    t0 = time.perf_counter()
    cache: dict = {}
    methods = {"enumerate": 0, "generators": 0, "mixed": 0}
    bad = []
    total = 0
    for p, max_dim in ((2, 10), (3, 6)):  # |G| = p^dim <= 2^10
        for tau in enumerate_module_types(p, max_dim):
            formula = math.prod(aut_cardinality(f, lam) for f, lam in tau.items())
            count, how = aut_count_oracle(tau, cache=cache)
            methods[how] += 1
            total += 1
            if count != formula:
                bad.append(str(tau))
    anchors = (
        aut_count_bruteforce(realize(parse_module_type("t:1+1", 2))) == 6 == aut_cardinality(T, Partition((1, 1))),
        aut_count_bruteforce(realize(parse_module_type("t:2+1", 2))) == 8 == aut_cardinality(T, Partition((2, 1))),
    )
    seconds = time.perf_counter() - t0
    passed = not bad and all(anchors) and seconds < 120
    record(
        1,
        passed,
        f"{total} types, {len(bad)} mismatches; anchors 6 and 8 {'ok' if all(anchors) else 'WRONG'}; "
        f"per type: {methods['enumerate']} fully enumerated, {methods['mixed']} mixed, "
        f"{methods['generators']} by generator count",
        seconds,
    )
    assert passed, bad[:10]


def test_criterion_2_snf_vs_rank_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED)
    pool = {p: [f for d in (1, 2, 3) for f in irreducibles(p, d)] for p in (2, 3, 5)}
    failures = 0
    for _ in range(10_000):
        p = int(rng.choice([2, 3, 5]))
        n = int(rng.integers(1, 9))
        A = MatFp(rng.integers(0, p, (n, n)), p)
        if rng.random() < 0.5:
            # half the targets divide the charpoly, so the partitions are nontrivial
            fs = [f for f, _ in factor(charpoly(A))]
            f = fs[int(rng.integers(len(fs)))]
        else:
            f = pool[p][int(rng.integers(len(pool[p])))]
        failures += type_at(A, f) != type_at_rank_oracle(A, f)
    seconds = time.perf_counter() - t0
    passed = failures == 0 and seconds < 300
    record(2, passed, f"10000 random (A, f), n <= 8, p in {{2,3,5}}: {failures} failures", seconds)
    assert passed


def test_criterion_3_exact_moment():
    t0 = time.perf_counter()
    G = realize(parse_module_type("t:1", 2))
    values = {n: exact_moment(n, UNIFORM2, G) for n in (1, 2, 3)}
    ok = all(values[n] == 1 - Fraction(1, 2**n) for n in values)
    counts = [
        sur_count_from_matrix(MatFp(np.array(bits).reshape(2, 2), 2), G)
        for bits in np.ndindex(2, 2, 2, 2)
    ]
    ok16 = Fraction(sum(counts), 16) == Fraction(3, 4)
    seconds = time.perf_counter() - t0
    passed = ok and ok16
    shown = ", ".join(f"n={n}: {v}" for n, v in values.items())
    record(3, passed, f"{shown}; 16-matrix enumeration gives {sum(counts)}/16", seconds)
    assert passed


def test_criterion_4_moment_decay():
    t0 = time.perf_counter()
    G_exact = realize(parse_module_type("t:1", 2))
    feasible = [n for n in range(1, 10) if 2 ** (n * n) <= 10**6]
    exact = {n: exact_moment(n, SKEWED2, G_exact) for n in feasible}
    gaps = [abs(exact[n] - 1) for n in feasible]
    decreasing = all(a > b for a, b in zip(gaps, gaps[1:]))
    cells = []
    for text in ("t:1", "t:2", "t+1:1"):
        cfg = ExperimentConfig(
            mode="moment", dist=SKEWED2, n_values=(4, 8, 12, 16), num_samples=100_000,
            master_seed=MASTER_SEED, moment_module=parse_module_type(text, 2),
        )
        for r in run_moment_experiment(cfg).results:
            z = (r["estimate"] - 1) / r["std_error"]
            cells.append((text, r["n"], r["estimate"], r["std_error"], abs(z) <= 4))
    seconds = time.perf_counter() - t0
    inside = sum(c[4] for c in cells)
    passed = decreasing and inside == len(cells) and seconds < 600
    exact_txt = ", ".join(f"n={n}: {float(exact[n]):.4f}" for n in feasible)
    worst = max(cells, key=lambda c: abs(c[2] - 1) / c[3])
    record(
        4,
        passed,
        f"|E_n - 1| strictly decreasing: {decreasing} (exact {exact_txt}); "
        f"{inside}/{len(cells)} sampled cells within 4 sigma of 1; worst {worst[0]} n={worst[1]}: "
        f"{worst[2]:.4f} +- {worst[3]:.4f}",
        seconds,
    )
    for c in cells:
        print(f"    G={c[0]:<6} n={c[1]:<3} estimate={c[2]:.5f} se={c[3]:.5f} within4sigma={c[4]}")
    assert passed


def test_criterion_5_measure_identities():
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for p in (2, 3):
        for deg in (1, 2):
            f = irreducibles(p, deg)[0]
            for j in range(6):
                parts = [mu(f, lam) for lam in partitions_of(j)]
                v = nu(f, j)
                diff = abs(sum(m.value for m in parts) - v.value)
                bound = sum(m.truncation_error_bound for m in parts) + v.truncation_error_bound
                ok &= diff <= bound
                worst = max(worst, diff)
            ok &= abs(sum(nu(f, j).value for j in range(41)) - 1) < 1e-6
    seconds = time.perf_counter() - t0
    record(5, ok, f"sum mu = nu for j <= 5 (max gap {worst:.2e}, within bounds); sum_(j<=40) nu within 1e-6 of 1", seconds)
    assert ok


def test_criterion_6_distributional_convergence():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        mode="convergence", dist=UNIFORM2, n_values=(4, 8, 10, 12), targets=(T,),
        num_samples=50_000, master_seed=MASTER_SEED, max_size=4,
    )
    res = {r["n"]: r for r in run_convergence_experiment(cfg).results}
    p_empty = res[10]["empirical"]["0"]
    tv = [res[n]["tv_distance"] for n in (4, 8, 12)]
    ok_empty = abs(p_empty - 0.28879) < 0.01
    ok_dec = tv[0] > tv[1] > tv[2]
    ok_12 = tv[2] < 0.02
    seconds = time.perf_counter() - t0
    passed = ok_empty and ok_dec and ok_12 and seconds < 600
    record(
        6,
        passed,
        f"P(lambda=0) at n=10: {p_empty:.4f}; TV n=4,8,12: {tv[0]:.4f}, {tv[1]:.4f}, {tv[2]:.4f} "
        f"(decreasing {ok_dec}, n=12 below 0.02 {ok_12}); escaped at n=12: {res[12]['escaped_mass']:.4f}",
        seconds,
    )
    assert passed


def test_criterion_7_asymptotic_independence():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        mode="multiplicity", dist=UNIFORM2, n_values=(12,), targets=(T, T1),
        num_samples=50_000, master_seed=MASTER_SEED, max_j=4,
    )
    r = run_multiplicity_experiment(cfg).results[0]
    seconds = time.perf_counter() - t0
    passed = r["tv_distance"] < 0.02 and seconds < 600
    record(
        7,
        passed,
        f"targets (t, t+1), n=12: TV to nu_t x nu_(t+1) = {r['tv_distance']:.4f}; "
        f"TV to product of empirical marginals = {r['independence_tv']:.4f}",
        seconds,
    )
    assert passed


def test_criterion_8_structural_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(MASTER_SEED + 8)
    failures = {"cayley-hamilton": 0, "divisibility": 0, "conjugation": 0, "rcf": 0, "factor": 0}
    for _ in range(10_000):
        p = int(rng.choice([2, 3, 5]))
        n = int(rng.integers(1, 7))
        A = MatFp(rng.integers(0, p, (n, n)), p)
        g = charpoly(A)
        if np.any(mat_poly_eval(g, A).data):
            failures["cayley-hamilton"] += 1
        inv = char_invariant_factors(A).factors
        if any(divrem(big, small)[1] != Poly.zero(p) for big, small in zip(inv, inv[1:])):
            failures["divisibility"] += 1
        P = random_invertible(n, p, rng)
        B = inverse(P) @ A @ P
        fs = factor(g)
        if any(type_at(A, f) != type_at(B, f) for f, _ in fs):
            failures["conjugation"] += 1
        R, _ = rcf(A)
        if rcf(R)[0] != R or not is_similar(A, R) or rcf(B)[0] != R:
            failures["rcf"] += 1
        if poly_product([f**e for f, e in fs], p) != g:
            failures["factor"] += 1
    seconds = time.perf_counter() - t0
    passed = not any(failures.values()) and seconds < 300
    record(8, passed, f"10000 random matrices, n <= 6, p in {{2,3,5}}: failures {failures}", seconds)
    assert passed


def test_criterion_9_reproducibility():
    t0 = time.perf_counter()
    configs = [
        ExperimentConfig(mode="convergence", dist=UNIFORM2, n_values=(4, 7), targets=(T, T1),
                         num_samples=3000, master_seed=MASTER_SEED, chunk_size=256),
        ExperimentConfig(mode="multiplicity", dist=SKEWED2, n_values=(6,), targets=(T, T1, irreducibles(2, 2)[0]),
                         num_samples=3000, master_seed=MASTER_SEED, chunk_size=256),
        ExperimentConfig(mode="moment", dist=SKEWED2, n_values=(3, 9), num_samples=3000,
                         master_seed=MASTER_SEED, chunk_size=256, moment_module=parse_module_type("t:2", 2)),
    ]
    identical = []
    for cfg in configs:
        reports = {w: run_experiment(cfg, workers=w) for w in (1, 2, 8)}
        blobs = {(r.to_json(), r.to_csv()) for r in reports.values()}
        identical.append(len(blobs) == 1)
    seconds = time.perf_counter() - t0
    passed = all(identical)
    record(9, passed, f"JSON and CSV byte-identical with 1, 2 and 8 workers for {sum(identical)}/3 modes", seconds)
    assert passed
