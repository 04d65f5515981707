import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from rcflab.errors import DistributionError, DomainError, ResourceGuardError
from rcflab.fp import parse_irreducible
from rcflab.moduletype import parse_module_type
from rcflab.sampler import (
    EntryGrid,
    ExperimentConfig,
    config_from_dict,
    load_config,
    run_convergence_experiment,
    run_experiment,
    run_moment_experiment,
    run_multiplicity_experiment,
    sample_batch,
    sample_matrix,
    tv_distance,
    validate_dist,
)

T = parse_irreducible("t", 2)
T1 = parse_irreducible("t+1", 2)
UNIFORM = validate_dist([Fraction(1, 2), Fraction(1, 2)])


def test_validate_examples():
    d = validate_dist({0: Fraction(1, 2), 1: Fraction(1, 2)}, Fraction(1, 2), p=2)
    assert d.epsilon == Fraction(1, 2)
    d = validate_dist({0: Fraction(3, 4), 1: Fraction(1, 4)}, Fraction(1, 4), p=2)
    assert d.pmf == (Fraction(3, 4), Fraction(1, 4))
    with pytest.raises(DistributionError, match="too concentrated"):
        validate_dist({0: 0.9, 1: 0.1}, 0.25, p=2)


@pytest.mark.parametrize(
    "pmf,eps,match",
    [
        ([Fraction(1, 2), Fraction(1, 3)], None, "sums to"),
        ([0.5, 0.5 + 1e-9], None, "sums to"),
        ([Fraction(1, 2)] * 2, Fraction(3, 4), "outside"),
        ([Fraction(1, 2)] * 2, 0, "outside"),
        ([1, 0], None, "outside"),
        ([Fraction(-1, 2), Fraction(3, 2)], None, "negative"),
        ([Fraction(1, 4)] * 4, None, "not a prime"),
    ],
)
def test_validate_diagnostics(pmf, eps, match):
    with pytest.raises(DistributionError, match=match):
        validate_dist(pmf, eps)


def test_validate_float_tolerance():
    d = validate_dist([0.1, 0.2, 0.7 - 1e-13], p=3)
    assert math.isclose(float(d.epsilon), 0.3)
    assert validate_dist(["1/3", "1/3", "1/3"]).epsilon == Fraction(2, 3)


def test_sample_matrix_deterministic():
    dist = validate_dist([Fraction(1, 5)] * 5)
    assert sample_matrix(6, dist, 42) == sample_matrix(6, dist, 42)
    assert sample_matrix(6, dist, 42) != sample_matrix(6, dist, 43)
    one = sample_matrix(1, dist, 7)
    assert one.shape == (1, 1) and 0 <= one.tolist()[0][0] < 5


@pytest.mark.parametrize("delta", [Fraction(1, 100), Fraction(1, 4)])
def test_entry_mean(delta):
    # 10^6 entries; the mean must be within 4 sigma of delta
    dist = validate_dist([1 - delta, delta])
    draws = sample_batch(10, dist, master_seed=5, chunk=0, count=10_000)
    mean = draws.mean()
    sigma = math.sqrt(float(delta * (1 - delta)) / draws.size)
    assert abs(mean - float(delta)) < 4 * sigma


def test_entry_frequencies_odd_prime():
    dist = validate_dist([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
    draws = sample_batch(10, dist, master_seed=1, chunk=3, count=5_000)
    freq = np.bincount(draws.ravel(), minlength=3) / draws.size
    for got, want in zip(freq, (0.5, 0.25, 0.25)):
        assert abs(got - want) < 4 * math.sqrt(want * (1 - want) / draws.size)


def test_entry_grid():
    a = validate_dist([Fraction(3, 4), Fraction(1, 4)])
    b = validate_dist([Fraction(1, 4), Fraction(3, 4)])
    grid = EntryGrid(((a, b), (b, a)))
    assert grid.epsilon == Fraction(1, 4)
    draws = sample_batch(8, grid, master_seed=3, chunk=0, count=4000).mean(axis=0)
    checker = np.indices((8, 8)).sum(axis=0) % 2  # 1 where law b applies
    assert abs(draws[checker == 1].mean() - 0.75) < 0.01
    assert abs(draws[checker == 0].mean() - 0.25) < 0.01
    with pytest.raises(DistributionError):
        EntryGrid(((a,), (validate_dist([Fraction(1, 3)] * 3),)))


def test_tv_distance():
    assert tv_distance({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}, 0, 0) == 0
    assert tv_distance({"a": 1.0}, {"b": 1.0}, 0, 0) == 1


def _config(**kw):
    base = dict(mode="convergence", dist=UNIFORM, n_values=(3, 5), targets=(T,), num_samples=600, master_seed=11, chunk_size=128)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(DomainError):
        _config(targets=(T, T))
    with pytest.raises(DomainError):
        _config(num_samples=0)
    with pytest.raises(DomainError):
        _config(mode="moment")
    with pytest.raises(DomainError):
        _config(mode="other")
    with pytest.raises(DomainError):
        _config(targets=(parse_irreducible("t", 3),))


def test_convergence_report_accounting():
    report = run_convergence_experiment(_config())
    for r in report.results:
        assert sum(r["histogram"].values()) + r["escaped"] == r["num_samples"]
        assert 0 <= r["tv_distance"] <= 1
        assert abs(sum(r["theoretical"].values()) + r["theoretical_escaped"] - 1) < 1e-12
    assert report.config["master_seed"] == 11


def test_single_sample_is_degenerate():
    r = run_convergence_experiment(_config(num_samples=1, n_values=(4,))).results[0]
    assert sorted(r["histogram"].values())[-1] + r["escaped"] == 1
    assert r["tv_distance"] > 0.5


def test_multiplicity_report():
    cfg = _config(mode="multiplicity", targets=(T, T1), n_values=(4,), max_j=4)
    r = run_multiplicity_experiment(cfg).results[0]
    # e_t + e_{t+1} <= 4 in every sample, so (e_t, e_{t+1}) = (4, 4) never occurs
    assert r["histogram"]["4|4"] == 0
    assert r["escaped"] == 0
    assert "independence_tv" in r


def test_wrong_runner():
    with pytest.raises(DomainError):
        run_multiplicity_experiment(_config())


def test_moment_exact_path():
    cfg = ExperimentConfig(
        mode="moment", dist=UNIFORM, n_values=(2,), num_samples=4000, master_seed=3,
        moment_module=parse_module_type("t:1", 2),
    )
    r = run_moment_experiment(cfg).results[0]
    assert r["exact"] == "3/4"
    assert r["exact_check"] is True
    assert r["std_error"] > 0


def test_moment_uniform_closed_form():
    # n in 4..10 with G = F_2[t]/(t): estimates track 1 - 2^-n
    cfg = ExperimentConfig(
        mode="moment", dist=UNIFORM, n_values=(4, 6, 8, 10), num_samples=20_000, master_seed=8,
        moment_module=parse_module_type("t:1", 2),
    )
    for r in run_moment_experiment(cfg).results:
        assert abs(r["estimate"] - (1 - 2.0 ** -r["n"])) < 4 * r["std_error"]


def test_resource_guard():
    with pytest.raises(ResourceGuardError):
        run_convergence_experiment(_config(n_values=(200,), num_samples=10**6))


def test_reproducible_across_workers():
    cfg = _config(mode="multiplicity", targets=(T, T1), chunk_size=100)
    a = run_experiment(cfg, workers=1).to_json()
    assert run_experiment(cfg, workers=2).to_json() == a
    assert run_experiment(cfg, workers=1).to_json() == a


def test_config_file_round_trip(tmp_path):
    raw = {
        "mode": "multiplicity", "p": 2, "pmf": ["3/4", "1/4"], "n_values": [3],
        "targets": ["t", "t+1"], "num_samples": 50, "master_seed": 9, "max_j": 3,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    cfg = load_config(str(path))
    assert cfg.dist.epsilon == Fraction(1, 4)
    assert config_from_dict(cfg.to_json()) == cfg
    with pytest.raises(DomainError):
        config_from_dict({**raw, "bogus": 1})


def test_csv_rows():
    report = run_convergence_experiment(_config(n_values=(3,)))
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0] == ["n", "outcome", "count", "empirical", "theoretical"]
    assert sum(int(r[2]) for r in rows[1:]) == 600


def test_convergence_matches_finite_n_law():
    # uniform A over F_2: P(type at t = lam) = (1/2;1/2)_n / |Aut lam| for |lam| <= n
    from rcflab.measures import aut_cardinality, pochhammer
    from rcflab.partitions import Partition

    n, N = 5, 20_000
    r = run_convergence_experiment(_config(n_values=(n,), num_samples=N, master_seed=21)).results[0]
    for key, freq in r["empirical"].items():
        lam = Partition(()) if key == "0" else Partition(tuple(int(x) for x in key.split("+")))
        want = pochhammer(0.5, 0.5, n) / aut_cardinality(T, lam)
        assert abs(freq - want) <= 4 * math.sqrt(want * (1 - want) / N) + 1e-12, key
