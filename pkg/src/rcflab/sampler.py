"""Epsilon-balanced entry distributions, seeded sampling and experiments.

Randomness layout: the samples for matrix size ``n`` are cut into fixed
chunks of ``chunk_size`` consecutive sample indices; chunk ``c`` draws from
``SeedSequence(master_seed, spawn_key=(n, c))``.  Workers receive whole
chunks and partial results are folded in chunk order, so reports do not
depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConsistencyError, DistributionError, DomainError, ResourceGuardError
from .fp import IrreduciblePoly, _val, check_prime, format_poly, parse_irreducible, _mul
from .matrix import MatFp
from .measures import product_measure, product_nu
from .moduletype import ModuleType, format_module_type, parse_module_type
from .modules import FiniteModule, MobiusTerm, Submodule, exact_moment, mobius_terms, realize, sur_counts_batch
from .partitions import Partition, enumerate_partitions, format_partition
from .snf import char_invariant_factors_raw, partition_at

MODES = ("convergence", "multiplicity", "moment")
SUM_TOL = 1e-12


def _as_prob(x) -> Fraction | float:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError:
            raise DistributionError(f"cannot parse probability {x!r}") from None
    return float(x)


@dataclass(frozen=True)
class EntryDist:
    """Law of a single F_p entry with ``max_a P(a) <= 1 - epsilon``."""

    p: int
    pmf: tuple  # Fraction or float per residue 0..p-1
    epsilon: Fraction | float

    def cdf(self) -> np.ndarray:
        return np.cumsum([float(x) for x in self.pmf])

    def support(self) -> list[int]:
        return [a for a, w in enumerate(self.pmf) if w > 0]

    def to_json(self) -> dict[str, Any]:
        return {"p": self.p, "pmf": [str(x) for x in self.pmf], "epsilon": str(self.epsilon)}


def validate_dist(pmf: Sequence | Mapping, epsilon=None, p: int | None = None) -> EntryDist:
    """Build an :class:`EntryDist`, rejecting anything not epsilon-balanced.

    ``pmf`` is a length-p sequence or a ``{residue: probability}`` mapping;
    probabilities may be Fractions, ints, floats or strings like ``"3/4"``.
    ``epsilon`` defaults to ``1 - max pmf``.
    """
    if isinstance(pmf, Mapping):
        if p is None:
            raise DistributionError("a pmf given as a mapping needs an explicit p")
        probs = [_as_prob(0)] * p
        for a, w in pmf.items():
            a = int(a)
            if not 0 <= a < p:
                raise DistributionError(f"residue {a} outside F_{p}")
            probs[a] = _as_prob(w)
    else:
        probs = [_as_prob(w) for w in pmf]
        if p is None:
            p = len(probs)
    try:
        check_prime(p)
    except DomainError as exc:
        raise DistributionError(str(exc)) from None
    if len(probs) != p:
        raise DistributionError(f"pmf has {len(probs)} entries, expected p = {p}")
    if any(w < 0 for w in probs):
        raise DistributionError("pmf has a negative probability")
    total = sum(probs)
    exact = all(isinstance(w, Fraction) for w in probs)
    if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > SUM_TOL):
        raise DistributionError(f"pmf sums to {total}, not 1")
    top = max(probs)
    if epsilon is None:
        epsilon = 1 - top
    else:
        epsilon = _as_prob(epsilon)
    if not (0 < epsilon <= 1 - Fraction(1, p) + (0 if isinstance(epsilon, Fraction) else SUM_TOL)):
        raise DistributionError(f"epsilon = {epsilon} outside (0, 1 - 1/p] for p = {p}")
    if top > 1 - epsilon + (0 if exact and isinstance(epsilon, Fraction) else SUM_TOL):
        raise DistributionError(f"pmf too concentrated: max mass {top} > 1 - epsilon = {1 - epsilon}")
    return EntryDist(p, tuple(probs), epsilon)


@dataclass(frozen=True)
class EntryGrid:
    """Position-dependent laws, tiled periodically over the matrix.

    Entry ``(i, j)`` follows ``dists[i % R][j % C]``; entries stay independent.
    """

    dists: tuple[tuple[EntryDist, ...], ...]

    def __post_init__(self):
        ps = {d.p for row in self.dists for d in row}
        if len(ps) != 1 or not self.dists or len({len(r) for r in self.dists}) != 1:
            raise DistributionError("grid needs a nonempty rectangle of laws over one prime")

    @property
    def p(self) -> int:
        return self.dists[0][0].p

    @property
    def epsilon(self):
        return min(d.epsilon for row in self.dists for d in row)

    def cdf_grid(self, n: int) -> np.ndarray:
        R, C = len(self.dists), len(self.dists[0])
        return np.array([[self.dists[i % R][j % C].cdf() for j in range(n)] for i in range(n)])

    def to_json(self) -> dict[str, Any]:
        return {"position_pmfs": [[[str(x) for x in d.pmf] for d in row] for row in self.dists]}


def _draw(rng: np.random.Generator, cdf: np.ndarray, count: int, n: int) -> np.ndarray:
    u = rng.random((count, n, n))
    if cdf.ndim == 1:
        out = np.searchsorted(cdf, u, side="right")
        return np.minimum(out, len(cdf) - 1)
    out = (u[..., None] >= cdf[None, :, :, :-1]).sum(axis=-1)
    return out


def _cdf_for(dist: EntryDist | EntryGrid, n: int) -> np.ndarray:
    return dist.cdf() if isinstance(dist, EntryDist) else dist.cdf_grid(n)


def sample_matrix(n: int, dist: EntryDist | EntryGrid, seed: int) -> MatFp:
    """An n x n matrix with independent entries drawn from ``dist``."""
    if n < 1:
        raise DomainError("matrix size must be positive")
    rng = np.random.default_rng(seed)
    return MatFp(_draw(rng, _cdf_for(dist, n), 1, n)[0], dist.p)


def chunk_rng(master_seed: int, n: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(n, chunk)))


def sample_batch(n: int, dist: EntryDist | EntryGrid, master_seed: int, chunk: int, count: int) -> np.ndarray:
    """The matrices of one chunk, shape ``(count, n, n)``."""
    return _draw(chunk_rng(master_seed, n, chunk), _cdf_for(dist, n), count, n)


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    dist: EntryDist | EntryGrid
    n_values: tuple[int, ...]
    targets: tuple[IrreduciblePoly, ...] = ()
    num_samples: int = 10_000
    master_seed: int = 0
    max_size: int = 4
    max_j: int = 6
    moment_module: ModuleType | None = None
    chunk_size: int = 1024
    sigma_band: float = 4.0
    exact_bound: int = 10**6
    max_work: int = 10**9

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.num_samples < 1:
            raise DomainError("num_samples must be at least 1")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise DomainError("n_values must be nonempty positive sizes")
        if len(set(self.targets)) != len(self.targets):
            raise DomainError("targets must be pairwise distinct")
        if any(f.p != self.p for f in self.targets):
            raise DomainError("targets and entry law must share the prime")
        if self.mode in ("convergence", "multiplicity") and not self.targets:
            raise DomainError(f"{self.mode} mode needs at least one target polynomial")
        if self.mode == "moment" and self.moment_module is None:
            raise DomainError("moment mode needs moment_module")
        if self.chunk_size < 1:
            raise DomainError("chunk_size must be positive")
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")

    @property
    def p(self) -> int:
        return self.dist.p

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "mode": self.mode,
            "p": self.p,
            "n_values": list(self.n_values),
            "targets": [format_poly(f) for f in self.targets],
            "num_samples": self.num_samples,
            "master_seed": self.master_seed,
            "max_size": self.max_size,
            "max_j": self.max_j,
            "moment_module": None if self.moment_module is None else format_module_type(self.moment_module),
            "chunk_size": self.chunk_size,
            "sigma_band": self.sigma_band,
            "exact_bound": self.exact_bound,
        }
        if isinstance(self.dist, EntryDist):
            out["pmf"] = [str(x) for x in self.dist.pmf]
            out["epsilon"] = str(self.dist.epsilon)
        else:
            out.update(self.dist.to_json())
        return out


def config_from_dict(d: Mapping[str, Any]) -> ExperimentConfig:
    """Build a config from the JSON schema documented in the README."""
    known = {
        "mode", "p", "pmf", "epsilon", "position_pmfs", "n_values", "targets", "num_samples",
        "master_seed", "max_size", "max_j", "moment_module", "chunk_size", "sigma_band",
        "exact_bound", "max_work",
    }
    unknown = set(d) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    p = int(d["p"])
    if "position_pmfs" in d:
        dist: EntryDist | EntryGrid = EntryGrid(
            tuple(tuple(validate_dist(c, None, p) for c in row) for row in d["position_pmfs"])
        )
    else:
        pmf = d.get("pmf") or [Fraction(1, p)] * p
        dist = validate_dist(pmf, d.get("epsilon"), p)
    module = d.get("moment_module")
    kwargs = {k: d[k] for k in ("num_samples", "master_seed", "max_size", "max_j", "chunk_size", "exact_bound", "max_work") if k in d}
    if "sigma_band" in d:
        kwargs["sigma_band"] = float(d["sigma_band"])
    return ExperimentConfig(
        mode=d.get("mode", "convergence"),
        dist=dist,
        n_values=tuple(int(n) for n in d["n_values"]),
        targets=tuple(parse_irreducible(str(f), p) for f in d.get("targets", [])),
        moment_module=None if module is None else parse_module_type(module, p),
        **{k: int(v) if k != "sigma_band" else v for k, v in kwargs.items()},
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


@dataclass
class ExperimentReport:
    """Per-n results plus the echoed config; a pure function of the config."""

    config: dict[str, Any]
    results: list[dict[str, Any]] = field(default_factory=list)

    @property
    def mode(self) -> str:
        return self.config["mode"]

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "results": self.results}, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """One row per (n, outcome)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.mode == "moment":
            w.writerow(["n", "outcome", "estimate", "std_error", "exact"])
            for r in self.results:
                w.writerow([r["n"], "moment", repr(r["estimate"]), repr(r["std_error"]), r["exact"] or ""])
            return buf.getvalue()
        w.writerow(["n", "outcome", "count", "empirical", "theoretical"])
        for r in self.results:
            for key, count in r["histogram"].items():
                w.writerow([r["n"], key, count, repr(r["empirical"][key]), repr(r["theoretical"][key])])
            w.writerow([r["n"], "escaped", r["escaped"], repr(r["escaped_mass"]), repr(r["theoretical_escaped"])])
        return buf.getvalue()


def tv_distance(empirical: Mapping[Any, float], theoretical: Mapping[Any, float], emp_escaped: float, theo_escaped: float) -> float:
    """Half the L1 distance on the truncated support plus the lumped escape cell."""
    keys = list(dict.fromkeys([*empirical, *theoretical]))  # fixed order: float sums must not depend on hashing
    s = sum(abs(empirical.get(k, 0.0) - theoretical.get(k, 0.0)) for k in keys)
    return 0.5 * (s + abs(emp_escaped - theo_escaped))


# ---------------------------------------------------------------------------
# per-chunk workers (plain data in, plain data out)


def _stat_chunk(args) -> Counter:
    mode, n, chunk, count, master_seed, p, cdf, targets = args
    mats = _draw(chunk_rng(master_seed, n, chunk), cdf, count, n)
    tallies: Counter = Counter()
    for a in mats:
        factors = char_invariant_factors_raw(a, p)
        parts = tuple(partition_at(factors, IrreduciblePoly._certified(f, p), p) for f in targets)
        if mode == "convergence":
            tallies[tuple(lam.parts for lam in parts)] += 1
            continue
        sizes = tuple(lam.size() for lam in parts)
        char = [1]
        for g in factors:
            char = _mul(char, g, p)
        for f, e in zip(targets, sizes):
            if _val(char, list(f), p) != e:
                raise ConsistencyError(f"|type_at| = {e} disagrees with the charpoly valuation of {f}")
        if sum(e * (len(f) - 1) for f, e in zip(targets, sizes)) > n:
            raise ConsistencyError("multiplicities exceed the matrix size")
        tallies[sizes] += 1
    return tallies


def _moment_chunk(args) -> tuple[int, int]:
    n, chunk, count, master_seed, p, cdf, g_action, terms_data = args
    mats = _draw(chunk_rng(master_seed, n, chunk), cdf, count, n)
    G = FiniteModule(MatFp(g_action, p))
    terms = [MobiusTerm(m, Submodule(b), a) for m, b, a in terms_data]
    surs = sur_counts_batch(mats, G, terms)
    return int(sum(int(x) for x in surs)), int(sum(int(x) * int(x) for x in surs))


def _chunks(config: ExperimentConfig, n: int) -> list[tuple[int, int]]:
    N, C = config.num_samples, config.chunk_size
    return [(c, min(C, N - c * C)) for c in range((N + C - 1) // C)]


def _run_jobs(fn, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _guard(config: ExperimentConfig) -> None:
    work = sum(n**3 for n in config.n_values) * config.num_samples
    if work > config.max_work:
        raise ResourceGuardError(f"experiment needs ~{work} elementary steps, above max_work = {config.max_work}")


# ---------------------------------------------------------------------------
# experiments


def _key_str(key: tuple) -> str:
    return "|".join(format_partition(Partition(k)) if isinstance(k, tuple) else str(k) for k in key)


def _independence_tv(tallies: Counter, total: int, support: list[tuple]) -> float:
    r = len(support[0]) if support else 0
    marg = [Counter() for _ in range(r)]
    for key, c in tallies.items():
        for i, k in enumerate(key):
            marg[i][k] += c
    emp = {k: tallies.get(k, 0) / total for k in support}
    prod = {}
    for k in support:
        v = 1.0
        for i, ki in enumerate(k):
            v *= marg[i][ki] / total
        prod[k] = v
    return tv_distance(emp, prod, 1 - sum(emp.values()), 1 - sum(prod.values()))


def _histogram_report(config: ExperimentConfig, workers: int) -> ExperimentReport:
    _guard(config)
    p = config.p
    targets = [list(f.coeffs) for f in config.targets]
    r = len(targets)
    if config.mode == "convergence":
        atoms = [lam.parts for lam in enumerate_partitions(config.max_size)]
    else:
        atoms = list(range(config.max_j + 1))
    support = [()]
    for _ in range(r):
        support = [s + (a,) for s in support for a in atoms]
    theo = {}
    for key in support:
        if config.mode == "convergence":
            theo[key] = product_measure(config.targets, [Partition(k) for k in key])
        else:
            theo[key] = product_nu(config.targets, list(key))
    theo_total = sum(v.value for v in theo.values())
    report = ExperimentReport(config.to_json())
    for n in config.n_values:
        cdf = _cdf_for(config.dist, n)
        jobs = [(config.mode, n, c, cnt, config.master_seed, p, cdf, targets) for c, cnt in _chunks(config, n)]
        tallies: Counter = Counter()
        for part in _run_jobs(_stat_chunk, jobs, workers):
            tallies.update(part)
        N = config.num_samples
        hist = {_key_str(k): tallies.get(k, 0) for k in support}
        escaped = N - sum(hist.values())
        emp = {k: c / N for k, c in hist.items()}
        th = {_key_str(k): theo[k].value for k in support}
        th_bounds = {_key_str(k): theo[k].truncation_error_bound for k in support}
        entry = {
            "n": n,
            "num_samples": N,
            "histogram": hist,
            "escaped": escaped,
            "empirical": emp,
            "escaped_mass": escaped / N,
            "theoretical": th,
            "theoretical_bounds": th_bounds,
            "theoretical_escaped": 1.0 - theo_total,
            "tv_distance": tv_distance(emp, th, escaped / N, 1.0 - theo_total),
        }
        if r >= 2:
            entry["independence_tv"] = _independence_tv(tallies, N, support)
        report.results.append(entry)
    return report


def run_convergence_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Empirical law of ``(lambda^(f_1), ..., lambda^(f_r))`` against the product of mu."""
    if config.mode != "convergence":
        raise DomainError("run_convergence_experiment needs mode = 'convergence'")
    return _histogram_report(config, workers)


def run_multiplicity_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Empirical law of ``(|lambda^(f_1)|, ...)`` against the product of nu.

    Every sample also checks ``|lambda^(f)| = val_f(charpoly(A))``.
    """
    if config.mode != "multiplicity":
        raise DomainError("run_multiplicity_experiment needs mode = 'multiplicity'")
    return _histogram_report(config, workers)


def run_moment_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Monte Carlo ``E #Sur(Cok(tI - A), G)`` with standard errors.

    When exhaustive enumeration fits ``exact_bound`` and the law is i.i.d.,
    the exact value is attached and ``exact_check`` records whether the
    estimate lies within ``sigma_band`` standard errors of it.
    """
    if config.mode != "moment":
        raise DomainError("run_moment_experiment needs mode = 'moment'")
    _guard(config)
    p = config.p
    G = realize(config.moment_module)
    terms = mobius_terms(G) if G.dim else []
    terms_data = [(t.mu, t.submodule.basis, t.action) for t in terms]
    g_action = G.t_action.as_int()
    report = ExperimentReport(config.to_json())
    N = config.num_samples
    for n in config.n_values:
        cdf = _cdf_for(config.dist, n)
        jobs = [(n, c, cnt, config.master_seed, p, cdf, g_action, terms_data) for c, cnt in _chunks(config, n)]
        S = SS = 0
        for s, ss in _run_jobs(_moment_chunk, jobs, workers):
            S += s
            SS += ss
        mean = Fraction(S, N)
        var = (Fraction(SS) - Fraction(S * S, N)) / (N - 1) if N > 1 else Fraction(0)
        se = math.sqrt(var / N)
        entry: dict[str, Any] = {
            "n": n,
            "num_samples": N,
            "sum": S,
            "sum_sq": SS,
            "estimate": float(mean),
            "std_error": se,
            "exact": None,
            "exact_value": None,
            "exact_check": None,
        }
        feasible = isinstance(config.dist, EntryDist) and len(config.dist.support()) ** (n * n) <= config.exact_bound
        if feasible:
            ex = exact_moment(n, config.dist, G, bound=config.exact_bound)
            diff = abs(mean - ex)
            entry["exact"] = str(ex)
            entry["exact_value"] = float(ex)
            entry["exact_check"] = bool(diff <= config.sigma_band * se) if se > 0 else bool(diff == 0)
        report.results.append(entry)
    return report


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    runner = {
        "convergence": run_convergence_experiment,
        "multiplicity": run_multiplicity_experiment,
        "moment": run_moment_experiment,
    }[config.mode]
    return runner(config, workers)
