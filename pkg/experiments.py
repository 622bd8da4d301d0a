#!/usr/bin/env python3
"""
Experiment plumbing: corpus ingestion, instance generators, single runs and sweeps.

A run is fully determined by its ExperimentConfig; the seed feeds one
SeedSequence whose children drive instance generation and evaluation, so the
same config always produces the same report. Reports embed their config.
"""

import json
import os
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

import config
from bounds import (
    applicable_bounds,
    bound_satisfied,
    entropy,
    lower_bound_instance_concave,
    lower_bound_instance_general,
)
from errors import BadSpec, CorpusReadError, EmptyCorpus, OutputWriteError
from sampling import RandomSource
from slot_allocation import classify_cost_vector, load_instance, opt_cost, validate_instance
from strategies import (
    EvaluationResult,
    competitive_ratio,
    exact_expected_cost,
    fcfs_policy,
    monte_carlo_expected_cost,
    monte_carlo_stream_cost,
    optimal_stateless_value,
)
from universal_code import ucode_lengths

FREQUENCY_FAMILIES = ('uniform', 'random', 'zipf', 'geometric', 'lowerbound-general', 'lowerbound-concave')
COST_FAMILIES = ('zero-one', 'linear', 'universal', 'log2', 'random', 'concave-random')
POLICIES = ('fcfs', 'optimal-dp')
MODES = ('exact', 'mc', 'stream')

SWEEP_COLUMNS = ['family', 'n', 'policy', 'mode', 'trials', 'expected_cost', 'stderr', 'opt', 'ratio',
                 'entropy', 'bound_kind', 'bound', 'satisfied']


@dataclass(frozen=True)
class CorpusStats:
    """Symbol counts in first-occurrence order."""

    counts: Dict[object, int]
    total: int

    @property
    def alphabet_size(self):
        return len(self.counts)

    def frequencies(self):
        return tuple(self.counts.values())


def read_corpus(path, tokenization='bytes'):
    """Symbols of a corpus file: byte values, or whitespace-separated tokens."""
    if tokenization not in ('bytes', 'whitespace'):
        raise BadSpec(f"Unknown tokenization '{tokenization}' (expected bytes or whitespace)")
    try:
        with open(path, 'rb') as file:
            data = file.read()
    except FileNotFoundError:
        raise CorpusReadError(f"{path} file not found.")
    except OSError as exc:
        raise CorpusReadError(f"Could not read {path}: {exc}")
    if tokenization == 'bytes':
        return list(data)
    return data.decode('utf-8', errors='replace').split()


def ingest_corpus(path, tokenization='bytes'):
    symbols = read_corpus(path, tokenization)
    if not symbols:
        raise EmptyCorpus(f"{path} has no symbols to count.")
    counts = Counter(symbols)
    return CorpusStats(dict(counts), len(symbols))


@dataclass(frozen=True)
class InstanceSpec:
    """
    Generator spec: a frequency family with its parameters plus a cost family.

    Text form is "family[:key=value,...]", e.g. "zipf:s=1.2,n=100,costs=log2".
    """

    family: str
    n: int
    s: float = 1.0
    r: float = 0.5
    k: int = 1
    eps: float = 0.01
    costs: str = 'linear'

    def __post_init__(self):
        if self.family not in FREQUENCY_FAMILIES:
            raise BadSpec(f"Unknown family '{self.family}' (expected one of {', '.join(FREQUENCY_FAMILIES)})")
        if self.costs not in COST_FAMILIES:
            raise BadSpec(f"Unknown cost family '{self.costs}' (expected one of {', '.join(COST_FAMILIES)})")
        if self.n < 1:
            raise BadSpec(f"n must be at least 1, got {self.n}")
        if self.family == 'geometric' and not self.r > 0:
            raise BadSpec(f"Geometric ratio must be positive, got {self.r}")
        if self.eps <= 0:
            raise BadSpec(f"eps must be positive, got {self.eps}")

    @classmethod
    def parse(cls, text, **defaults):
        family, _, rest = text.partition(':')
        values = dict(defaults)
        for pair in filter(None, rest.split(',')):
            key, sep, raw = pair.partition('=')
            key = key.strip().lower()
            if not sep or key not in ('n', 's', 'r', 'k', 'eps', 'costs'):
                raise BadSpec(f"Cannot read '{pair}' in spec '{text}'")
            try:
                values[key] = raw.strip() if key == 'costs' else (int(raw) if key in ('n', 'k') else float(raw))
            except ValueError:
                raise BadSpec(f"Bad value for {key} in spec '{text}'")
        if 'n' not in values:
            raise BadSpec(f"Spec '{text}' needs n")
        return cls(family.strip(), **values)

    def label(self):
        if self.family == 'zipf':
            return f"zipf(s={self.s:g})/{self.costs}"
        if self.family == 'geometric':
            return f"geometric(r={self.r:g})/{self.costs}"
        if self.family == 'lowerbound-general':
            return f"lowerbound-general(K={self.k},eps={self.eps:g})"
        if self.family == 'lowerbound-concave':
            return f"lowerbound-concave(eps={self.eps:g})"
        return f"{self.family}/{self.costs}"


def _frequencies(spec, rng):
    n = spec.n
    ranks = np.arange(1, n + 1, dtype=np.float64)
    if spec.family == 'uniform':
        return [1] * n
    if spec.family == 'random':
        # (0, 1]
        return (1.0 - rng.random(n)).tolist()
    if spec.family == 'zipf':
        return (1.0 / ranks ** spec.s).tolist()
    return (spec.r ** (ranks - 1)).tolist()


def _costs(spec, rng):
    n = spec.n
    if spec.costs == 'zero-one':
        k = min(max(spec.k, 0), n)
        return [0] * k + [1] * (n - k)
    if spec.costs == 'linear':
        return list(range(n))
    if spec.costs == 'universal':
        return [int(length) for length in ucode_lengths(n)]
    if spec.costs == 'log2':
        return np.log2(np.arange(1, n + 1, dtype=np.float64)).tolist()
    if spec.costs == 'random':
        return np.sort(rng.random(n)).tolist()
    # concave-random: cumulative sums of non-increasing increments
    steps = np.sort(rng.random(max(n - 1, 0)))[::-1]
    return np.concatenate(([0.0], np.cumsum(steps))).tolist()


def gen_instance(spec, rng):
    """Build the instance a spec describes; lower-bound families fix their own costs."""
    if spec.family == 'lowerbound-general':
        if not 0 < spec.k < spec.n:
            raise BadSpec(f"Need 0 < K < n, got K={spec.k}, n={spec.n}")
        return lower_bound_instance_general(spec.k, spec.n, spec.eps)
    if spec.family == 'lowerbound-concave':
        if spec.n < 2:
            raise BadSpec(f"Need n >= 2, got {spec.n}")
        return lower_bound_instance_concave(spec.n, spec.eps)
    return validate_instance(_frequencies(spec, rng), _costs(spec, rng), name=spec.label())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on. Exactly one instance source must be set."""

    instance_path: Optional[str] = None
    spec: Optional[InstanceSpec] = None
    corpus: Optional[str] = None
    tokenization: str = 'bytes'
    corpus_costs: str = 'universal'
    policy: str = 'fcfs'
    mode: str = 'exact'
    trials: int = config.DEFAULT_TRIALS
    seed: int = config.DEFAULT_SEED
    bound: str = 'general'
    out: Optional[str] = None
    format: str = 'json'

    def __post_init__(self):
        sources = [s for s in (self.instance_path, self.spec, self.corpus) if s is not None]
        if len(sources) != 1:
            raise BadSpec("Give exactly one of an instance file, a generator spec or a corpus")
        if self.policy not in POLICIES:
            raise BadSpec(f"Unknown policy '{self.policy}' (expected one of {', '.join(POLICIES)})")
        if self.mode not in MODES:
            raise BadSpec(f"Unknown mode '{self.mode}' (expected one of {', '.join(MODES)})")
        if self.format not in ('json', 'csv'):
            raise BadSpec(f"Unknown format '{self.format}'")
        if self.trials < 1:
            raise BadSpec("trials must be at least 1")

    def to_dict(self):
        return asdict(self)


def make_policy(name, inst):
    if name == 'fcfs':
        return fcfs_policy()
    if name == 'optimal-dp':
        return optimal_stateless_value(inst)[1]
    raise BadSpec(f"Unknown policy '{name}'")


def evaluate(inst, policy_name, mode, trials, rng, progress=False):
    """Expected cost of a named policy under a named evaluation mode."""
    if policy_name == 'optimal-dp' and mode == 'exact':
        value, _ = optimal_stateless_value(inst)
        return EvaluationResult(value, method='exact')
    policy = make_policy(policy_name, inst)
    if mode == 'exact':
        return exact_expected_cost(inst, policy)
    if mode == 'mc':
        return monte_carlo_expected_cost(inst, policy, trials=trials, rng=rng, progress=progress)
    return monte_carlo_stream_cost(inst, policy, trials=trials, rng=rng, progress=progress)


def corpus_instance(stats, costs='universal'):
    spec_costs = InstanceSpec('uniform', stats.alphabet_size, costs=costs)
    # Only deterministic cost families make sense for a corpus
    return validate_instance(stats.frequencies(), _costs(spec_costs, None), name=f"corpus/{costs}")


def _instance_for(cfg, rng):
    if cfg.instance_path is not None:
        inst = load_instance(cfg.instance_path)
        print(f"Loaded instance with n={inst.n} from {cfg.instance_path}", file=sys.stderr)
        return inst
    if cfg.spec is not None:
        return gen_instance(cfg.spec, rng)
    if cfg.corpus_costs in ('random', 'concave-random'):
        raise BadSpec("Corpus instances need a deterministic cost family")
    return corpus_instance(ingest_corpus(cfg.corpus, cfg.tokenization), cfg.corpus_costs)


def _ratio_or_none(inst, result):
    if opt_cost(inst).cost == 0:
        return None
    return float(competitive_ratio(inst, result))


def run_experiment(cfg, progress=False):
    """
    Run one configuration and return its report (a dict); when cfg.out is set
    the report is also written there as JSON or a one-row CSV.
    """
    instance_rng, eval_rng = RandomSource(cfg.seed).spawn(2)
    inst = _instance_for(cfg, instance_rng)
    result = evaluate(inst, cfg.policy, cfg.mode, cfg.trials, eval_rng, progress=progress)
    opt = opt_cost(inst).cost

    bound_rows = []
    for bound in applicable_bounds(inst, cfg.bound):
        row = bound.to_dict()
        row['satisfied'] = bound_satisfied(bound, result, opt)
        bound_rows.append(row)

    report = {
        'config': cfg.to_dict(),
        'instance': {
            'name': inst.name,
            'n': inst.n,
            'entropy': entropy(inst.f),
            'cost_class': classify_cost_vector(inst.c).value,
        },
        **result.to_dict(),
        'opt': float(opt),
        'ratio': _ratio_or_none(inst, result),
        'bounds': bound_rows,
    }
    if cfg.out:
        save_report(report, cfg.out, cfg.format)
    return report


def report_row(report):
    bound = report['bounds'][0] if report['bounds'] else {}
    return {
        'family': report['instance']['name'],
        'n': report['instance']['n'],
        'policy': report['config']['policy'],
        'mode': report['method'],
        'trials': report['trials'],
        'expected_cost': report['expected_cost'],
        'stderr': report['stderr'],
        'opt': report['opt'],
        'ratio': report['ratio'],
        'entropy': report['instance']['entropy'],
        'bound_kind': bound.get('kind'),
        'bound': bound.get('value'),
        'satisfied': bound.get('satisfied'),
    }


def save_report(report, path, fmt='json'):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        if fmt == 'csv':
            pd.DataFrame([report_row(report)], columns=SWEEP_COLUMNS).to_csv(path, index=False)
        else:
            with open(path, 'w') as file:
                json.dump(report, file, indent=2)
    except OSError as exc:
        raise OutputWriteError(f"Could not write {path}: {exc}") from exc
    print(f"Saved: {path}", file=sys.stderr)


def sweep(specs, policies=('fcfs',), mode='exact', trials=config.DEFAULT_TRIALS, seed=config.DEFAULT_SEED,
          bound='general', progress=False, threads=None):
    """
    Evaluate every (spec, policy) pair and collect one row per pair.

    Each spec gets its own child seed, in grid order, and every policy runs
    on the instance that seed generates. Rows do not depend on how many
    threads run them.
    """
    specs = list(specs)
    if not specs or not policies:
        return pd.DataFrame(columns=SWEEP_COLUMNS)
    child_seeds = np.random.SeedSequence(seed).generate_state(len(specs))
    grid = [(spec, policy, int(child_seed)) for spec, child_seed in zip(specs, child_seeds) for policy in policies]

    def run_one(args):
        spec, policy, child_seed = args
        cfg = ExperimentConfig(spec=spec, policy=policy, mode=mode, trials=trials, seed=child_seed, bound=bound)
        row = report_row(run_experiment(cfg))
        row['family'] = spec.label()
        return row

    with ThreadPoolExecutor(max_workers=threads or config.THREADS) as executor:
        rows = list(tqdm(executor.map(run_one, grid), total=len(grid),
                         desc="Sweep", disable=not progress))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def save_sweep(df, path):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        df.to_csv(path, index=False)
    except OSError as exc:
        raise OutputWriteError(f"Could not write {path}: {exc}") from exc
    print(f"Saved: {path}", file=sys.stderr)

