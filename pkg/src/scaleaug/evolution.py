"""Evolutionary policy search with truncation (top-k) parent selection.

Each generation every member is evaluated, the global best is tracked, and
the ``top_k`` members become parents of a fresh population of children.
Children are built by recombination followed by per-gene mutation.  The
default recombination draws each gene from a rank-weighted parent of the
whole top-k pool; ``recombination="pairwise"`` uses uniform crossover of
two random parents instead.  Evaluation goes through a callable ``Policy ->
ScaleStats``; :func:`external_evaluate` runs a user command, and
:class:`SurrogateEvaluator` is a cheap deterministic stand-in for tests.
"""
from __future__ import annotations

import json
import logging
import math
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .metric import (
    DEFAULT_EPS,
    MetricValue,
    ScaleStats,
    pareto_scale_balance,
    parse_stats,
)
from .policy import (
    GENE_CHOICES,
    GENOME_LENGTH,
    Genome,
    Policy,
    decode_genome,
    encode_policy,
    random_genome,
    serialize_policy,
    validate_genome,
)

log = logging.getLogger(__name__)

Evaluator = Callable[[Policy], ScaleStats]


RECOMBINATIONS = ("gene_pool", "pairwise")


class EvaluatorError(RuntimeError):
    pass


class SearchAbortedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 50
    top_k: int = 10
    iterations: int = 10
    mutation_rate: float = 0.05
    seed: int = 0
    parallelism: int = 1
    eps: float = DEFAULT_EPS
    recombination: str = "gene_pool"
    # parent weight in gene-pool recombination is (rank + 1) ** -rank_bias
    rank_bias: float = 0.5

    def __post_init__(self):
        if not 0 < self.top_k <= self.population_size:
            raise ValueError("need 0 < top_k <= population_size")
        if not 0 < self.mutation_rate <= 1:
            raise ValueError("mutation_rate must be in (0, 1]")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.recombination not in RECOMBINATIONS:
            raise ValueError(f"recombination must be one of {RECOMBINATIONS}")

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown search config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class EvaluationRecord:
    genome: Genome
    stats: ScaleStats | None
    metric: MetricValue
    generation: int
    error: str | None = None

    def to_json(self) -> str:
        m = self.metric
        finite = math.isfinite(m.value)
        return json.dumps({
            "generation": self.generation,
            "genome": list(self.genome),
            "value": m.value if finite else None,
            "std": m.std_component if finite else None,
            "penalty": m.penalty_component if finite else None,
            "dropped": sorted(m.dropped_scales),
            "error": self.error,
        })


@dataclass
class SearchResult:
    best_policy: Policy | None
    best_genome: Genome | None
    best_metric: MetricValue
    history: list[EvaluationRecord] = field(default_factory=list)

    def best_by_generation(self) -> list[float]:
        """Global best metric after each generation."""
        out, best = [], math.inf
        gens = sorted({r.generation for r in self.history})
        for g in gens:
            best = min([best] + [r.metric.value for r in self.history if r.generation == g])
            out.append(best)
        return out


def mutate(g: Sequence[int], rate: float, rng: np.random.Generator) -> Genome:
    """Resample each gene from its search values with probability ``rate``."""
    out = list(g)
    hits = rng.random(len(out)) < rate
    for i in np.flatnonzero(hits):
        choices = GENE_CHOICES[i]
        out[i] = int(choices[rng.integers(len(choices))])
    return tuple(out)


def crossover(a: Sequence[int], b: Sequence[int], rng: np.random.Generator) -> Genome:
    take_a = rng.random(len(a)) < 0.5
    return tuple(int(x) if t else int(y) for x, y, t in zip(a, b, take_a))


def gene_pool_recombination(parents: Sequence[Sequence[int]], weights: np.ndarray,
                            rng: np.random.Generator) -> Genome:
    """Child whose gene ``i`` is gene ``i`` of a parent drawn with ``weights``."""
    src = rng.choice(len(parents), size=len(parents[0]), p=weights)
    return tuple(int(parents[p][i]) for i, p in enumerate(src))


def _evaluate_one(genome: Genome, evaluator: Evaluator, generation: int, eps: float) -> EvaluationRecord:
    try:
        stats = evaluator(decode_genome(genome))
        metric = pareto_scale_balance(stats, eps)
    except Exception as e:  # noqa: BLE001 - a failed child must not stop the search
        log.warning("evaluation failed for generation %d: %s", generation, e)
        return EvaluationRecord(genome, None, MetricValue.failed(), generation, f"{type(e).__name__}: {e}")
    return EvaluationRecord(genome, stats, metric, generation)


def run_search(config: SearchConfig, evaluator: Evaluator,
               log_path: str | Path | None = None) -> SearchResult:
    """Search for the policy minimising the scale balance metric.

    ``config.iterations`` counts generations including the random initial
    one, so the history holds ``population_size * iterations`` records.
    Ties are broken in favour of the earlier evaluation.  A failing
    evaluation scores +inf; a generation where all fail aborts the search.
    """
    rng = np.random.default_rng(config.seed)
    population = [random_genome(rng) for _ in range(config.population_size)]
    result = SearchResult(None, None, MetricValue.failed())
    sink = open(log_path, "w") if log_path is not None else None
    pool = ThreadPoolExecutor(config.parallelism) if config.parallelism > 1 else None
    try:
        n_gen = max(config.iterations, 1)
        for gen in range(n_gen):
            population = [validate_genome(g) for g in population]
            if pool is not None:
                records = list(pool.map(lambda g: _evaluate_one(g, evaluator, gen, config.eps), population))
            else:
                records = [_evaluate_one(g, evaluator, gen, config.eps) for g in population]
            result.history.extend(records)
            if sink is not None:
                sink.writelines(r.to_json() + "\n" for r in records)
                sink.flush()
            if all(r.error is not None for r in records):
                raise SearchAbortedError(
                    f"every evaluation in generation {gen} failed; first error: {records[0].error}"
                )
            for r in records:
                if r.metric.value < result.best_metric.value:
                    result.best_metric, result.best_genome = r.metric, r.genome
            log.info("generation %d: best %.6g", gen, result.best_metric.value)
            if gen == n_gen - 1:
                break
            order = sorted(range(len(records)), key=lambda i: records[i].metric.value)
            parents = [records[i].genome for i in order[: config.top_k]]
            weights = (np.arange(len(parents)) + 1.0) ** -config.rank_bias
            weights /= weights.sum()
            population = []
            while len(population) < config.population_size:
                if config.recombination == "gene_pool":
                    child = gene_pool_recombination(parents, weights, rng)
                elif len(parents) > 1:
                    i, j = rng.choice(len(parents), size=2, replace=False)
                    child = crossover(parents[i], parents[j], rng)
                else:
                    child = parents[0]
                population.append(mutate(child, config.mutation_rate, rng))
    finally:
        if sink is not None:
            sink.close()
        if pool is not None:
            pool.shutdown()
    result.best_policy = decode_genome(result.best_genome)
    return result


# ------------------------------------------------------------ evaluators ---


def external_evaluate(policy: Policy, command: str, workdir: str | Path | None = None,
                      timeout: float | None = None) -> ScaleStats:
    """Run ``command`` with ``{policy}`` / ``{stats}`` replaced by file paths.

    The command must write a stats document to the ``{stats}`` path.
    """
    if "{policy}" not in command or "{stats}" not in command:
        raise ValueError("command template needs {policy} and {stats} placeholders")
    with tempfile.TemporaryDirectory(dir=workdir, prefix="scaleaug-eval-") as tmp:
        policy_path = Path(tmp) / "policy.json"
        stats_path = Path(tmp) / "stats.json"
        policy_path.write_text(serialize_policy(policy))
        argv = [tok.replace("{policy}", str(policy_path)).replace("{stats}", str(stats_path))
                for tok in shlex.split(command)]
        try:
            proc = subprocess.run(argv, cwd=tmp, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise EvaluatorError(f"evaluator timed out after {timeout}s") from None
        except OSError as e:
            raise EvaluatorError(f"could not run evaluator: {e}") from None
        if proc.returncode != 0:
            raise EvaluatorError(f"evaluator exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
        if not stats_path.exists():
            raise EvaluatorError("evaluator did not write a stats file")
        return parse_stats(stats_path.read_text())


class ExternalEvaluator:
    def __init__(self, command: str, workdir: str | Path | None = None, timeout: float | None = None):
        self.command, self.workdir, self.timeout = command, workdir, timeout

    def __call__(self, policy: Policy) -> ScaleStats:
        return external_evaluate(policy, self.command, self.workdir, self.timeout)


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x != y for x, y in zip(a, b))


def surrogate_stats(d: float, ap: float = 0.4) -> ScaleStats:
    """Stats whose metric is zero at ``d = 0`` and strictly increasing in ``d``."""
    return ScaleStats(
        losses={"small": 1.0 + d, "middle": 1.0, "large": 1.0 - 0.5 * d},
        ap_before={"small": ap, "middle": ap, "large": ap},
        ap_after={"small": ap * (1.0 - 0.5 * d), "middle": ap, "large": ap},
    )


@dataclass(frozen=True)
class SurrogateEvaluator:
    """Scores a policy by its normalised Hamming distance to a hidden genome."""

    hidden_target: Genome

    def __call__(self, policy: Policy) -> ScaleStats:
        return surrogate_evaluate(policy, self.hidden_target)


def surrogate_evaluate(policy: Policy, hidden_target: Sequence[int]) -> ScaleStats:
    d = hamming(encode_policy(policy), hidden_target) / GENOME_LENGTH
    return surrogate_stats(d)


def config_to_dict(config: SearchConfig) -> dict:
    return asdict(config)
