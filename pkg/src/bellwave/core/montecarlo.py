"""Monte Carlo reproduction of the analytic correlations.

Two estimators run over the same partitioned random streams:

* ``SIGNED_WEIGHT`` draws emissions (branch and relative phase) and
  accumulates, per port pair, the detection-rule terms evaluated at the
  drawn phase. These quasi-weights can be negative.
* ``OUTCOME_SAMPLING`` draws one +/-1 outcome per side from the
  phase-averaged joint distribution and counts coincidences.

Event ``i`` belongs to partition ``i mod n_partitions``. Every partition owns
independent Philox substreams derived from ``(seed, partition)``; all
settings reuse the same draws. Partition results are merged in partition
order, so a record depends on ``(seed, n_partitions, chunk_size)`` and never
on the number of worker threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .estimators import (
    ALL_PORT_PAIRS,
    CorrelationEstimate,
    CorrelationMethod,
    PortPair,
    apply_coefficient_rule,
    bell_correlation,
    expand_product,
    intensity_terms,
)
from .optics import AnalyzerSetting, Port, Side
from .source_model import EmissionBatch, EmissionEvent, sample_emissions
from ..utils.helpers import iter_chunks
from ..utils.logger import get_logger


logger = get_logger()

PAIR_KEYS: Tuple[str, ...] = tuple(pair.key for pair in ALL_PORT_PAIRS)  # nn, np, pn, pp
PAIR_SIGNS = np.array([pair.outcome_product for pair in ALL_PORT_PAIRS], dtype=float)
SINGLES_KEYS = ("A_n", "A_p", "B_n", "B_p")
WEIGHT_SUM_TOLERANCE = 1e-12
BEAT_FREE_TOLERANCE = 1e-12


class SimulationError(RuntimeError):
    """Raised when a run cannot complete; no partial record is returned."""


class SettingNotFoundError(KeyError):
    """Raised when a setting is looked up in a record that does not contain it."""


class EstimatorKind(str, Enum):
    SIGNED_WEIGHT = "signed_weight"
    OUTCOME_SAMPLING = "outcome_sampling"


# Stream indices inside a partition.
_BRANCH_STREAM, _PHASE_STREAM, _OUTCOME_A_STREAM, _OUTCOME_B_STREAM = range(4)


class PartitionStreams(NamedTuple):
    branch: np.random.Generator
    phase: np.random.Generator
    outcome_a: np.random.Generator
    outcome_b: np.random.Generator


def partition_streams(seed: int, partition: int) -> PartitionStreams:
    """Counter-based substreams for one partition, keyed by ``(seed, partition, stream)``."""
    return PartitionStreams(*(
        np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(partition, k))))
        for k in (_BRANCH_STREAM, _PHASE_STREAM, _OUTCOME_A_STREAM, _OUTCOME_B_STREAM)
    ))


class RunConfig(BaseModel):
    """Parameters of one Monte Carlo run."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_events: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    n_partitions: int = Field(default=1, ge=1)
    estimator: EstimatorKind = EstimatorKind.OUTCOME_SAMPLING
    settings: Tuple[AnalyzerSetting, ...] = Field(min_length=1)
    n_workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=262_144, ge=1)
    debug_checks: bool = False

    @field_validator("settings", mode="before")
    @classmethod
    def _coerce_settings(cls, value: Any) -> Tuple[AnalyzerSetting, ...]:
        coerced = []
        for item in value:
            if isinstance(item, AnalyzerSetting):
                coerced.append(item)
            else:
                theta1, theta2 = item
                coerced.append(AnalyzerSetting(float(theta1), float(theta2)))
        return tuple(coerced)

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.n_events % self.n_partitions:
            raise ValueError(
                f"n_events ({self.n_events}) must be divisible by n_partitions ({self.n_partitions})"
            )
        labels = [s.label() for s in self.settings]
        if len(set(labels)) != len(labels):
            raise ValueError("settings contain duplicates after angle canonicalization")
        return self

    def hash_payload(self) -> Dict[str, Any]:
        """Fields that determine the output; worker count is excluded."""
        return {
            "n_events": self.n_events,
            "seed": self.seed,
            "n_partitions": self.n_partitions,
            "estimator": self.estimator.value,
            "settings": [[s.theta1, s.theta2] for s in self.settings],
            "chunk_size": self.chunk_size,
        }


@dataclass
class SettingTally:
    """Accumulated statistics of one setting.

    ``coincidences`` and ``weight_sums`` follow ``PAIR_KEYS``; ``singles``
    follows ``SINGLES_KEYS`` (counts, or weight marginals for signed weights).
    ``combination_mean`` and ``combination_m2`` track the per-event
    nn + pp - np - pn value (mean and sum of squared deviations).
    """

    setting: AnalyzerSetting
    n_events: int = 0
    coincidences: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    weight_sums: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=float))
    singles: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=float))
    same_side: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    combination_mean: float = 0.0
    combination_m2: float = 0.0

    def add_combination(self, values: np.ndarray) -> None:
        n = int(values.shape[0])
        if n == 0:
            return
        mean = float(np.mean(values))
        m2 = float(np.sum((values - mean) ** 2))
        self._merge_moments(n, mean, m2)

    def _merge_moments(self, n_b: int, mean_b: float, m2_b: float) -> None:
        n_a = self.n_events
        total = n_a + n_b
        delta = mean_b - self.combination_mean
        self.combination_mean += delta * n_b / total
        self.combination_m2 += m2_b + delta * delta * n_a * n_b / total
        self.n_events = total

    def merge(self, other: "SettingTally") -> "SettingTally":
        """Combine two tallies of the same setting; the left operand goes first."""
        merged = SettingTally(
            setting=self.setting,
            n_events=self.n_events,
            coincidences=self.coincidences + other.coincidences,
            weight_sums=self.weight_sums + other.weight_sums,
            singles=self.singles + other.singles,
            same_side=self.same_side + other.same_side,
            combination_mean=self.combination_mean,
            combination_m2=self.combination_m2,
        )
        if other.n_events:
            merged._merge_moments(other.n_events, other.combination_mean, other.combination_m2)
        return merged

    def to_dict(self, estimator: EstimatorKind) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "theta1": self.setting.theta1,
            "theta2": self.setting.theta2,
            "n_events": self.n_events,
            "singles": dict(zip(SINGLES_KEYS, self.singles.tolist())),
        }
        if estimator is EstimatorKind.OUTCOME_SAMPLING:
            data["coincidences"] = dict(zip(PAIR_KEYS, self.coincidences.tolist()))
            data["same_side_coincidences"] = {"A": int(self.same_side[0]), "B": int(self.same_side[1])}
        else:
            data["weight_sums"] = dict(zip(PAIR_KEYS, self.weight_sums.tolist()))
            data["combination_mean"] = self.combination_mean
            data["combination_m2"] = self.combination_m2
        return data


@dataclass(frozen=True)
class CountsRecord:
    """Merged result of a run, one tally per setting."""

    estimator: EstimatorKind
    seed: int
    n_partitions: int
    n_events: int
    tallies: Dict[str, SettingTally]

    @property
    def settings(self) -> List[AnalyzerSetting]:
        return [t.setting for t in self.tallies.values()]

    def tally(self, setting: AnalyzerSetting) -> SettingTally:
        try:
            return self.tallies[setting.label()]
        except KeyError:
            raise SettingNotFoundError(
                f"Setting ({setting.theta1}, {setting.theta2}) is not in this record"
            ) from None

    def __contains__(self, setting: AnalyzerSetting) -> bool:
        return setting.label() in self.tallies

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator.value,
            "seed": self.seed,
            "n_partitions": self.n_partitions,
            "n_events": self.n_events,
            "settings": [t.to_dict(self.estimator) for t in self.tallies.values()],
        }


class SignedWeights(NamedTuple):
    """Per-event quasi-weights of the four port pairs."""

    nn: float
    np: float
    pn: float
    pp: float

    @property
    def total(self) -> float:
        return self.nn + self.np + self.pn + self.pp


def signed_weight_event(event: EmissionEvent, setting: AnalyzerSetting) -> SignedWeights:
    """Detection-rule terms of one event, evaluated at its own relative phase.

    For every port pair the two intensity expressions of the event's branch
    are multiplied out and the two-photon terms are kept. Terms linear in
    cos(relative phase) are replaced with zero; the beat product keeps
    cos^2(relative phase) instead of its average.
    """
    cos_phase = math.cos(event.relative_phase)
    weights = []
    for pair in ALL_PORT_PAIRS:
        factors = [
            intensity_terms(Side.A, pair.side_a_port, event.branch, setting.theta1),
            intensity_terms(Side.B, pair.side_b_port, event.branch, setting.theta2),
        ]
        kept = apply_coefficient_rule(expand_product(factors), len(factors))
        weights.append(sum(t.evaluate(cos_phase) for t in kept if t.phase_power % 2 == 0))
    return SignedWeights(*weights)


def signed_weights_batch(batch: EmissionBatch, setting: AnalyzerSetting) -> np.ndarray:
    """Closed form of ``signed_weight_event`` over a batch.

    Args:
        batch: Emission batch
        setting: Analyzer setting

    Returns:
        Array of shape ``(n, 4)`` in ``PAIR_KEYS`` order; every row sums to 1
    """
    c1, s1 = math.cos(setting.theta1) ** 2, math.sin(setting.theta1) ** 2
    c2, s2 = math.cos(setting.theta2) ** 2, math.sin(setting.theta2) ** 2
    h1 = batch.photon_in_1h
    # photon on 1H pairs with 2V, photon on 1V pairs with 2H
    a_n, a_p = np.where(h1, c1, s1), np.where(h1, s1, c1)
    b_n, b_p = np.where(h1, s2, c2), np.where(h1, c2, s2)
    beat = (
        0.5 * math.sin(2.0 * setting.theta1) * math.sin(2.0 * setting.theta2)
        * np.cos(batch.relative_phase) ** 2
    )
    return np.stack(
        [a_n * b_n - beat, a_n * b_p + beat, a_p * b_n + beat, a_p * b_p - beat], axis=1
    )


def outcomes_from_uniforms(
    setting: AnalyzerSetting, u_a: np.ndarray, u_b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Map uniforms to +/-1 outcomes with P(n,p) = P(p,n) = cos^2(delta)/2.

    Side A is n when ``u_a < 1/2``; side B is opposite to A when
    ``u_b < cos^2(delta)``. Side A therefore never depends on theta2.
    """
    a = np.where(np.asarray(u_a) < 0.5, 1, -1).astype(np.int8)
    opposite = np.asarray(u_b) < math.cos(setting.delta) ** 2
    b = np.where(opposite, -a, a).astype(np.int8)
    return a, b


def sample_outcome_pair(setting: AnalyzerSetting, rng: np.random.Generator) -> Tuple[int, int]:
    """Draw one (a, b) outcome pair; n -> +1, p -> -1."""
    u_a, u_b = rng.random(), rng.random()
    a, b = outcomes_from_uniforms(setting, np.array([u_a]), np.array([u_b]))
    return int(a[0]), int(b[0])


def sample_outcome_pairs(
    setting: AnalyzerSetting, rng: np.random.Generator, n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` outcome pairs: all side-A uniforms first, then all side-B uniforms."""
    u_a = rng.random(n)
    u_b = rng.random(n)
    return outcomes_from_uniforms(setting, u_a, u_b)


def _tally_weights(tally: SettingTally, weights: np.ndarray, debug_checks: bool) -> None:
    if debug_checks:
        totals = weights.sum(axis=1)
        worst = float(np.max(np.abs(totals - 1.0))) if totals.size else 0.0
        if worst > WEIGHT_SUM_TOLERANCE:
            raise SimulationError(f"Per-event weight sum deviates from 1 by {worst:.3e}")
    sums = weights.sum(axis=0)
    tally.weight_sums += sums
    tally.singles += np.array([sums[0] + sums[1], sums[2] + sums[3], sums[0] + sums[2], sums[1] + sums[3]])
    tally.add_combination(weights @ PAIR_SIGNS)


def _tally_outcomes(tally: SettingTally, a: np.ndarray, b: np.ndarray) -> None:
    a_n, b_n = a == 1, b == 1
    a_p, b_p = ~a_n, ~b_n
    tally.coincidences += np.array([
        np.count_nonzero(a_n & b_n),
        np.count_nonzero(a_n & b_p),
        np.count_nonzero(a_p & b_n),
        np.count_nonzero(a_p & b_p),
    ], dtype=np.int64)
    tally.singles += np.array([np.count_nonzero(x) for x in (a_n, a_p, b_n, b_p)], dtype=float)
    # one port per side per event: n and p never fire together
    tally.same_side += np.array([np.count_nonzero(a_n & a_p), np.count_nonzero(b_n & b_p)], dtype=np.int64)
    tally.add_combination((a * b).astype(float))


def _run_partition(config: RunConfig, partition: int, n_local: int) -> Dict[str, SettingTally]:
    streams = partition_streams(config.seed, partition)
    tallies = {s.label(): SettingTally(setting=s) for s in config.settings}

    for start, size in iter_chunks(n_local, config.chunk_size):
        if config.estimator is EstimatorKind.SIGNED_WEIGHT:
            batch = sample_emissions(streams.branch, size, phase_rng=streams.phase)
            for setting in config.settings:
                weights = signed_weights_batch(batch, setting)
                _tally_weights(tallies[setting.label()], weights, config.debug_checks)
        else:
            u_a = streams.outcome_a.random(size)
            u_b = streams.outcome_b.random(size)
            for setting in config.settings:
                a, b = outcomes_from_uniforms(setting, u_a, u_b)
                _tally_outcomes(tallies[setting.label()], a, b)
        logger.debug(f"partition {partition}: {start + size}/{n_local} events")

    return tallies


def run_experiment(config: RunConfig) -> CountsRecord:
    """Run every setting of ``config`` over the shared partitioned streams.

    Raises:
        SimulationError: On memory exhaustion or a failed debug check; nothing is returned
    """
    n_local = config.n_events // config.n_partitions
    logger.info(
        f"Running {config.estimator.value}: {config.n_events} events x {len(config.settings)} "
        f"setting(s), {config.n_partitions} partition(s), {config.n_workers} worker(s)"
    )

    def work(partition: int) -> Dict[str, SettingTally]:
        return _run_partition(config, partition, n_local)

    try:
        if config.n_workers == 1:
            results = [work(p) for p in range(config.n_partitions)]
        else:
            with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
                results = list(pool.map(work, range(config.n_partitions)))
    except MemoryError as exc:
        raise SimulationError("Out of memory; partial results discarded. Lower chunk_size") from exc

    merged = {
        label: reduce(SettingTally.merge, (r[label] for r in results))
        for label in results[0]
    }
    return CountsRecord(
        estimator=config.estimator,
        seed=config.seed,
        n_partitions=config.n_partitions,
        n_events=config.n_events,
        tallies=merged,
    )


def agresti_coull_std_error(k: int, n: int) -> float:
    """Std error of E = 2p - 1 with the Agresti-Coull adjusted proportion of ``k`` in ``n``."""
    n_adj = n + 4
    p_adj = (k + 2) / n_adj
    return 2.0 * math.sqrt(p_adj * (1.0 - p_adj) / n_adj)


def empirical_correlation(record: CountsRecord, setting: AnalyzerSetting) -> CorrelationEstimate:
    """Correlation estimate of one setting.

    Signed weights: mean of nn + pp - np - pn with the sample std error.
    Outcome sampling: (N_nn + N_pp - N_np - N_pn) / N with a binomial std error.

    When either analyzer sits on an H/V axis the beat weight vanishes and
    nn + pp - np - pn takes the same value in every event, so its sample
    spread is pure rounding noise. Such settings report the Agresti-Coull
    error an outcome-sampling run of the same size would carry at that
    correlation instead.

    Raises:
        SettingNotFoundError: If the record does not contain ``setting``
    """
    tally = record.tally(setting)
    n = tally.n_events
    if record.estimator is EstimatorKind.OUTCOME_SAMPLING:
        same = int(tally.coincidences[0] + tally.coincidences[3])
        value = (2 * same - n) / n
        std_error = agresti_coull_std_error(same, n)
    else:
        value = tally.combination_mean
        if abs(math.sin(2.0 * setting.theta1) * math.sin(2.0 * setting.theta2)) <= BEAT_FREE_TOLERANCE:
            same = round(0.5 * (1.0 + value) * n)
            std_error = agresti_coull_std_error(same, n)
        else:
            variance = tally.combination_m2 / (n - 1) if n > 1 else 0.0
            std_error = math.sqrt(max(variance, 0.0) / n)
    return CorrelationEstimate(value, std_error, n, CorrelationMethod.MONTE_CARLO)


def singles_rate(record: CountsRecord, setting: AnalyzerSetting, side: Side, port: Port) -> float:
    """Fraction of events in which ``port`` on ``side`` fired."""
    tally = record.tally(setting)
    key = f"{Side(side).value}_{Port(port).value}"
    return float(tally.singles[SINGLES_KEYS.index(key)]) / tally.n_events


def same_side_rate(record: CountsRecord, setting: AnalyzerSetting, side: Side) -> float:
    """Fraction of events in which both ports of ``side`` fired; 0 for outcome sampling."""
    tally = record.tally(setting)
    return float(tally.same_side[0 if Side(side) is Side.A else 1]) / tally.n_events


def pair_probability(record: CountsRecord, setting: AnalyzerSetting, pair: PortPair) -> float:
    """Empirical joint probability (coincidences) or mean quasi-weight of a port pair."""
    tally = record.tally(setting)
    index = PAIR_KEYS.index(pair.key)
    source = tally.coincidences if record.estimator is EstimatorKind.OUTCOME_SAMPLING else tally.weight_sums
    return float(source[index]) / tally.n_events


@dataclass(frozen=True)
class ConvergencePoint:
    n_events: int
    estimate: CorrelationEstimate
    analytic: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate.value - self.analytic)


def convergence_study(
    setting: AnalyzerSetting,
    event_counts: Sequence[int],
    seed: int,
    estimator: EstimatorKind = EstimatorKind.OUTCOME_SAMPLING,
    n_partitions: int = 1,
    chunk_size: Optional[int] = None,
) -> List[ConvergencePoint]:
    """Estimate one setting at increasing event counts; std errors shrink as 1/sqrt(N)."""
    analytic = bell_correlation(setting)
    points = []
    for n_events in event_counts:
        extra = {"chunk_size": chunk_size} if chunk_size else {}
        config = RunConfig(
            n_events=n_events,
            seed=seed,
            n_partitions=n_partitions,
            estimator=estimator,
            settings=(setting,),
            **extra,
        )
        estimate = empirical_correlation(run_experiment(config), setting)
        points.append(ConvergencePoint(n_events, estimate, analytic))
        logger.info(
            f"N={n_events}: E={estimate.value:.6f} +/- {estimate.std_error:.2e} (analytic {analytic:.6f})"
        )
    return points
