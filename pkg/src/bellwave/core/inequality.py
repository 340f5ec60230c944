"""CHSH values of shared +/-1 datasets versus independently measured setting pairs.

Four columns a, a', b, b' that coexist row by row satisfy
ab + ab' + a'b - a'b' = +/-2 on every row, so their CHSH value can never
exceed 2. Correlations taken from four independent runs, one per setting
pair, are not tied together that way and reach 2 sqrt 2.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .estimators import CorrelationEstimate, analytic_estimate, bell_correlation
from .montecarlo import EstimatorKind, RunConfig, empirical_correlation, run_experiment, sample_outcome_pairs
from .optics import AnalyzerSetting
from ..tools.validation import CHSH_COLUMNS, ValidationError, validate_outcome_columns
from ..utils.logger import get_logger


logger = get_logger()

LOCAL_BOUND = 2.0
QUANTUM_BOUND = 2.0 * math.sqrt(2.0)
BOUND_TOLERANCE = 1e-12


class DatasetError(ValidationError):
    """Malformed +/-1 data; ``row`` and ``column`` locate the offending cell when known."""

    def __init__(
        self,
        message: str,
        errors: Optional[List[str]] = None,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        super().__init__(message, errors)
        self.row = row
        self.column = column


class Provenance(str, Enum):
    SHARED_RUN = "shared_run"
    INDEPENDENT_PAIRS = "independent_pairs"
    EXTERNAL = "external"


class BoundContext(str, Enum):
    """Which bound applies to a report: 2 for shared rows, 2 sqrt 2 for independent pairs."""

    LOCAL = "local"
    QUANTUM = "quantum"

    @property
    def value_limit(self) -> float:
        return LOCAL_BOUND if self is BoundContext.LOCAL else QUANTUM_BOUND


class ChshAngles(NamedTuple):
    """Analyzer angles a, a' (side A) and b, b' (side B), radians."""

    a: float
    a_prime: float
    b: float
    b_prime: float

    def pairs(self) -> Dict[str, AnalyzerSetting]:
        return {
            "a,b": AnalyzerSetting(self.a, self.b),
            "a,b_prime": AnalyzerSetting(self.a, self.b_prime),
            "a_prime,b": AnalyzerSetting(self.a_prime, self.b),
            "a_prime,b_prime": AnalyzerSetting(self.a_prime, self.b_prime),
        }


STANDARD_ANGLES = ChshAngles(0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)

PAIR_LABELS = ("a,b", "a,b_prime", "a_prime,b", "a_prime,b_prime")


@dataclass
class OutcomeDataset:
    """Named +/-1 columns."""

    columns: Dict[str, np.ndarray]
    provenance: Provenance = Provenance.EXTERNAL

    def __post_init__(self) -> None:
        self.provenance = Provenance(self.provenance)
        is_valid, errors = validate_outcome_columns(
            self.columns,
            require_equal_lengths=self.provenance is not Provenance.INDEPENDENT_PAIRS,
        )
        if not is_valid:
            raise DatasetError("Invalid outcome dataset", errors)
        self.columns = {name: np.asarray(values, dtype=np.int8) for name, values in self.columns.items()}

    def __len__(self) -> int:
        return len(next(iter(self.columns.values())))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DatasetError(f"Missing column '{name}'", column=name) from None


@dataclass(frozen=True)
class ChshReport:
    """Correlations of the four setting pairs and the resulting CHSH value.

    ``canonical_value`` is |E(a,b) + E(a,b') + E(a',b) - E(a',b')|;
    ``chsh_value`` is the largest of the four placements of the minus sign.
    """

    correlations: Dict[str, float]
    canonical_value: float
    chsh_value: float
    bound: BoundContext
    provenance: Provenance
    n_events: int = 0
    std_errors: Dict[str, float] = field(default_factory=dict)

    @property
    def bound_satisfied(self) -> bool:
        """Whether the local bound 2 holds."""
        return self.chsh_value <= LOCAL_BOUND + BOUND_TOLERANCE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "correlations": dict(self.correlations),
            "std_errors": dict(self.std_errors),
            "canonical_value": self.canonical_value,
            "chsh_value": self.chsh_value,
            "bound": self.bound.value,
            "bound_limit": self.bound.value_limit,
            "bound_satisfied": self.bound_satisfied,
            "provenance": self.provenance.value,
            "n_events": self.n_events,
        }


def chsh_arrangements(e_ab: float, e_abp: float, e_apb: float, e_apbp: float) -> Tuple[float, ...]:
    """|sum| for each placement of the single minus sign; the first is the canonical one."""
    return (
        abs(e_ab + e_abp + e_apb - e_apbp),
        abs(e_ab + e_abp - e_apb + e_apbp),
        abs(e_ab - e_abp + e_apb + e_apbp),
        abs(-e_ab + e_abp + e_apb + e_apbp),
    )


def _report(
    correlations: Mapping[str, float],
    bound: BoundContext,
    provenance: Provenance,
    n_events: int = 0,
    std_errors: Optional[Mapping[str, float]] = None,
) -> ChshReport:
    for label, value in correlations.items():
        if abs(value) > 1.0 + BOUND_TOLERANCE:
            raise ValueError(f"Correlation {label} = {value} outside [-1, 1]")
    values = chsh_arrangements(*(correlations[label] for label in PAIR_LABELS))
    return ChshReport(
        correlations=dict(correlations),
        canonical_value=values[0],
        chsh_value=max(values),
        bound=bound,
        provenance=provenance,
        n_events=n_events,
        std_errors=dict(std_errors or {}),
    )


def cross_correlation(x: Sequence[int], y: Sequence[int]) -> float:
    """(1/N) sum x_i y_i of two equal-length +/-1 columns.

    Args:
        x: First column
        y: Second column, same length as ``x``

    Returns:
        Row-averaged product in [-1, 1]

    Raises:
        DatasetError: On empty or mismatched columns
    """
    x_arr, y_arr = np.asarray(x), np.asarray(y)
    if x_arr.size == 0 or y_arr.size == 0:
        raise DatasetError("cross_correlation needs non-empty columns")
    if x_arr.shape != y_arr.shape:
        raise DatasetError(f"Column lengths differ: {x_arr.size} vs {y_arr.size}")
    total = int(np.sum(x_arr.astype(np.int64) * y_arr.astype(np.int64)))
    return total / x_arr.size


def row_identity_values(dataset: OutcomeDataset) -> np.ndarray:
    """Per-row ab + ab' + a'b - a'b'; every entry is -2 or +2."""
    a, ap, b, bp = (dataset.column(name).astype(np.int64) for name in CHSH_COLUMNS)
    return a * b + a * bp + ap * b - ap * bp


def chsh_from_shared(dataset: OutcomeDataset) -> ChshReport:
    """CHSH value of four coexisting columns; never above 2.

    Raises:
        DatasetError: If a column is missing or the lengths differ
    """
    present = {name: dataset.columns[name] for name in CHSH_COLUMNS if name in dataset.columns}
    is_valid, errors = validate_outcome_columns(present, required=CHSH_COLUMNS)
    if not is_valid:
        missing = [name for name in CHSH_COLUMNS if name not in present]
        raise DatasetError(
            f"Dataset is not a shared CHSH table: {errors[0]}",
            errors,
            column=missing[0] if missing else None,
        )

    a, ap, b, bp = (dataset.column(name) for name in CHSH_COLUMNS)
    correlations = {
        "a,b": cross_correlation(a, b),
        "a,b_prime": cross_correlation(a, bp),
        "a_prime,b": cross_correlation(ap, b),
        "a_prime,b_prime": cross_correlation(ap, bp),
    }
    report = _report(correlations, BoundContext.LOCAL, dataset.provenance, n_events=len(dataset))
    logger.debug(f"shared CHSH over {len(dataset)} rows: S={report.chsh_value:.6f}")
    return report


def _pair_seed(seed: int, index: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def chsh_from_independent(
    angles: ChshAngles,
    n_per_pair: int,
    seed: int,
    n_partitions: int = 1,
    n_workers: int = 1,
    chunk_size: int = 262_144,
) -> ChshReport:
    """CHSH value from four separate outcome-sampling runs, one per setting pair.

    Raises:
        pydantic.ValidationError: If the run parameters are invalid
        SimulationError: If a run fails
    """
    correlations: Dict[str, float] = {}
    std_errors: Dict[str, float] = {}
    for index, (label, setting) in enumerate(ChshAngles(*angles).pairs().items()):
        config = RunConfig(
            n_events=n_per_pair,
            seed=_pair_seed(seed, index),
            n_partitions=n_partitions,
            estimator=EstimatorKind.OUTCOME_SAMPLING,
            settings=(setting,),
            n_workers=n_workers,
            chunk_size=chunk_size,
        )
        estimate: CorrelationEstimate = empirical_correlation(run_experiment(config), setting)
        correlations[label] = estimate.value
        std_errors[label] = estimate.std_error

    report = _report(
        correlations, BoundContext.QUANTUM, Provenance.INDEPENDENT_PAIRS,
        n_events=n_per_pair, std_errors=std_errors,
    )
    logger.info(f"independent-pairs CHSH: S={report.chsh_value:.6f} ({n_per_pair} events per pair)")
    return report


def chsh_analytic(angles: ChshAngles) -> ChshReport:
    """CHSH value assembled from the closed-form Bell correlation."""
    estimates = {label: analytic_estimate(s) for label, s in ChshAngles(*angles).pairs().items()}
    return _report(
        {label: e.value for label, e in estimates.items()},
        BoundContext.QUANTUM,
        Provenance.INDEPENDENT_PAIRS,
        std_errors={label: e.std_error for label, e in estimates.items()},
    )


def generate_shared_dataset(angles: ChshAngles, n: int, seed: int) -> OutcomeDataset:
    """Simulated shared dataset: (a, b) drawn jointly at (a, b), (a', b') jointly at (a', b').

    Every row carries one value per measurement label, so the result obeys
    the row identity whatever the angles.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    angles = ChshAngles(*angles)
    columns: Dict[str, np.ndarray] = {}
    for index, (first, second, setting) in enumerate((
        ("a", "b", AnalyzerSetting(angles.a, angles.b)),
        ("a_prime", "b_prime", AnalyzerSetting(angles.a_prime, angles.b_prime)),
    )):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))
        columns[first], columns[second] = sample_outcome_pairs(setting, rng, n)
    ordered = {name: columns[name] for name in CHSH_COLUMNS}
    return OutcomeDataset(ordered, Provenance.SHARED_RUN)


@dataclass(frozen=True)
class AnnealResult:
    dataset: OutcomeDataset
    best_value: float
    accepted: int
    steps: int


_PRODUCT_PAIRS = ((0, 2), (0, 3), (1, 2), (1, 3))  # (a,b), (a,b'), (a',b), (a',b')


def anneal_shared_dataset(
    n: int,
    steps: int,
    seed: int,
    initial_temperature: float = 0.5,
    final_temperature: float = 1e-3,
) -> AnnealResult:
    """Simulated annealing over single-entry flips of four +/-1 columns, maximizing S.

    The product sums are updated incrementally in integers, so every
    visited state is scored exactly.
    """
    if n < 1 or steps < 1:
        raise ValueError("n and steps must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    data = np.where(rng.random((4, n)) < 0.5, 1, -1).astype(np.int64)
    sums = [int(np.dot(data[i], data[j])) for i, j in _PRODUCT_PAIRS]

    def score(s: Sequence[int]) -> float:
        return max(chsh_arrangements(*(v / n for v in s)))

    current = score(sums)
    best, best_data = current, data.copy()
    accepted = 0
    cooling = (final_temperature / initial_temperature) ** (1.0 / max(steps - 1, 1))
    temperature = initial_temperature

    columns = rng.integers(0, 4, size=steps)
    rows = rng.integers(0, n, size=steps)
    thresholds = rng.random(steps)
    for step in range(steps):
        col, row = int(columns[step]), int(rows[step])
        trial = list(sums)
        for k, (i, j) in enumerate(_PRODUCT_PAIRS):
            if col in (i, j):
                trial[k] -= 2 * int(data[i, row] * data[j, row])
        value = score(trial)
        if value >= current or thresholds[step] < math.exp((value - current) / temperature):
            data[col, row] = -data[col, row]
            sums, current = trial, value
            accepted += 1
            if current > best:
                best, best_data = current, data.copy()
        temperature *= cooling

    dataset = OutcomeDataset(dict(zip(CHSH_COLUMNS, best_data)), Provenance.SHARED_RUN)
    logger.info(f"annealing: best S={best:.6f} after {steps} steps ({accepted} accepted)")
    return AnnealResult(dataset, best, accepted, steps)


@dataclass(frozen=True)
class ChshSearchResult:
    angles: ChshAngles
    value: float
    grid_points: int


def search_max_chsh(grid_points: int = 16) -> ChshSearchResult:
    """Grid search of the analytic CHSH value over a, a', b, b' in [0, pi).

    With ``grid_points`` divisible by 8 the grid contains the standard angles.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    grid = np.arange(grid_points) * (math.pi / grid_points)
    table = np.array([[bell_correlation(AnalyzerSetting(t1, t2)) for t2 in grid] for t1 in grid])

    # axes: a, a', b, b'
    e_ab = table[:, None, :, None]
    e_abp = table[:, None, None, :]
    e_apb = table[None, :, :, None]
    e_apbp = table[None, :, None, :]
    values = np.max(np.stack(np.broadcast_arrays(*chsh_arrangements(e_ab, e_abp, e_apb, e_apbp))), axis=0)

    index = np.unravel_index(int(np.argmax(values)), values.shape)
    angles = ChshAngles(*(float(grid[i]) for i in index))
    best = float(values[index])
    logger.info(f"CHSH grid search ({grid_points}^4): max S={best:.12f} at {angles}")
    return ChshSearchResult(angles, best, grid_points)
