"""Monte-Carlo benchmark driver.

Builds dictionaries and query sets from the scenario config, runs every
configured interpolation scheme and baseline on each query, scores the
estimates by squared affine-invariant distance to the noiseless model
downlink covariance, and emits the results as CSV.

Determinism: every random draw comes from a generator derived from
``(master_seed, stream tag, K, index)`` seed material, so a config produces
identical records regardless of execution order or worker count; CSV rows
are additionally sort-normalized.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import mean, median

import numpy as np

from .baselines import (
    BaselineKind,
    no_conversion,
    perfect_feedback,
    spline_convert,
)
from .channel import (
    ArrayGeometry,
    ArrayKind,
    PropagationParams,
    draw_scatterers,
    make_random_square,
    make_ula,
    model_covariance,
    place_ue,
    channel_realizations,
    sample_covariance,
)
from .config import ScenarioConfig
from .interp import Dictionary, Scheme, estimate_downlink
from .spd import Metric, SPDMatrix, distance

__all__ = [
    "QueryCase",
    "ResultRecord",
    "SummaryCell",
    "TimingStat",
    "build_dictionary",
    "build_pair",
    "emit_csv",
    "make_geometry",
    "read_csv",
    "run_benchmark",
    "strip_runtimes",
    "summarize",
    "timing_bench",
]

# Stream tags keep the geometry, dictionary, and query random streams
# disjoint; queries never depend on dictionary draws.
_TAG_GEOMETRY = 1
_TAG_DICTIONARY = 2
_TAG_QUERY = 3

CSV_HEADER = ("estimator", "metric", "K", "trial", "mse", "runtime_ns", "flags")


@dataclass(frozen=True)
class ResultRecord:
    """One estimator evaluated on one query.

    ``mse`` is the squared affine-invariant distance to the true downlink
    model covariance, absent when the estimator raised (the failure is then
    recorded in ``flags``).  ``metric`` is empty for baselines.
    """

    estimator: str
    metric: str
    dict_size: int
    trial: int
    mse: float | None
    runtime_ns: int
    flags: tuple[str, ...] = ()

    @property
    def failed(self) -> bool:
        return self.mse is None


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, *key]))


def make_geometry(config: ScenarioConfig) -> ArrayGeometry:
    """Scenario-level antenna placement (drawn once per master seed)."""
    if config.array_kind is ArrayKind.ULA:
        return make_ula(config.n_antennas, config.effective_ula_spacing)
    rng = _rng(config.master_seed, _TAG_GEOMETRY)
    return make_random_square(config.n_antennas, config.effective_square_side, rng)


def build_pair(
    config: ScenarioConfig, geometry: ArrayGeometry, rng: np.random.Generator
) -> tuple[SPDMatrix, SPDMatrix, SPDMatrix]:
    """One matched covariance pair for a freshly placed user.

    Places the UE, draws a scatterer radius and a single scatterer field,
    evaluates the model covariance at the uplink and downlink wavelengths
    from that same field, and returns the two sample covariances (independent
    fading draws) plus the noiseless model downlink covariance as ground
    truth.
    """
    reference = geometry.centroid
    ue = place_ue(rng, config.d_min, config.d_max, reference=reference)
    radius = rng.uniform(config.r_min, config.r_max)
    field = draw_scatterers(rng, ue, radius, config.n_scatterers, reference=reference)

    params_ul = PropagationParams(
        config.wavelength_ul, config.rx_power, config.noise_power
    )
    params_dl = PropagationParams(
        config.wavelength_dl, config.rx_power, config.noise_power
    )
    model_ul = model_covariance(geometry, field, params_ul)
    model_dl = model_covariance(geometry, field, params_dl)

    sample_ul = sample_covariance(
        channel_realizations(model_ul, config.n_realizations, rng)
    )
    sample_dl = sample_covariance(
        channel_realizations(model_dl, config.n_realizations, rng)
    )
    return sample_ul, sample_dl, model_dl


def build_dictionary(
    config: ScenarioConfig,
    dict_size: int,
    rng: np.random.Generator,
    geometry: ArrayGeometry | None = None,
) -> Dictionary:
    """Dictionary of ``dict_size`` independently drawn covariance pairs."""
    if dict_size < 1:
        raise ValueError("dictionary size must be >= 1")
    if geometry is None:
        geometry = make_geometry(config)
    pairs = []
    for _ in range(dict_size):
        sample_ul, sample_dl, _ = build_pair(config, geometry, rng)
        pairs.append((sample_ul, sample_dl))
    return Dictionary(pairs)


@dataclass(frozen=True)
class QueryCase:
    """Inputs one trial presents to every estimator."""

    dict_size: int
    trial: int
    query_ul: SPDMatrix
    truth_dl: SPDMatrix
    pf_seed_key: tuple[int, ...]


def _mse_to_truth(truth: SPDMatrix, estimate: SPDMatrix) -> float:
    return float(distance(Metric.AFFINE_INVARIANT, truth, estimate) ** 2)


def _run_estimators(
    config: ScenarioConfig, dictionary: Dictionary, case: QueryCase
) -> list[ResultRecord]:
    """Run every configured scheme and baseline on one query."""
    records: list[ResultRecord] = []

    def record(estimator: str, metric: str, fn) -> None:
        start = time.perf_counter_ns()
        try:
            estimate, flags = fn()
            mse = _mse_to_truth(case.truth_dl, estimate)
        except Exception as exc:  # noqa: BLE001 - failure isolation by contract
            elapsed = time.perf_counter_ns() - start
            records.append(
                ResultRecord(
                    estimator, metric, case.dict_size, case.trial,
                    None, elapsed, (f"failed:{type(exc).__name__}",),
                )
            )
            return
        elapsed = time.perf_counter_ns() - start
        records.append(
            ResultRecord(
                estimator, metric, case.dict_size, case.trial, mse, elapsed, flags
            )
        )

    for scheme, metric in config.schemes:
        def run_scheme(scheme=scheme, metric=metric):
            est = estimate_downlink(dictionary, case.query_ul, scheme, metric)
            return est.covariance, est.flags

        record(scheme.label, metric.label, run_scheme)

    for baseline in config.baselines:
        if baseline is BaselineKind.NO_CONVERSION:
            def run_baseline():
                return no_conversion(case.query_ul, config.n_antennas), ()
        elif baseline is BaselineKind.SPLINE:
            def run_baseline():
                return spline_convert(
                    case.query_ul, config.f_ul, config.f_dl, config.array_kind
                )
        else:
            def run_baseline():
                rng = np.random.default_rng(np.random.SeedSequence(list(case.pf_seed_key)))
                return perfect_feedback(case.truth_dl, config.n_realizations, rng), ()

        record(baseline.value, "", run_baseline)

    return records


def _build_case(
    config: ScenarioConfig, geometry: ArrayGeometry, dict_size: int, trial: int
) -> QueryCase:
    rng = _rng(config.master_seed, _TAG_QUERY, dict_size, trial)
    query_ul, _, truth_dl = build_pair(config, geometry, rng)
    # The perfect-feedback baseline draws its own fresh realizations; give it
    # a derived stream so estimator ordering cannot perturb anything.
    pf_key = (config.master_seed, _TAG_QUERY, dict_size, trial, 1)
    return QueryCase(dict_size, trial, query_ul, truth_dl, pf_key)


def _run_trial(args) -> list[ResultRecord]:
    config, dictionary, geometry, dict_size, trial = args
    case = _build_case(config, geometry, dict_size, trial)
    return _run_estimators(config, dictionary, case)


def run_benchmark(config: ScenarioConfig, n_workers: int = 1) -> list[ResultRecord]:
    """Run the full Monte-Carlo sweep described by ``config``.

    For each dictionary size K: build ``n_dictionary_redraws`` dictionaries
    and evaluate ``n_queries`` fresh queries against each, one record per
    configured estimator per query.  Estimator exceptions are caught and
    recorded as failed records; they never abort the sweep.  Output is
    deterministic for a fixed config, independent of ``n_workers``.
    """
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    geometry = make_geometry(config)
    tasks = []
    for dict_size in config.dict_sizes:
        for redraw in range(config.n_dictionary_redraws):
            dict_rng = _rng(config.master_seed, _TAG_DICTIONARY, dict_size, redraw)
            dictionary = build_dictionary(config, dict_size, dict_rng, geometry)
            for query in range(config.n_queries):
                trial = redraw * config.n_queries + query
                tasks.append((config, dictionary, geometry, dict_size, trial))

    records: list[ResultRecord] = []
    if n_workers == 1:
        for task in tasks:
            records.extend(_run_trial(task))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for chunk in pool.map(_run_trial, tasks):
                records.extend(chunk)
    return sorted(records, key=_record_sort_key)


def _record_sort_key(record: ResultRecord):
    return (record.estimator, record.metric, record.dict_size, record.trial)


def strip_runtimes(records: list[ResultRecord]) -> list[ResultRecord]:
    """Zero out wall-clock fields so output depends only on the config."""
    return [replace(r, runtime_ns=0) for r in records]


# ---------------------------------------------------------------------------
# CSV emission and aggregation


def _format_mse(mse: float | None) -> str:
    return "" if mse is None else repr(float(mse))


def emit_csv(records: list[ResultRecord], path: str | Path) -> None:
    """Write records as CSV, sorted by (estimator, metric, K, trial).

    Floats are written in full round-trip precision; flags are
    semicolon-joined; a failed record leaves the mse field empty.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in sorted(records, key=_record_sort_key):
                writer.writerow(
                    (
                        r.estimator,
                        r.metric,
                        r.dict_size,
                        r.trial,
                        _format_mse(r.mse),
                        r.runtime_ns,
                        ";".join(r.flags),
                    )
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path: str | Path) -> list[ResultRecord]:
    """Parse a CSV written by :func:`emit_csv` back into records."""
    path = Path(path)
    records = []
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        for row in reader:
            estimator, metric, k, trial, mse, runtime_ns, flags = row
            records.append(
                ResultRecord(
                    estimator,
                    metric,
                    int(k),
                    int(trial),
                    float(mse) if mse else None,
                    int(runtime_ns),
                    tuple(flags.split(";")) if flags else (),
                )
            )
    return records


@dataclass(frozen=True)
class SummaryCell:
    """Aggregate over the non-failed trials of one (estimator, metric, K)."""

    count: int
    mean_mse: float | None
    mean_runtime_ns: float | None


def summarize(
    records: list[ResultRecord],
) -> dict[tuple[str, str, int], SummaryCell]:
    """Per-(estimator, metric, K) mean mse and runtime over valid trials.

    Failed records are excluded from the means; a cell whose trials all
    failed is reported with count 0 and no means.
    """
    if not records:
        raise ValueError("no records to summarize")
    cells: dict[tuple[str, str, int], list[ResultRecord]] = {}
    for r in records:
        cells.setdefault((r.estimator, r.metric, r.dict_size), []).append(r)
    out = {}
    for key, group in cells.items():
        valid = [r for r in group if not r.failed]
        if not valid:
            out[key] = SummaryCell(0, None, None)
        else:
            out[key] = SummaryCell(
                len(valid),
                mean(r.mse for r in valid),
                mean(r.runtime_ns for r in valid),
            )
    return out


# ---------------------------------------------------------------------------
# Wall-clock benchmarking


@dataclass(frozen=True)
class TimingStat:
    estimator: str
    metric: str
    calls: int
    median_ns: float
    mean_ns: float


def timing_bench(
    config: ScenarioConfig, n_calls: int = 50, n_warmup: int = 3
) -> list[TimingStat]:
    """Median and mean per-call wall time of each configured estimator.

    Uses the first configured dictionary size and a single fixed query; each
    estimator is invoked ``n_warmup`` untimed plus ``n_calls`` timed times.
    """
    if n_calls < 1:
        raise ValueError("n_calls must be >= 1")
    dict_size = config.dict_sizes[0]
    geometry = make_geometry(config)
    dictionary = build_dictionary(
        config, dict_size, _rng(config.master_seed, _TAG_DICTIONARY, dict_size, 0), geometry
    )
    case = _build_case(config, geometry, dict_size, 0)

    def calls():
        for scheme, metric in config.schemes:
            yield scheme.label, metric.label, (
                lambda scheme=scheme, metric=metric: estimate_downlink(
                    dictionary, case.query_ul, scheme, metric
                )
            )
        for baseline in config.baselines:
            if baseline is BaselineKind.NO_CONVERSION:
                fn = lambda: no_conversion(case.query_ul, config.n_antennas)
            elif baseline is BaselineKind.SPLINE:
                fn = lambda: spline_convert(
                    case.query_ul, config.f_ul, config.f_dl, config.array_kind
                )
            else:
                def fn():
                    rng = np.random.default_rng(
                        np.random.SeedSequence(list(case.pf_seed_key))
                    )
                    return perfect_feedback(case.truth_dl, config.n_realizations, rng)

            yield baseline.value, "", fn

    stats = []
    for estimator, metric, fn in calls():
        for _ in range(n_warmup):
            fn()
        times = []
        for _ in range(n_calls):
            start = time.perf_counter_ns()
            fn()
            times.append(time.perf_counter_ns() - start)
        stats.append(
            TimingStat(estimator, metric, n_calls, median(times), mean(times))
        )
    return stats
