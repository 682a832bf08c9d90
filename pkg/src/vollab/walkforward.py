"""Per-prediction incremental batch learning.

Each out-of-sample prediction is the outcome of one self-contained task:
take the W sequenced observations whose targets end just before the test
date, score every grid state by expanding-window validation inside that
batch, refit on the whole batch with the winner, predict one step, and
discard all state.  Tasks share nothing, so they may run in any order
(or concurrently) with identical results.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError, VollabError
from .features import (
    FeatureMatrix,
    SequencedDataset,
    add_uniform_noise,
    apply_scaler,
    fit_scaler,
    log_diff,
    sequence,
)
from .gbdt import GbdtParams, fit_gbdt, predict_gbdt
from .grids import ParamState, enumerate_grid, naive_predict
from .net import NetConfig, predict as net_predict, train as net_train
from .svr import SvrParams, fit_svr, predict_svr

MIN_VALIDATION_SEED = 10  # sequenced observations in the initial training slice
WINDOWS = (63, 126, 252)


def derive_seed(root_seed: int, *parts) -> int:
    """Stable 63-bit seed from the root seed and any hashable context."""
    text = ":".join([str(root_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class ForecastRecord:
    date: dt.date
    pred_logdiff: float
    actual_logdiff: float
    pred_level: float
    actual_level: float
    model: str
    window: int
    params: str
    val_mae: float

    CSV_HEADER = "date,actual_logdiff,pred_logdiff,actual_level,pred_level,model,window,params,val_mae"

    def csv_row(self) -> str:
        return ",".join([
            self.date.isoformat(),
            repr(self.actual_logdiff),
            repr(self.pred_logdiff),
            repr(self.actual_level),
            repr(self.pred_level),
            self.model,
            str(self.window),
            self.params,
            repr(self.val_mae),
        ])


@dataclass(frozen=True)
class BatchTask:
    kind: str
    window: int
    test_date: dt.date
    batch: SequencedDataset  # W rows, targets dated <= test_date - 1 step
    predict_block: np.ndarray  # s x m feature block ending one step before test_date
    actual_logdiff: float
    prev_level: float
    actual_level: float
    grid: tuple[ParamState, ...]
    seed: int
    model_options: dict | None = None


class _Regressor:
    """Uniform fit/predict facade over the four model kinds."""

    def __init__(self, kind: str, state: ParamState, seed: int, options: dict | None):
        self.kind = kind
        self.state = state
        self.seed = seed
        self.options = options or {}
        self._model = None
        self._scaler = None
        self._config: NetConfig | None = None
        self.internal_val_mae = math.nan

    def fit(self, train: SequencedDataset) -> None:
        if self.kind == "naive":
            return
        self._scaler = fit_scaler(train)
        scaled = apply_scaler(self._scaler, train)
        noised = add_uniform_noise(scaled, seed=derive_seed(self.seed, "noise", len(train)))
        if self.kind == "svr":
            params = SvrParams(
                kernel=self.state.get("kernel"),
                C=1.0,
                gamma=self.state.get("gamma"),
                epsilon=self.state.get("epsilon"),
            )
            self._model = fit_svr(noised.flat(), noised.targets, params)
        elif self.kind == "gbdt":
            self._model = fit_gbdt(
                noised.flat(),
                noised.targets,
                GbdtParams(
                    leaves=self.state.get("leaves"),
                    min_data=min(self.state.get("min_data"), max(1, len(train) // 3)),
                    max_depth=self.state.get("max_depth"),
                    feature_fraction=self.state.get("feature_fraction"),
                    learning_rate=self.options.get("gbdt", {}).get("learning_rate", 0.005),
                    rounds=self.options.get("gbdt", {}).get("rounds", 200),
                    seed=derive_seed(self.seed, "gbdt"),
                ),
            )
        elif self.kind == "attn_gru":
            overrides = dict(self.options.get("net", {}))
            overrides["seed"] = derive_seed(self.seed, "net") % (2**31)
            self._config = NetConfig(**overrides)
            result = net_train(self._config, (noised.blocks, noised.targets))
            self._model = result.params
            self.internal_val_mae = result.best_val_mae
        else:
            raise VollabError(f"unknown regressor kind {self.kind!r}")

    def predict(self, block: np.ndarray) -> float:
        if self.kind == "naive":
            return naive_predict()
        scaled = (block - self._scaler.mean) / self._scaler.std
        if self.kind == "svr":
            return float(predict_svr(self._model, scaled.ravel()))
        if self.kind == "gbdt":
            return float(predict_gbdt(self._model, scaled.ravel()))
        return float(net_predict(self._model, scaled[None, :, :], self._config)[0])


def validate_params(batch: SequencedDataset, kind: str, state: ParamState,
                    seed: int, options: dict | None = None) -> float:
    """Expanding-window validation MAE of one parameter state inside a batch.

    Starts from the first MIN_VALIDATION_SEED sequenced observations, then
    repeatedly fits, predicts the next observation, and grows the window by
    one until the batch is exhausted.
    """
    n = len(batch)
    if n <= MIN_VALIDATION_SEED:
        raise VollabError(
            f"batch of {n} sequenced observations is too small to validate "
            f"(need > {MIN_VALIDATION_SEED})"
        )
    errors = []
    for v in range(MIN_VALIDATION_SEED, n):
        reg = _Regressor(kind, state, derive_seed(seed, "val", v), options)
        reg.fit(batch.slice(0, v))
        pred = reg.predict(batch.blocks[v])
        errors.append(abs(pred - batch.targets[v]))
    return float(np.mean(errors))


def run_batch(task: BatchTask) -> ForecastRecord:
    """Select, refit, predict once, and drop all state."""
    if not task.grid:
        raise VollabError("task grid is empty")
    if len(task.grid) == 1:
        best_state, best_mae = task.grid[0], math.nan
    else:
        best_state, best_mae = None, math.inf
        for state in task.grid:
            try:
                mae = validate_params(task.batch, task.kind, state, task.seed,
                                      task.model_options)
            except Exception as exc:
                raise type(exc)(
                    f"{exc} [task kind={task.kind} window={task.window} "
                    f"date={task.test_date}]"
                ) from exc
            if mae < best_mae:
                best_state, best_mae = state, mae
    reg = _Regressor(task.kind, best_state, derive_seed(task.seed, "refit"),
                     task.model_options)
    try:
        reg.fit(task.batch)
        pred = reg.predict(task.predict_block)
    except Exception as exc:
        raise type(exc)(
            f"{exc} [task kind={task.kind} window={task.window} date={task.test_date}]"
        ) from exc
    if math.isnan(best_mae) and not math.isnan(reg.internal_val_mae):
        best_mae = reg.internal_val_mae
    return ForecastRecord(
        date=task.test_date,
        pred_logdiff=pred,
        actual_logdiff=task.actual_logdiff,
        pred_level=task.prev_level * math.exp(pred),
        actual_level=task.actual_level,
        model=task.kind,
        window=task.window,
        params=best_state.to_text(),
        val_mae=best_mae,
    )


@dataclass(frozen=True)
class ExperimentData:
    """Aligned target levels and engineered features sharing one date index."""

    dates: tuple[dt.date, ...]
    levels: np.ndarray  # target index level per date, positive
    features: FeatureMatrix

    def __post_init__(self):
        if len(self.dates) != len(self.features) or len(self.levels) != len(self.dates):
            raise VollabError("ExperimentData components must share one date index")


def build_tasks(
    data: ExperimentData,
    kind: str,
    window: int,
    horizon: int = 63,
    s: int = 5,
    root_seed: int = 0,
    grid=None,
    model_options: dict | None = None,
) -> list[BatchTask]:
    n = len(data.dates)
    need = window + s + horizon
    if n < need:
        raise DataError(
            f"need at least {need} aligned observations for window={window}, "
            f"horizon={horizon}, s={s}; got {n}"
        )
    diffs = log_diff(data.levels)  # diffs[i] spans dates i -> i+1
    ds = sequence(data.features, diffs, s=s)  # row ending at t targets diffs[t]
    grid = tuple(grid) if grid is not None else tuple(enumerate_grid(kind))
    # sequenced row r has target date index (s + r); test date index t uses
    # batch rows with target index <= t-1, i.e. rows <= t-1-s
    tasks = []
    for t in range(n - horizon, n):
        last_row = t - 1 - s  # inclusive
        first_row = last_row - window + 1
        batch = ds.slice(first_row, last_row + 1)
        tasks.append(
            BatchTask(
                kind=kind,
                window=window,
                test_date=data.dates[t],
                batch=batch,
                predict_block=ds.blocks[last_row + 1],
                actual_logdiff=float(diffs[t - 1]),
                prev_level=float(data.levels[t - 1]),
                actual_level=float(data.levels[t]),
                grid=grid,
                seed=derive_seed(root_seed, kind, window, data.dates[t].isoformat()),
                model_options=model_options,
            )
        )
    return tasks


def run_experiment(
    data: ExperimentData,
    kind: str,
    window: int,
    horizon: int = 63,
    s: int = 5,
    root_seed: int = 0,
    grid=None,
    model_options: dict | None = None,
    threads: int = 1,
) -> list[ForecastRecord]:
    """One independent BatchTask per test date, records in date order."""
    tasks = build_tasks(data, kind, window, horizon, s, root_seed, grid, model_options)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_batch, tasks))
    return [run_batch(t) for t in tasks]


def write_records_csv(records: list[ForecastRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(ForecastRecord.CSV_HEADER + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")


def read_records_csv(path) -> list[ForecastRecord]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != ForecastRecord.CSV_HEADER:
        raise VollabError(f"{path}: not a forecast record file")
    out = []
    for line in lines[1:]:
        (date, actual_ld, pred_ld, actual_lv, pred_lv, model, window, params,
         val_mae) = line.split(",")
        out.append(ForecastRecord(
            date=dt.date.fromisoformat(date),
            pred_logdiff=float(pred_ld),
            actual_logdiff=float(actual_ld),
            pred_level=float(pred_lv),
            actual_level=float(actual_lv),
            model=model,
            window=int(window),
            params=params,
            val_mae=float(val_mae),
        ))
    return out
