import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vollab.features import FeatureMatrix
from vollab.frames import business_days
from vollab.walkforward import ExperimentData, ForecastRecord


def make_records(pred_d, act_d, pred_l, act_l, model="m", window=63):
    start = dt.date(2021, 1, 4)
    days = business_days(start, len(pred_d))
    return [
        ForecastRecord(
            date=days[i],
            pred_logdiff=float(pred_d[i]),
            actual_logdiff=float(act_d[i]),
            pred_level=float(pred_l[i]),
            actual_level=float(act_l[i]),
            model=model,
            window=window,
            params="",
            val_mae=0.0,
        )
        for i in range(len(pred_d))
    ]


def planted_signal_data(seed=42, n=120, noise_sd=0.02, extra_noise_features=2):
    """Series whose next log-diff is 0.5x the trailing 5-day mean of one
    feature plus small noise; returns (ExperimentData, signal-free baseline
    noise sd)."""
    rng = np.random.default_rng(seed)
    f0 = rng.normal(size=n)
    noise_feats = rng.normal(size=(n, extra_noise_features))
    win_mean = np.convolve(f0, np.ones(5) / 5, mode="valid")  # mean of t-4..t
    d = noise_sd * rng.normal(size=n - 1)
    d[4:] += 0.5 * win_mean[: n - 5]
    levels = 30.0 * np.exp(np.concatenate([[0.0], np.cumsum(d)]))
    dates = business_days(dt.date(2020, 1, 1), n)
    names = ("sig",) + tuple(f"noise{i}" for i in range(extra_noise_features))
    feats = FeatureMatrix(tuple(dates), names, np.column_stack([f0, noise_feats]))
    return ExperimentData(tuple(dates), levels, feats)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
