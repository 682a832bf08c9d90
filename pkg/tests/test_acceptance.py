"""End-to-end acceptance suite.

One test per contract item, with the tolerance pinned next to each
assertion.  Oracles live in tests/oracles.py and are deliberately
independent of the library implementations they check.
"""

import json
import time

import numpy as np

from conftest import planted_signal_data
from oracles import (
    credit_vix_oracle,
    dm_oracle,
    exhaustive_leafwise_order,
    metrics_oracle,
    qp_oracle_predict,
    qp_svr_oracle,
    rv_oracle,
)
from test_creditvix import chain, random_chain
from test_metrics import (
    ACT_D, ACT_L, DM_FROZEN, E1, E2, METRICS_FROZEN, PRED_D, PRED_L,
)
from vollab.cli import main as cli_main
from vollab.creditvix import implied_variance
from vollab.errors import NumericError
from vollab.features import (
    FeatureMatrix,
    engineer,
    levels_from_logdiffs,
    log_diff,
    rolling_rv,
)
from vollab.frames import TimeSeriesFrame, generate_synthetic
from vollab.gbdt import GbdtParams, fit_gbdt, predict_gbdt
from vollab.grids import ParamState, enumerate_grid
from vollab.metrics import compute_metrics, dm_test
from vollab.net import TINY_CONFIG, forward, init_params, mae_and_grads
from vollab.svr import SvrParams, dual_objective, fit_svr, kkt_violation, predict_svr
from vollab.tree import predict_tree
from vollab.walkforward import ExperimentData, run_experiment
from conftest import make_records


def _mae(records):
    return float(np.mean([abs(r.pred_logdiff - r.actual_logdiff) for r in records]))


def test_01_gradients_match_central_differences():
    """Every parameter tensor's reverse-mode gradient agrees with central
    finite differences in extended precision to 1e-5 relative, in < 60 s."""
    start = time.monotonic()
    cfg = TINY_CONFIG
    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 5, 3))
    targets = 0.3 * rng.normal(size=4)
    params = {
        k: v.astype(np.longdouble)
        for k, v in init_params(cfg, 3, seed=11).items()
    }
    _, grads = mae_and_grads(params, x, targets, cfg, train_mode=True, seed=5)
    assert set(grads) == set(params)

    xl = x.astype(np.longdouble)
    tl = targets.astype(np.longdouble)

    def loss():
        pred, _ = forward(params, xl, cfg, train_mode=True, seed=5)
        return np.mean(np.abs(np.asarray(pred, dtype=np.longdouble) - tl))

    h = np.longdouble(1e-6)
    worst = 0.0
    for name in sorted(params):
        flat = params[name].reshape(-1)
        got = np.asarray(grads[name], dtype=np.longdouble).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss()
            flat[i] = orig - h
            down = loss()
            flat[i] = orig
            fd = (up - down) / (2 * h)
            rel = abs(got[i] - fd) / max(abs(fd), abs(got[i]), np.longdouble(1e-8))
            worst = max(worst, float(rel))
    elapsed = time.monotonic() - start
    assert worst <= 1e-5, f"worst relative gradient error {worst}"
    assert elapsed < 60.0, f"gradient check took {elapsed:.1f}s"


def test_02_svr_matches_projected_gradient_qp_oracle():
    """On >= 20 random PSD-kernel fixtures with n <= 12, the pairwise solver
    matches a dense projected-gradient QP oracle: dual objective and
    predictions within 1e-3, KKT residual <= 1e-3 on every fixture."""
    rng = np.random.default_rng(2718)
    n_fixtures = 22
    for trial in range(n_fixtures):
        n = int(rng.integers(6, 13))
        m = int(rng.integers(1, 4))
        X = rng.normal(size=(n, m))
        y = 0.5 * rng.normal(size=n)
        # sigmoid is excluded: its kernel matrix need not be PSD, so the
        # concave QP the oracle solves is not the same problem.
        params = SvrParams(
            kernel=("rbf", "poly")[trial % 2],
            C=float(rng.uniform(0.5, 2.0)),
            gamma=float(rng.uniform(0.1, 0.6)),
            epsilon=float(rng.uniform(0.02, 0.12)),
        )
        model = fit_svr(X, y, params, tol=1e-5)
        alpha, alpha_star, obj_oracle, bias_oracle = qp_svr_oracle(X, y, params)
        obj = dual_objective(X, y, model.beta, model.alpha, model.alpha_star,
                             params, model.gamma)
        assert abs(obj - obj_oracle) <= 1e-3, f"fixture {trial}: objective"
        X_new = rng.normal(size=(8, m))
        want = qp_oracle_predict(X, alpha, alpha_star, bias_oracle, params, X_new)
        got = predict_svr(model, X_new)
        assert np.max(np.abs(got - want)) <= 1e-3, f"fixture {trial}: predictions"
        assert kkt_violation(model) <= 1e-3, f"fixture {trial}: KKT residual"


def test_03_leafwise_growth_matches_oracle_and_mae_descends():
    """Each boosting tree expands leaves in the exhaustive max-gain order on
    <= 50-row instances; with both subsampling fractions at 1.0, training MAE
    is non-increasing over 100 rounds on 10 random datasets."""
    rng = np.random.default_rng(99)
    for trial in range(10):
        n = int(rng.integers(20, 51))
        m = int(rng.integers(2, 5))
        X = rng.normal(size=(n, m))
        y = rng.normal(size=n)
        params = GbdtParams(learning_rate=0.1, min_gain=0.0, leaves=8,
                            min_data=2, feature_fraction=1.0,
                            bagging_fraction=1.0, rounds=5, seed=trial)
        model = fit_gbdt(X, y, params)
        F = np.full(n, model.base_score)
        for tree in model.trees:
            grad = np.sign(y - F)
            want = [(f, thr) for (f, thr, _) in
                    exhaustive_leafwise_order(X, grad, 8, 2, 0.0)]
            got = [(f, thr) for (_, f, thr, _) in tree.expansion_order]
            assert got == want, f"trial {trial}: expansion order"
            F = F + params.learning_rate * predict_tree(tree, X)

    for trial in range(10):
        n = int(rng.integers(30, 50))
        X = rng.normal(size=(n, 3))
        y = rng.normal(size=n)
        params = GbdtParams(learning_rate=0.1, min_gain=0.0, leaves=8,
                            min_data=3, feature_fraction=1.0,
                            bagging_fraction=1.0, rounds=100, seed=100 + trial)
        model = fit_gbdt(X, y, params)
        F = np.full(n, model.base_score)
        maes = []
        for tree in model.trees:
            F = F + params.learning_rate * predict_tree(tree, X)
            maes.append(float(np.mean(np.abs(y - F))))
        assert len(maes) == 100
        increases = np.diff(maes)
        assert np.all(increases <= 1e-12), (
            f"trial {trial}: training MAE rose by {increases.max()}"
        )


def test_04_gbdt_never_extrapolates_beyond_leaf_sum_bound():
    """Predictions on inputs 10x outside the training range stay within the
    provable bound base_score +/- learning_rate * sum(max |leaf value|)."""
    rng = np.random.default_rng(4)
    for trial in range(10):
        n = int(rng.integers(40, 80))
        m = int(rng.integers(1, 4))
        X = rng.uniform(-1.0, 1.0, size=(n, m))
        y = rng.normal(size=n)
        model = fit_gbdt(X, y, GbdtParams(
            learning_rate=0.1, min_gain=0.0, leaves=8, min_data=3,
            feature_fraction=1.0, bagging_fraction=0.9, rounds=60, seed=trial,
        ))
        far = rng.uniform(-10.0, 10.0, size=(50, m))
        far[np.abs(far) < 1.5] = 10.0  # force every point well outside
        preds = predict_gbdt(model, far)
        bound = model.output_bound()
        assert np.all(np.abs(preds - model.base_score) <= bound + 1e-9), (
            f"trial {trial}"
        )


def _leakage_cases():
    return [
        ("naive", None, None),
        ("svr", [ParamState.from_text("svr", "kernel=rbf;gamma=scale;epsilon=0.05")],
         None),
        ("gbdt",
         [ParamState.from_text(
             "gbdt", "leaves=75;min_data=10;max_depth=5;feature_fraction=0.5")],
         {"gbdt": {"rounds": 10, "learning_rate": 0.1}}),
        ("attn_gru", None,
         {"net": {"conv_channels": 8, "heads": 2, "head_size": 4,
                  "fcl1_units": 8, "gru1_units": 8, "gru2_units": 4,
                  "epochs": 2, "patience": 2}}),
    ]


def _corrupt_from(data: ExperimentData, t_idx: int) -> ExperimentData:
    """Garbage in everything a forecast for date t may not touch: features at
    or after t, levels strictly after t (the date-t level is the outcome the
    record reports)."""
    levels = data.levels.copy()
    levels[t_idx + 1:] = levels[t_idx + 1:] * 7.7 + 3.3
    values = data.features.values.copy()
    values[t_idx:, :] = 1e6 + np.arange(values[t_idx:, :].size).reshape(
        values[t_idx:, :].shape
    )
    feats = FeatureMatrix(data.features.dates, data.features.names, values)
    return ExperimentData(data.dates, levels, feats)


def test_05_no_record_bit_depends_on_future_data_or_schedule():
    """Corrupting all data at or after each test date leaves that date's
    ForecastRecord byte-identical (horizon 5, W=63) for every model kind;
    serial and concurrent schedules agree bit-for-bit."""
    data = planted_signal_data(n=90)
    date_index = {d: i for i, d in enumerate(data.dates)}
    for kind, grid, options in _leakage_cases():
        baseline = run_experiment(data, kind, 63, horizon=5, s=5, root_seed=17,
                                  grid=grid, model_options=options)
        assert len(baseline) == 5
        for rec in baseline:
            corrupted = _corrupt_from(data, date_index[rec.date])
            rerun = run_experiment(corrupted, kind, 63, horizon=5, s=5,
                                   root_seed=17, grid=grid,
                                   model_options=options)
            twin = next(r for r in rerun if r.date == rec.date)
            assert twin.csv_row() == rec.csv_row(), (
                f"{kind} @ {rec.date}: record depends on future data"
            )
        threaded = run_experiment(data, kind, 63, horizon=5, s=5, root_seed=17,
                                  grid=grid, model_options=options, threads=3)
        assert [r.csv_row() for r in threaded] == [r.csv_row() for r in baseline], (
            f"{kind}: schedule changed the records"
        )


def test_06_metric_and_dm_oracles():
    """compute_metrics and dm_test reproduce frozen hand fixtures to 1e-9;
    MAE <= RMSE on 1,000 random error vectors; the DM test's empirical size
    under the null lands in [2%, 9%] at nominal 5% over 1,000 trials."""
    recs = make_records(PRED_D, ACT_D, PRED_L, ACT_L)
    table = compute_metrics(recs)
    for got, want in zip(
        (table.mae, table.rmse, table.mape, table.log_loss), METRICS_FROZEN
    ):
        assert abs(got - want) <= 1e-9
    for (loss, h), (stat, p) in DM_FROZEN.items():
        res = dm_test(np.array(E1), np.array(E2), h=h, loss=loss)
        assert abs(res.statistic - stat) <= 1e-9
        assert abs(res.p_value - p) <= 1e-9
        ostat, op = dm_oracle(E1, E2, h=h, loss=loss)
        assert abs(res.statistic - ostat) <= 1e-9

    rng = np.random.default_rng(6)
    for _ in range(1000):
        pred_d = rng.normal(size=8)
        act_d = rng.normal(size=8)
        lv = np.abs(rng.normal(size=8)) + 1.0
        t = compute_metrics(make_records(pred_d, act_d, lv, lv))
        assert t.mae <= t.rmse + 1e-12

    rejections = 0
    null_rng = np.random.default_rng(2024)
    for _ in range(1000):
        e1 = null_rng.normal(size=50)
        e2 = null_rng.normal(size=50)
        if dm_test(e1, e2).p_value < 0.05:
            rejections += 1
    assert 0.02 <= rejections / 1000 <= 0.09, f"DM size {rejections / 1000}"


def test_07_feature_pipeline_oracles_and_causality():
    """rolling_rv equals the two-pass brute-force oracle to 1e-12 on 100
    random series; log-diff/levels round-trips to 1e-9 relative; features are
    causal: mutating future raw data never changes past features."""
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(25, 200))
        r = rng.normal(size=n) * rng.uniform(0.001, 0.1)
        np.testing.assert_allclose(
            rolling_rv(r, 21), rv_oracle(r, 21), rtol=0, atol=1e-12
        )
        levels = np.exp(np.cumsum(r)) * 30.0
        back = levels_from_logdiffs(levels[0], log_diff(levels))
        np.testing.assert_allclose(back, levels[1:], rtol=1e-9)

    full = generate_synthetic(seed=5, n_days=200, n_series=2)
    vols = {n for n in full.names if n.startswith("volume")}
    feats_full = engineer(full, vols)
    cut = 150
    truncated = TimeSeriesFrame(
        full.dates[:cut], {n: c[:cut] for n, c in full.columns.items()}
    )
    feats_trunc = engineer(truncated, vols)
    k = len(feats_trunc)
    assert feats_trunc.dates == feats_full.dates[:k]
    np.testing.assert_array_equal(feats_trunc.values, feats_full.values[:k])


def test_08_all_models_beat_naive_on_planted_signal():
    """Walk-forward over a 20-point horizon at W=63 on a series whose next
    log-diff is 0.5x a feature's trailing window mean plus small noise: svr,
    gbdt and attn_gru each beat the naive MAE, with grids <= 9 states and a
    total budget under 15 minutes."""
    start = time.monotonic()
    data = planted_signal_data()
    naive_mae = _mae(run_experiment(data, "naive", 63, horizon=20, s=5,
                                    root_seed=0))

    svr_grid = [
        ParamState.from_text("svr", f"kernel=rbf;gamma={g};epsilon=0.05")
        for g in ("scale", "auto", "0.1")
    ]
    gbdt_grid = [
        ParamState.from_text(
            "gbdt", f"leaves=75;min_data={m};max_depth=-1;feature_fraction=0.6")
        for m in (10, 20, 30)
    ]
    assert len(svr_grid) <= 9 and len(gbdt_grid) <= 9
    results = {}
    results["svr"] = _mae(run_experiment(
        data, "svr", 63, horizon=20, s=5, root_seed=0, grid=svr_grid))
    results["gbdt"] = _mae(run_experiment(
        data, "gbdt", 63, horizon=20, s=5, root_seed=0, grid=gbdt_grid,
        model_options={"gbdt": {"rounds": 40, "learning_rate": 0.08}}))
    results["attn_gru"] = _mae(run_experiment(
        data, "attn_gru", 63, horizon=20, s=5, root_seed=0,
        model_options={"net": {"conv_channels": 16, "heads": 4, "head_size": 4,
                               "fcl1_units": 16, "gru1_units": 16,
                               "gru2_units": 8, "epochs": 16, "patience": 4}}))
    elapsed = time.monotonic() - start
    for kind, mae in results.items():
        assert mae < naive_mae, f"{kind}: MAE {mae} vs naive {naive_mae}"
    assert elapsed < 900.0, f"planted-signal run took {elapsed:.0f}s"


def test_09_credit_vix_formula_and_invariances():
    """The three formula examples hold to 1e-12; variance is monotone in
    prices and invariant to splitting a strike's interval, on 100 random
    chains each."""
    # single strike: T=1/12, RPV01=1, K=100, P=1, dK=10, CDSI=K0=100
    single = chain([100.0], [1.0], [10.0], k0=100.0, cdsi=100.0,
                   horizon=1.0 / 12.0, rpv01=1.0)
    assert abs(implied_variance(single) - 0.024) <= 1e-12

    rng = np.random.default_rng(9)
    # zero correction: cdsi == k0 leaves only the strip term
    c = random_chain(rng)
    zc = chain(c.strikes, c.prices, c.intervals, c.k0, c.k0, c.horizon, c.rpv01)
    strip_only = credit_vix_oracle(c.strikes, c.prices, c.intervals,
                                   c.k0, c.k0, c.horizon, c.rpv01)
    assert abs(implied_variance(zc) - strip_only) <= 1e-12
    # zero prices with zero correction: variance is exactly zero
    zp = chain(c.strikes, np.zeros_like(c.prices), c.intervals,
               c.k0, c.k0, c.horizon, c.rpv01)
    assert abs(implied_variance(zp)) <= 1e-12

    checked = 0
    for _ in range(100):
        c = random_chain(rng)
        try:
            base = implied_variance(c)
        except NumericError:
            continue
        checked += 1
        bump = chain(c.strikes, c.prices + rng.uniform(0.1, 1.0, len(c.prices)),
                     c.intervals, c.k0, c.cdsi, c.horizon, c.rpv01)
        assert implied_variance(bump) > base

        j = int(rng.integers(len(c.strikes)))
        eps = 1e-7
        strikes, prices, dks = [], [], []
        for i in range(len(c.strikes)):
            if i == j:
                strikes += [c.strikes[i] - eps, c.strikes[i] + eps]
                prices += [c.prices[i], c.prices[i]]
                dks += [c.intervals[i] / 2, c.intervals[i] / 2]
            else:
                strikes.append(c.strikes[i])
                prices.append(c.prices[i])
                dks.append(c.intervals[i])
        split = chain(strikes, prices, dks, c.k0, c.cdsi, c.horizon, c.rpv01)
        assert abs(implied_variance(split) - base) <= 1e-5 * max(base, 1e-12)
    assert checked >= 80  # the invariances were actually exercised


def test_10_runs_are_byte_identical_and_grids_enumerate_exactly(tmp_path):
    """Two runs from the same manifest produce byte-identical record CSVs;
    the full hyperparameter grids enumerate to exactly 45 (svr) and 81
    (gbdt)."""
    assert len(enumerate_grid("svr")) == 45
    assert len(enumerate_grid("gbdt")) == 81

    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "data": {"synthetic": {"seed": 3, "n_days": 160, "n_series": 2}},
        "models": ["naive", "svr"],
        "windows": [63],
        "horizon": 5,
        "grids": {"svr": [16]},
        "out": str(tmp_path / "a"),
    }))
    assert cli_main(["run", "--config", str(cfg_path)]) == 0
    assert cli_main(["run", "--config", str(cfg_path),
                     "--out", str(tmp_path / "b")]) == 0
    for name in ("records_naive_63.csv", "records_svr_63.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name}: runs differ"
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["grid_sizes"] == {"svr": 45, "gbdt": 81}
