"""The three regressors, fitted directly (outside the harness).

Each model is a from-scratch numpy implementation: an epsilon-SVR solved by
pairwise dual updates, a leaf-wise gradient-boosted tree ensemble with an
absolute-error objective, and an attention/BiGRU network trained by exact
reverse-mode autodiff. This script fits all three on the same toy problem
and prints their in- and out-of-sample MAE.
"""

import numpy as np

from vollab.gbdt import GbdtParams, fit_gbdt, predict_gbdt
from vollab.net import NetConfig, predict as net_predict, train as net_train
from vollab.svr import SvrParams, fit_svr, predict_svr


def toy_problem(seed, n=160, s=5, m=3):
    """Blocks of s daily observations of m features; the target depends on
    the window mean of the first feature."""
    rng = np.random.default_rng(seed)
    blocks = rng.normal(size=(n, s, m))
    y = 0.5 * blocks[:, :, 0].mean(axis=1) + 0.05 * rng.normal(size=n)
    return blocks, y


def mae(pred, y):
    return float(np.mean(np.abs(pred - y)))


def main():
    blocks, y = toy_problem(seed=1)
    test_blocks, test_y = toy_problem(seed=2, n=60)
    flat, test_flat = blocks.reshape(len(y), -1), test_blocks.reshape(60, -1)
    print(f"train {flat.shape}, test {test_flat.shape}, "
          f"baseline MAE (predict 0): {mae(0.0, test_y):.4f}\n")

    svr = fit_svr(flat, y, SvrParams(kernel="rbf", gamma="scale", epsilon=0.05))
    print(f"svr       converged={svr.converged} passes={svr.n_passes} "
          f"support vectors={int(svr.support_mask.sum())}")
    print(f"          train MAE {mae(predict_svr(svr, flat), y):.4f}  "
          f"test MAE {mae(predict_svr(svr, test_flat), test_y):.4f}\n")

    gbdt = fit_gbdt(flat, y, GbdtParams(
        learning_rate=0.08, leaves=16, min_data=5, feature_fraction=0.8,
        rounds=150, seed=0,
    ))
    print(f"gbdt      {len(gbdt.trees)} trees, "
          f"provable output bound +/-{gbdt.output_bound():.3f} around "
          f"{gbdt.base_score:.3f}")
    print(f"          train MAE {mae(predict_gbdt(gbdt, flat), y):.4f}  "
          f"test MAE {mae(predict_gbdt(gbdt, test_flat), test_y):.4f}\n")

    config = NetConfig(conv_channels=16, heads=4, head_size=4, fcl1_units=16,
                       gru1_units=16, gru2_units=8, epochs=20, patience=5,
                       seed=0)
    result = net_train(config, (blocks, y))
    print(f"attn_gru  best epoch {result.best_epoch}, "
          f"internal val MAE {result.best_val_mae:.4f}")
    print(f"          train MAE {mae(net_predict(result.params, blocks, config), y):.4f}  "
          f"test MAE {mae(net_predict(result.params, test_blocks, config), test_y):.4f}")


if __name__ == "__main__":
    main()
