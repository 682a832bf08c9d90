"""Epsilon-insensitive support vector regression via pairwise dual updates.

The dual is solved in the 2n-variable (alpha, alpha*) box form with
maximal-violating-pair working-set selection (SMO style).  Every update
moves a pair along the equality constraint, so dual feasibility
sum(beta) = 0 holds exactly at all times and the dual objective never
decreases.  Convergence: max KKT violation <= tol or the pass cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import VollabError

GAMMA_CHOICES = ("scale", "auto")


@dataclass(frozen=True)
class SvrParams:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: object = "scale"  # "scale", "auto" or a positive float
    epsilon: float = 0.1
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kernel not in ("poly", "rbf", "sigmoid"):
            raise VollabError(f"unknown kernel {self.kernel!r}")
        if self.C <= 0 or self.epsilon < 0:
            raise VollabError("require C > 0 and epsilon >= 0")
        if not isinstance(self.gamma, str) and self.gamma <= 0:
            raise VollabError("numeric gamma must be positive")


def resolve_gamma(params: SvrParams, X: np.ndarray) -> float:
    if isinstance(params.gamma, str):
        m = X.shape[1]
        if params.gamma == "auto":
            return 1.0 / m
        if params.gamma == "scale":
            v = X.var()
            return 1.0 / (m * v) if v > 0 else 1.0 / m
        raise VollabError(f"unknown gamma {params.gamma!r}")
    return float(params.gamma)


def kernel_eval(a, b, params: SvrParams, gamma: float | None = None) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise VollabError(f"kernel arguments differ in shape: {a.shape} vs {b.shape}")
    if gamma is None:
        gamma = params.gamma if not isinstance(params.gamma, str) else None
        if gamma is None:
            raise VollabError("symbolic gamma needs training data; pass gamma explicitly")
    if params.kernel == "rbf":
        d = a - b
        return float(np.exp(-gamma * d.dot(d)))
    if params.kernel == "poly":
        return float((gamma * a.dot(b) + params.coef0) ** params.degree)
    return float(np.tanh(gamma * a.dot(b) + params.coef0))


def kernel_matrix(A, B, params: SvrParams, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    G = A @ B.T
    if params.kernel == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * G
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if params.kernel == "poly":
        return (gamma * G + params.coef0) ** params.degree
    return np.tanh(gamma * G + params.coef0)


@dataclass
class SvrModel:
    params: SvrParams
    gamma: float
    X: np.ndarray  # training rows (all of them; beta is dense with zeros)
    y: np.ndarray
    beta: np.ndarray  # alpha - alpha* per training row
    bias: float
    alpha: np.ndarray
    alpha_star: np.ndarray
    converged: bool
    n_passes: int
    objective_history: list[float] = field(default_factory=list)

    @property
    def support_mask(self) -> np.ndarray:
        return np.abs(self.beta) > 1e-12

    def dual_objective(self) -> float:
        return dual_objective(self.X, self.y, self.beta, self.alpha, self.alpha_star,
                              self.params, self.gamma)


def dual_objective(X, y, beta, alpha, alpha_star, params, gamma) -> float:
    K = kernel_matrix(X, X, params, gamma)
    return float(
        -0.5 * beta @ K @ beta + beta @ y - params.epsilon * (alpha + alpha_star).sum()
    )


def fit_svr(X, y, params: SvrParams, tol: float = 1e-3, max_passes: int = 10_000) -> SvrModel:
    """Solve the epsilon-SVR dual by maximal-violating-pair updates.

    Index u < n is alpha_u (sign +1), u >= n is alpha*_{u-n} (sign -1).
    G_u = p_u (y - f)_su - eps where f = K beta.  KKT: a valid bias must
    satisfy b >= Qlow_u for every raisable u and b <= Qup_u for every
    lowerable u, with Q_u = p_u G_u ... expressed below via y - f directly.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(X) != len(y) or len(y) < 2:
        raise VollabError("fit_svr needs >= 2 matching rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise VollabError("fit_svr inputs must be finite")
    n = len(y)
    C, eps = params.C, params.epsilon
    gamma = resolve_gamma(params, X)
    K = kernel_matrix(X, X, params, gamma)
    Kd = np.diag(K).copy()

    alpha = np.zeros(n)
    alpha_star = np.zeros(n)
    beta = np.zeros(n)
    f = np.zeros(n)  # K @ beta
    history: list[float] = []

    def Q_bounds():
        # lower bounds on b: alpha raisable (alpha < C, p=+1) -> y-f-eps;
        #                    alpha* lowerable (alpha* > 0)     -> y-f+eps
        # upper bounds on b: alpha lowerable (alpha > 0)       -> y-f-eps;
        #                    alpha* raisable (alpha* < C)      -> y-f+eps
        r = y - f
        low_vals = np.concatenate([
            np.where(alpha < C, r - eps, -np.inf),
            np.where(alpha_star > 0, r + eps, -np.inf),
        ])
        up_vals = np.concatenate([
            np.where(alpha > 0, r - eps, np.inf),
            np.where(alpha_star < C, r + eps, np.inf),
        ])
        return low_vals, up_vals

    converged = False
    passes = 0
    updates_per_pass = max(2 * n, 10)
    while passes < max_passes:
        passes += 1
        progressed = False
        for _ in range(updates_per_pass):
            low_vals, up_vals = Q_bounds()
            i = int(np.argmax(low_vals))
            j = int(np.argmin(up_vals))
            viol = low_vals[i] - up_vals[j]
            if viol <= tol:
                converged = True
                break
            si, pi = (i, 1.0) if i < n else (i - n, -1.0)
            sj, pj = (j, 1.0) if j < n else (j - n, -1.0)
            eta = max(Kd[si] + Kd[sj] - 2.0 * K[si, sj], 1e-12)
            t = viol / eta
            # box limits: a_i moves by +t along p_i (raisable side),
            # a_j moves by -t along p_j (lowerable side)
            if pi > 0:
                t = min(t, C - alpha[si])
            else:
                t = min(t, alpha_star[si])
            if pj > 0:
                t = min(t, alpha[sj])
            else:
                t = min(t, C - alpha_star[sj])
            if t <= 0:
                break
            if pi > 0:
                alpha[si] += t
            else:
                alpha_star[si] -= t
            if pj > 0:
                alpha[sj] -= t
            else:
                alpha_star[sj] += t
            beta[si] += t
            beta[sj] -= t
            f += t * (K[si] - K[sj])
            progressed = True
        # prune alpha/alpha* overlap: keeps beta and feasibility, raises the
        # objective by 2*eps*min(alpha, alpha*)
        overlap = np.minimum(alpha, alpha_star)
        if np.any(overlap > 0):
            alpha -= overlap
            alpha_star -= overlap
        history.append(dual_objective(X, y, beta, alpha, alpha_star, params, gamma))
        if converged or not progressed:
            break

    # bias from KKT-interior points, fallback: midpoint of the bound interval
    interior = ((alpha > 1e-9) & (alpha < C - 1e-9)) | (
        (alpha_star > 1e-9) & (alpha_star < C - 1e-9)
    )
    r = y - f
    if np.any(interior):
        vals = np.where(alpha > alpha_star, r - eps, r + eps)
        bias = float(vals[interior].mean())
    else:
        low_vals, up_vals = Q_bounds()
        bias = float((low_vals.max() + up_vals.min()) / 2.0)

    return SvrModel(
        params=params,
        gamma=gamma,
        X=X.copy(),
        y=y.copy(),
        beta=beta,
        bias=bias,
        alpha=alpha,
        alpha_star=alpha_star,
        converged=converged,
        n_passes=passes,
        objective_history=history,
    )


def predict_svr(model: SvrModel, X) -> np.ndarray | float:
    x = np.asarray(X, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != model.X.shape[1]:
        raise VollabError(
            f"expected {model.X.shape[1]} features, got {x2.shape[1]}"
        )
    mask = model.support_mask
    if not np.any(mask):
        out = np.full(len(x2), model.bias)
    else:
        Kx = kernel_matrix(x2, model.X[mask], model.params, model.gamma)
        out = Kx @ model.beta[mask] + model.bias
    return float(out[0]) if single else out


def kkt_violation(model: SvrModel) -> float:
    """Maximal violation of the optimality conditions at the fitted point."""
    f = kernel_matrix(model.X, model.X, model.params, model.gamma) @ model.beta
    r = model.y - f
    C, eps = model.params.C, model.params.epsilon
    low = np.concatenate([
        np.where(model.alpha < C, r - eps, -np.inf),
        np.where(model.alpha_star > 0, r + eps, -np.inf),
    ])
    up = np.concatenate([
        np.where(model.alpha > 0, r - eps, np.inf),
        np.where(model.alpha_star < C, r + eps, np.inf),
    ])
    return float(low.max() - up.min())
