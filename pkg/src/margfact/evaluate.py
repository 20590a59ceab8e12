"""Downstream predictive evaluation: lasso-logistic regression and AUPRC."""

import numpy as np

from .data_io import _take_patients
from .model import build_model, project_patients
from .solver import train

LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logistic_loss(X, y, w, b):
    z = X @ w + b
    # log(1 + e^-z) stable for both signs
    return float(np.mean(np.logaddexp(0.0, -z) + (1.0 - y) * z))


def lasso_logistic_fit(X, y, lam, tol=1e-7, max_iter=10_000):
    """Minimize mean logistic loss + lam * ||w||_1 by proximal gradient.

    The intercept is unpenalized. Deterministic given the data; raises if
    only one class is present.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2 or len(np.unique(y)) < 2:
        raise ValueError("need at least two patients and both classes present")
    n, d = X.shape
    # Lipschitz bound for the mean logistic gradient, intercept included
    Xa = np.hstack([X, np.ones((n, 1))])
    L = 0.25 * np.linalg.norm(Xa, 2) ** 2 / n
    step = 1.0 / L
    w = np.zeros(d)
    b = 0.0
    obj = _logistic_loss(X, y, w, b) + lam * np.sum(np.abs(w))
    for _ in range(max_iter):
        p = _sigmoid(X @ w + b)
        gw = X.T @ (p - y) / n
        gb = float(np.mean(p - y))
        w_new = w - step * gw
        w_new = np.sign(w_new) * np.maximum(0.0, np.abs(w_new) - step * lam)
        b_new = b - step * gb
        obj_new = _logistic_loss(X, y, w_new, b_new) + lam * np.sum(np.abs(w_new))
        w, b = w_new, b_new
        if abs(obj - obj_new) <= tol * max(1.0, abs(obj)):
            obj = obj_new
            break
        obj = obj_new
    return w, b


def predict_scores(X, w, b):
    return _sigmoid(np.asarray(X, dtype=float) @ w + b)


def auprc(scores, labels):
    """Average precision with tied scores grouped."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ValueError("both classes must be present")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    ap = 0.0
    tp = 0
    seen = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            j += 1
        group_pos = int(y[i:j].sum())
        tp += group_pos
        seen += j - i
        if group_pos:
            ap += group_pos * (tp / seen)
        i = j
    return ap / n_pos


def _stratified_folds(labels, n_folds, seed):
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(n_folds)]
    for cls in (0, 1):
        members = np.flatnonzero(np.asarray(labels) == cls)
        perm = members[rng.permutation(len(members))]
        for pos, idx in enumerate(perm):
            folds[pos % n_folds].append(int(idx))
    return [sorted(f) for f in folds]


def five_fold_cv(observations, labels, model_spec, solver_cfg=None, n_folds=5,
                 lambda_grid=LAMBDA_GRID, seed=0):
    """Per-fold AUPRC of lasso-logistic mortality prediction on projections.

    Each fold: fit the factorization on the training patients, project the
    test patients, select lambda on an inner 80/20 validation split of the
    training representations, refit, and score the held-out fold.
    """
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    if int(labels.sum()) < n_folds or int((1 - labels).sum()) < n_folds:
        raise ValueError(f"need at least {n_folds} patients per class")
    folds = _stratified_folds(labels, n_folds, seed)
    results = []
    for fold_id, test_idx in enumerate(folds):
        train_idx = sorted(set(range(n)) - set(test_idx))
        train_obs = _take_patients(observations, train_idx)
        test_obs = _take_patients(observations, test_idx)
        y_train, y_test = labels[train_idx], labels[test_idx]

        model = build_model(model_spec, train_obs)
        train(model, solver_cfg)
        X_train = model.shared
        X_test = project_patients(model, test_obs, solver_cfg)

        lam = _select_lambda(X_train, y_train, lambda_grid, seed + fold_id)
        w, b = lasso_logistic_fit(X_train, y_train, lam)
        score = auprc(predict_scores(X_test, w, b), y_test)
        results.append({"fold": fold_id, "auprc": score, "lambda": lam,
                        "n_train": len(train_idx), "n_test": len(test_idx)})
    values = np.array([r["auprc"] for r in results])
    return {"folds": results, "mean": float(values.mean()), "std": float(values.std()),
            "config": {"n_folds": n_folds, "lambda_grid": list(lambda_grid), "seed": seed}}


def _select_lambda(X, y, lambda_grid, seed):
    """Pick lambda by AUPRC on a stratified inner 80/20 validation split."""
    rng = np.random.default_rng(seed)
    val_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        perm = members[rng.permutation(len(members))]
        n_val = max(1, int(round(0.2 * len(perm))))
        val_idx.extend(perm[:n_val])
    val_idx = sorted(val_idx)
    fit_idx = sorted(set(range(len(y))) - set(val_idx))
    if len(np.unique(y[fit_idx])) < 2 or len(np.unique(y[val_idx])) < 2:
        return lambda_grid[0]
    best_lam, best_score = lambda_grid[0], -1.0
    for lam in lambda_grid:
        w, b = lasso_logistic_fit(X[fit_idx], y[fit_idx], lam)
        score = auprc(predict_scores(X[val_idx], w, b), y[val_idx])
        if score > best_score:
            best_lam, best_score = lam, score
    return best_lam
