"""Statistical regressors written from first principles.

CART regression trees, bagged forests, ridge regression, k-nearest
neighbours, gradient-boosted trees, and k-fold grid search. Everything is
deterministic under a fixed seed; tree split ties break on (lower feature
index, lower threshold) so structure is reproducible across platforms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .metrics import rmse

SCORE_MIN = 0.0
SCORE_MAX = 10.0


class FitError(ValueError):
    pass


class RankDeficiencyError(FitError):
    pass


def _clamp(values):
    return np.clip(values, SCORE_MIN, SCORE_MAX)


def validate_features(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise FitError(f"bad shapes X{X.shape} y{y.shape}")
    if X.shape[0] < 1:
        raise FitError("need at least one row")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise FitError("non-finite feature or target values")
    return X, y


# ---------------------------------------------------------------------------
# CART regression tree


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    feature_subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise FitError("min_samples_split >= 2 and min_samples_leaf >= 1 required")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise FitError("feature_subsample must be in (0, 1]")


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None


def _best_split(X, y, feats, min_samples_leaf):
    """Minimal summed child SSE over midpoint thresholds of `feats`.

    Returns (feature, threshold) or None. Ties: lowest feature index, then
    lowest threshold.
    """
    n = y.shape[0]
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    Xs = np.take_along_axis(Xf, order, axis=0)
    ys = y[order]
    s1 = np.cumsum(ys, axis=0)
    s2 = np.cumsum(ys * ys, axis=0)
    left_n = np.arange(1, n, dtype=np.float64)[:, None]
    right_n = n - left_n
    left_sse = s2[:-1] - s1[:-1] ** 2 / left_n
    right_sse = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / right_n
    score = left_sse + right_sse
    valid = (
        (Xs[1:] > Xs[:-1])
        & (left_n >= min_samples_leaf)
        & (right_n >= min_samples_leaf)
    )
    if not valid.any():
        return None
    score = np.where(valid, score, np.inf)
    best_score = score.min()
    rows, cols = np.nonzero(score == best_score)
    best = None
    for r, c in zip(rows, cols):
        threshold = (Xs[r, c] + Xs[r + 1, c]) / 2.0
        key = (int(feats[c]), threshold)
        if best is None or key < best:
            best = key
    return best


def tree_fit(X, y, params: TreeParams = TreeParams(), rng=None, leaf_value=None):
    """Greedy CART regression tree. ``leaf_value`` overrides the leaf mean."""
    X, y = validate_features(X, y)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    n_features = X.shape[1]
    m = math.ceil(params.feature_subsample * n_features)
    if leaf_value is None:
        leaf_value = lambda targets: float(np.mean(targets))

    def build(idx, depth):
        targets = y[idx]
        stop = (
            (params.max_depth is not None and depth >= params.max_depth)
            or idx.shape[0] < params.min_samples_split
            or np.all(targets == targets[0])
        )
        if not stop:
            if m < n_features:
                feats = np.sort(rng.choice(n_features, size=m, replace=False))
            else:
                feats = np.arange(n_features)
            found = _best_split(X[idx], targets, feats, params.min_samples_leaf)
            if found is not None:
                feature, threshold = found
                mask = X[idx, feature] <= threshold
                left = build(idx[mask], depth + 1)
                right = build(idx[~mask], depth + 1)
                return TreeNode(feature=feature, threshold=threshold,
                                left=left, right=right)
        return TreeNode(value=leaf_value(targets))

    return build(np.arange(X.shape[0]), 0)


def tree_predict(tree: TreeNode, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        node = tree
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        out[i] = node.value
    return out


# ---------------------------------------------------------------------------
# Random forest


@dataclass
class ForestModel:
    trees: list[TreeNode]
    n_trees: int
    tree_params: TreeParams
    bootstrap: bool = True


RF_DEFAULT_SUBSAMPLE = 1.0 / 3.0


def rf_fit(X, y, n_trees: int = 100, params: TreeParams | None = None,
           bootstrap: bool = True) -> ForestModel:
    X, y = validate_features(X, y)
    if n_trees < 1:
        raise FitError("n_trees must be >= 1")
    if params is None:
        params = TreeParams(feature_subsample=RF_DEFAULT_SUBSAMPLE)
    n = X.shape[0]
    seeds = np.random.SeedSequence(params.seed).spawn(n_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(tree_fit(X[idx], y[idx], params, rng=rng))
    return ForestModel(trees, n_trees, params, bootstrap)


def rf_predict(model: ForestModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    preds = np.mean([tree_predict(t, X) for t in model.trees], axis=0)
    return _clamp(preds)


# ---------------------------------------------------------------------------
# Ridge regression


@dataclass
class RidgeModel:
    weights: np.ndarray
    bias: float
    lam: float


def ridge_fit(X, y, lam: float = 1.0) -> RidgeModel:
    """Closed-form ridge on column-centered data; bias is unregularized."""
    X, y = validate_features(X, y)
    if lam < 0:
        raise FitError("lambda must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    if lam == 0 and np.linalg.matrix_rank(Xc) < X.shape[1]:
        raise RankDeficiencyError(
            "centered design is rank-deficient; lambda=0 has no unique solution"
        )
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        weights = scipy.linalg.solve(gram, Xc.T @ yc, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rank guard above
        raise RankDeficiencyError(str(exc)) from exc
    bias = float(y_mean - weights @ x_mean)
    return RidgeModel(weights, bias, lam)


def ridge_predict(model: RidgeModel, X, clamp: bool = True) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    preds = X @ model.weights + model.bias
    return _clamp(preds) if clamp else preds


# ---------------------------------------------------------------------------
# K-nearest neighbours


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int


def knn_fit(X, y, k: int = 5) -> KnnModel:
    X, y = validate_features(X, y)
    if not 1 <= k <= X.shape[0]:
        raise FitError(f"k={k} outside [1, {X.shape[0]}]")
    return KnnModel(X, y, k)


def knn_predict(model: KnnModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.X.shape[1]:
        raise FitError(f"dimension mismatch: {X.shape[1]} vs {model.X.shape[1]}")
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        dists = np.sqrt(np.sum((model.X - x) ** 2, axis=1))
        # Stable sort: equidistant neighbours resolve to the lower index.
        nearest = np.argsort(dists, kind="stable")[: model.k]
        out[i] = model.y[nearest].mean()
    return _clamp(out)


# ---------------------------------------------------------------------------
# Gradient-boosted trees


@dataclass
class GbtModel:
    base: float
    trees: list[TreeNode]
    learning_rate: float
    n_rounds: int
    leaf_l2: float


def gbt_fit(X, y, n_rounds: int = 100, learning_rate: float = 0.1,
            max_depth: int | None = 3, leaf_l2: float = 1.0,
            seed: int = 0) -> GbtModel:
    X, y = validate_features(X, y)
    if not 0.0 <= learning_rate <= 1.0:
        raise FitError("learning_rate must be in [0, 1]")
    if leaf_l2 < 0:
        raise FitError("leaf_l2 must be >= 0")
    base = float(np.mean(y))
    pred = np.full_like(y, base)
    params = TreeParams(max_depth=max_depth, seed=seed)
    leaf_value = lambda targets: float(np.sum(targets) / (targets.shape[0] + leaf_l2))
    trees = []
    rng = np.random.default_rng(seed)
    for _ in range(n_rounds):
        residuals = y - pred
        tree = tree_fit(X, residuals, params, rng=rng, leaf_value=leaf_value)
        trees.append(tree)
        pred = pred + learning_rate * tree_predict(tree, X)
    return GbtModel(base, trees, learning_rate, n_rounds, leaf_l2)


def gbt_predict(model: GbtModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    preds = np.full(X.shape[0], model.base)
    for tree in model.trees:
        preds = preds + model.learning_rate * tree_predict(tree, X)
    return _clamp(preds)


# ---------------------------------------------------------------------------
# Cross-validation and grid search


def kfold_split(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Seeded shuffle, then k contiguous chunks; first n%k are one larger."""
    if k > n:
        raise FitError(f"k={k} exceeds n={n}")
    if k < 1:
        raise FitError("k must be >= 1")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(perm[start : start + size])
        start += size
    return folds


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    table: list = field(default_factory=list)  # (params, fold_rmses, mean_rmse)


def _family_fns(family: str, seed: int):
    if family == "rf":
        def fit(X, y, p):
            params = TreeParams(
                max_depth=p.get("max_depth"),
                min_samples_split=p.get("min_samples_split", 2),
                min_samples_leaf=p.get("min_samples_leaf", 1),
                feature_subsample=p.get("feature_subsample", RF_DEFAULT_SUBSAMPLE),
                seed=seed,
            )
            return rf_fit(X, y, n_trees=p.get("n_trees", 100), params=params,
                          bootstrap=p.get("bootstrap", True))
        return fit, rf_predict
    if family == "ridge":
        return (lambda X, y, p: ridge_fit(X, y, lam=p.get("lambda", 1.0)),
                ridge_predict)
    if family == "knn":
        return lambda X, y, p: knn_fit(X, y, k=p.get("k", 5)), knn_predict
    if family == "gbt":
        def fit(X, y, p):
            return gbt_fit(
                X, y,
                n_rounds=p.get("n_rounds", 100),
                learning_rate=p.get("learning_rate", 0.1),
                max_depth=p.get("max_depth", 3),
                leaf_l2=p.get("leaf_l2", 1.0),
                seed=seed,
            )
        return fit, gbt_predict
    raise FitError(f"unknown model family {family!r}")


def grid_search_cv(family: str, grid: dict[str, list], X, y,
                   k: int = 5, seed: int = 0) -> GridSearchResult:
    """Exhaustive grid over k-fold mean RMSE; ties keep earliest grid order."""
    if not grid:
        raise FitError("empty grid")
    X, y = validate_features(X, y)
    fit, predict = _family_fns(family, seed)
    folds = kfold_split(X.shape[0], k=k, seed=seed)
    keys = list(grid.keys())
    table = []
    best = None
    for combo in itertools.product(*(grid[key] for key in keys)):
        params = dict(zip(keys, combo))
        fold_rmses = []
        for i in range(k):
            val_idx = folds[i]
            train_idx = np.concatenate([folds[j] for j in range(k) if j != i])
            try:
                model = fit(X[train_idx], y[train_idx], params)
                yhat = predict(model, X[val_idx])
            except Exception as exc:
                raise FitError(f"grid combo {params} failed: {exc}") from exc
            fold_rmses.append(rmse(y[val_idx], yhat))
        mean_rmse = float(np.mean(fold_rmses))
        table.append((params, fold_rmses, mean_rmse))
        if best is None or mean_rmse < best[1]:
            best = (params, mean_rmse)
    return GridSearchResult(best_params=best[0], table=table)
