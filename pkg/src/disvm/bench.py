"""Evaluation protocol: transfer-task construction, nested cross-validation
with a two-stage hyper-parameter search, and sensitivity sweeps.

Outer loop: repeated stratified k-fold CV on the target domain. For every
split the training pool is the labeled target training folds plus all source
samples; the held-out target fold enters the pool as unlabeled samples
(transductive use of the dependence penalty) and its labels are stripped
before any training code can see them. Inner loop: random 80/20 splits of the
labeled pool pick hyper-parameters by mean validation accuracy.
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import baselines, model
from .domain import (SOURCE, TARGET_LABELED, TARGET_TEST, Dataset, concat,
                     encode_domains, recode_labels)
from .kernels import RBF, KernelSpec, gram
from .qp import MarginQpCache

C_GRID = tuple(10.0 ** k for k in range(-3, 5))
LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
LAMBDA_SWEEP_GRID = (0.0, 0.01, 0.1, 1.0, 10.0, 100.0)
GAMMA_GRID = tuple(10.0 ** k for k in range(-6, 3))
H_GRID = (20, 40, 50, 60, 80, 100)

DISVM = "disvm"
SVM = "svm"
PCA_T = "pca-t"
PCA_ST = "pca-st"
MIDA = "mida"
SMIDA = "smida"

BUILTIN_METHODS = (DISVM, SVM, PCA_T, PCA_ST, MIDA, SMIDA)
_PROJECTION_METHODS = (PCA_T, PCA_ST, MIDA, SMIDA)

# hooks invoked with the offending indices whenever a training-side pool is
# found to carry readable labels on held-out test samples
_leak_hooks: list = []
_custom_methods: dict = {}


def register_leak_hook(fn):
    _leak_hooks.append(fn)


def unregister_leak_hook(fn):
    _leak_hooks.remove(fn)


def register_method(name: str, fit_predict):
    """fit_predict(pool, method, params, X_query) -> predicted labels."""
    _custom_methods[name] = fit_predict


def unregister_method(name: str):
    _custom_methods.pop(name, None)


@dataclass(frozen=True)
class Protocol:
    outer_repeats: int = 10
    outer_folds: int = 5
    inner_splits: int = 20
    inner_validation_fraction: float = 0.2
    seed: int = 0
    transductive: bool = True

    def __post_init__(self):
        if self.outer_folds < 2:
            raise ValueError("outer_folds must be >= 2")
        if self.outer_repeats < 1 or self.inner_splits < 1:
            raise ValueError("repeats and inner_splits must be >= 1")
        if not 0.0 < self.inner_validation_fraction < 1.0:
            raise ValueError("inner_validation_fraction must be in (0, 1)")


@dataclass(frozen=True)
class Method:
    name: str
    kernel: KernelSpec = KernelSpec()
    grids: tuple = ()  # ((param, (values...)), ...); empty means defaults

    def grid(self, param: str, default):
        for key, values in self.grids:
            if key == param:
                return tuple(values)
        return tuple(default)


@dataclass(frozen=True)
class TransferTask:
    sources: tuple
    target: Dataset
    name: str


@dataclass
class CvReport:
    accuracies: list
    mean: float
    std: float
    chosen: list = field(default_factory=list)


@dataclass
class SweepPoint:
    value: float
    mean: float
    std: float


def make_tasks(datasets, spec) -> list[TransferTask]:
    """Build transfer tasks from named datasets.

    spec is "pairs" (all ordered source->target pairs), "multi-source"
    (leave-one-target-out with the rest pooled as sources), or an iterable of
    task names like "A->B" or "A&B->C".
    """
    names = list(datasets)
    dims = {datasets[k].d for k in names}
    if len(dims) > 1:
        raise ValueError(f"datasets disagree on feature dimension: {sorted(dims)}")
    tasks: list[TransferTask] = []
    if spec == "pairs":
        for a, b in itertools.permutations(names, 2):
            tasks.append(TransferTask((datasets[a],), datasets[b], f"{a}->{b}"))
        return tasks
    if spec == "multi-source":
        if len(names) < 2:
            return []
        for tgt in names:
            srcs = [k for k in names if k != tgt]
            tasks.append(TransferTask(tuple(datasets[k] for k in srcs),
                                      datasets[tgt], "&".join(srcs) + f"->{tgt}"))
        return tasks
    for text in spec:
        try:
            left, tgt = text.split("->")
        except ValueError:
            raise ValueError(f"cannot parse task {text!r}") from None
        srcs = [s.strip() for s in left.split("&")]
        tgt = tgt.strip()
        for key in srcs + [tgt]:
            if key not in datasets:
                raise ValueError(f"unknown dataset {key!r} in task {text!r}")
        if tgt in srcs:
            raise ValueError(f"source equals target in task {text!r}")
        tasks.append(TransferTask(tuple(datasets[k] for k in srcs),
                                  datasets[tgt], text))
    return tasks


# ---------------------------------------------------------------------------
# pool construction and leakage auditing
# ---------------------------------------------------------------------------


def _audit_pool(pool: Dataset):
    bad = np.flatnonzero((pool.role == TARGET_TEST) & (pool.labels != 0))
    if bad.size:
        for hook in _leak_hooks:
            hook(bad)
        raise AssertionError(f"held-out labels leaked into the training pool: {bad}")


def _with_role(ds: Dataset, role: str, strip_labels: bool = False) -> Dataset:
    labels = np.zeros(ds.n, dtype=int) if strip_labels else ds.labels
    return Dataset(features=ds.features, labels=labels,
                   experiment_id=ds.experiment_id, subject_id=ds.subject_id,
                   role=np.full(ds.n, role, dtype=object))


def build_pool(task: TransferTask, train_idx, test_idx, transductive: bool):
    """Training pool plus the held-out fold's features and true labels."""
    target = task.target
    parts = [_with_role(src, SOURCE) for src in task.sources]
    parts.append(_with_role(target.subset(train_idx), TARGET_LABELED))
    test = target.subset(test_idx)
    if transductive:
        parts.append(_with_role(test, TARGET_TEST, strip_labels=True))
    pool = concat(parts)
    return pool, test.features, test.labels


def _mask_validation(pool: Dataset, val_idx) -> Dataset:
    role = pool.role.copy()
    labels = pool.labels.copy()
    role[val_idx] = TARGET_TEST
    labels[val_idx] = 0
    return Dataset(features=pool.features, labels=labels,
                   experiment_id=pool.experiment_id, subject_id=pool.subject_id,
                   role=role)


def _stratified_folds(labels: np.ndarray, k: int, rng) -> list[np.ndarray]:
    """Partition indices into k folds, round-robin within each class."""
    folds = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        for j, i in enumerate(idx):
            folds[j % k].append(i)
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _inner_splits(labeled_idx, labels, protocol: Protocol, rng):
    splits = []
    n_val = max(1, int(round(protocol.inner_validation_fraction * labeled_idx.size)))
    for _ in range(protocol.inner_splits):
        perm = rng.permutation(labeled_idx)
        val, train = perm[:n_val], perm[n_val:]
        if np.unique(labels[train]).size < 2:
            raise ValueError("degenerate validation split: single-class training set")
        splits.append((train, val))
    return splits


# ---------------------------------------------------------------------------
# fitting and prediction per method
# ---------------------------------------------------------------------------


def _svm_on_features(Z_train, y_train, Z_query, spec, C):
    svm = baselines.fit_svm(Z_train, y_train, spec, C)
    return baselines.svm_predict(svm, Z_query)


def _fit_predict(method: Method, pool: Dataset, params: dict, X_query: np.ndarray):
    _audit_pool(pool)
    if method.name in _custom_methods:
        return _custom_methods[method.name](pool, method, params, X_query)
    spec = method.kernel
    if spec.family == RBF and "gamma" in params:
        spec = KernelSpec(RBF, gamma=params["gamma"])
    if method.name == DISVM:
        m = model.fit(pool, spec, C=params.get("C", 1.0),
                      lam=params.get("lambda", 1.0))
        return model.predict(m, X_query)
    if method.name == SVM:
        lab = pool.labels != 0
        svm = baselines.fit_svm(pool.features[:, lab], pool.labels[lab],
                                spec, params.get("C", 1.0))
        return baselines.svm_predict(svm, X_query)
    if method.name in _PROJECTION_METHODS:
        h = int(params.get("h", 1))
        C = params.get("C", 1.0)
        lab = pool.labels != 0
        if method.name == PCA_T:
            tgt = pool.role != SOURCE
            proj = baselines.fit_pca(pool.features[:, tgt], h)
            lab = lab & tgt
        elif method.name == PCA_ST:
            proj = baselines.fit_pca(pool.features, h)
        elif method.name == MIDA:
            proj = baselines.fit_mida(pool.features, encode_domains(pool), h)
        else:
            proj = baselines.fit_smida(pool.features, encode_domains(pool),
                                       recode_labels(pool), h)
        Z_train = baselines.transform(proj, pool.features[:, lab])
        Z_query = baselines.transform(proj, X_query)
        return _svm_on_features(Z_train, pool.labels[lab], Z_query, spec, C)
    raise ValueError(f"unknown method {method.name!r}")


def _h_candidates(method: Method, pool: Dataset) -> tuple:
    if method.name == PCA_T:
        cap = min(pool.d, int(np.sum(pool.role != SOURCE)))
    elif method.name in (PCA_ST,):
        cap = min(pool.d, pool.n)
    else:
        cap = pool.n
    grid = [h for h in method.grid("h", H_GRID) if h <= cap]
    return tuple(grid) if grid else (cap,)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


class _PoolEngine:
    """Cached margin-QP machinery for repeated fits on one pool."""

    def __init__(self, pool: Dataset, spec: KernelSpec, with_penalty: bool):
        self.pool = pool
        self.caches: dict[float, MarginQpCache] = {}
        self.spec = spec
        self.with_penalty = with_penalty

    def cache(self, gamma=None) -> MarginQpCache:
        key = float(gamma) if gamma is not None else -1.0
        if key not in self.caches:
            spec = self.spec
            if gamma is not None:
                spec = KernelSpec(RBF, gamma=gamma)
            K = gram(self.pool.features, self.pool.features, spec)
            P = None
            if self.with_penalty:
                P = model.penalty_matrix(K, encode_domains(self.pool).A)
            self.caches[key] = MarginQpCache(K, P)
        return self.caches[key]

    def val_accuracy(self, y_masked, val, C, lam=0.0, gamma=None) -> Fraction:
        cache = self.cache(gamma)
        # hyper-parameter scoring only needs decision signs, so the fast
        # uncertified solve is sufficient here
        fit = cache.solve(y_masked, C, lam, exact=False)
        f = cache.K[val, :] @ fit.beta
        preds = np.where(f >= 0.0, 1, -1)
        return Fraction(int(np.sum(preds == self.pool.labels[val])), len(val))


def _best(scores):
    """(candidate, mean accuracy) with ties toward the earliest candidate."""
    best_cand, best_score = None, None
    for cand, score in scores:
        if best_score is None or score > best_score:
            best_cand, best_score = cand, score
    return best_cand


def grid_search(pool: Dataset, method: Method, protocol: Protocol, rng) -> dict:
    """Pick hyper-parameters by mean validation accuracy over random splits.

    The domain-independent SVM uses the two-stage search: C at lambda = 1,
    then lambda at the chosen C. Other methods search their full grid. Ties
    break toward the candidate earliest in ascending grid order.
    """
    _audit_pool(pool)
    if method.name in _custom_methods and not method.grids:
        return {}
    labeled_idx = np.flatnonzero(pool.labels != 0)
    splits = _inner_splits(labeled_idx, pool.labels, protocol, rng)
    c_grid = method.grid("C", C_GRID)
    gammas = method.grid("gamma", GAMMA_GRID) if method.kernel.family == RBF else (None,)

    if method.name in (DISVM, SVM):
        engine = _PoolEngine(pool, method.kernel, with_penalty=method.name == DISVM)
        masked = []
        for train, val in splits:
            y = pool.labels.astype(float).copy()
            y[val] = 0.0
            masked.append((y, val))

        def mean_acc(C, lam, gamma):
            total = Fraction(0)
            for y, val in masked:
                total += engine.val_accuracy(y, val, C, lam, gamma)
            return total

        if method.name == DISVM:
            best_c = _best(((c, mean_acc(c, 1.0, None)) for c in c_grid))
            lam_grid = method.grid("lambda", LAMBDA_GRID)
            best_lam = _best(((l, mean_acc(best_c, l, None)) for l in lam_grid))
            return {"C": best_c, "lambda": best_lam}
        cands = [(c, g) for c in c_grid for g in gammas]
        best_c, best_g = _best(((cand, mean_acc(cand[0], 0.0, cand[1]))
                                for cand in cands))
        chosen = {"C": best_c}
        if best_g is not None:
            chosen["gamma"] = best_g
        return chosen

    if method.name in _PROJECTION_METHODS:
        h_grid = _h_candidates(method, pool)
        cands = [{"h": h, "C": c, **({} if g is None else {"gamma": g})}
                 for h in h_grid for c in c_grid for g in gammas]
    elif method.name in _custom_methods:
        keys = [k for k, _ in method.grids]
        cands = [dict(zip(keys, vals))
                 for vals in itertools.product(*(v for _, v in method.grids))]
    else:
        raise ValueError(f"unknown method {method.name!r}")

    scored = []
    for cand in cands:
        total = Fraction(0)
        for train, val in splits:
            sub = _mask_validation(pool, val)
            preds = _fit_predict(method, sub, cand, pool.features[:, val])
            total += Fraction(int(np.sum(preds == pool.labels[val])), len(val))
        scored.append((cand, total))
    return _best(scored)


# ---------------------------------------------------------------------------
# cross-validation and sweeps
# ---------------------------------------------------------------------------


def _accuracy(preds, truth) -> Fraction:
    return Fraction(int(np.sum(preds == truth)), len(truth))


def _summarize(fracs):
    floats = [float(a) for a in fracs]
    mean = float(sum(fracs, Fraction(0)) / len(fracs))
    std = float(np.std(floats))
    return floats, mean, std


def cross_validate(task: TransferTask, method: Method, protocol: Protocol) -> CvReport:
    """Repeated stratified k-fold CV on the target; deterministic per seed."""
    target = task.target
    if np.unique(target.labels[target.labels != 0]).size < 2:
        raise ValueError("target must contain both classes")
    if method.name not in BUILTIN_METHODS and method.name not in _custom_methods:
        raise ValueError(f"unknown method {method.name!r}")
    accs, chosen = [], []
    for r in range(protocol.outer_repeats):
        fold_rng = np.random.default_rng(np.random.SeedSequence([protocol.seed, r]))
        folds = _stratified_folds(target.labels, protocol.outer_folds, fold_rng)
        for f, test_idx in enumerate(folds):
            if test_idx.size == 0:
                raise ValueError("fold size smaller than the class count")
            train_idx = np.setdiff1d(np.arange(target.n), test_idx)
            pool, X_test, y_test = build_pool(task, train_idx, test_idx,
                                              protocol.transductive)
            inner_rng = np.random.default_rng(
                np.random.SeedSequence([protocol.seed, r, f])
            )
            params = grid_search(pool, method, protocol, inner_rng)
            preds = _fit_predict(method, pool, params, X_test)
            accs.append(_accuracy(preds, y_test))
            chosen.append(params)
    floats, mean, std = _summarize(accs)
    return CvReport(accuracies=floats, mean=mean, std=std, chosen=chosen)


def sensitivity_sweep(task: TransferTask, param: str, grid, protocol: Protocol,
                      kernel: KernelSpec = KernelSpec(),
                      fixed: float | None = None) -> list[SweepPoint]:
    """Accuracy of the domain-independent SVM across one hyper-parameter grid.

    The other hyper-parameter is held fixed (lambda = 1 for the C sweep, C = 1
    for the lambda sweep) and each grid point is scored by one round of
    stratified k-fold CV on the target.
    """
    if param not in ("C", "lambda"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    grid = tuple(grid)
    if not grid:
        raise ValueError("sweep grid must be nonempty")
    if fixed is None:
        fixed = 1.0
    target = task.target
    fold_rng = np.random.default_rng(np.random.SeedSequence([protocol.seed, 0]))
    folds = _stratified_folds(target.labels, protocol.outer_folds, fold_rng)
    per_value = {v: [] for v in grid}
    for f, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(target.n), test_idx)
        pool, X_test, y_test = build_pool(task, train_idx, test_idx,
                                          protocol.transductive)
        _audit_pool(pool)
        engine = _PoolEngine(pool, kernel, with_penalty=True)
        cache = engine.cache()
        y = pool.labels.astype(float)
        K_test = gram(X_test, pool.features, kernel)
        for v in grid:
            C, lam = (v, fixed) if param == "C" else (fixed, v)
            fit = cache.solve(y, C, lam)
            preds = np.where(K_test @ fit.beta >= 0.0, 1, -1)
            per_value[v].append(_accuracy(preds, y_test))
    out = []
    for v in grid:
        _, mean, std = _summarize(per_value[v])
        out.append(SweepPoint(value=v, mean=mean, std=std))
    return out
