"""Divide-and-conquer pipeline: local models per subspace, stacked fusion.

`train_dc` fits the decomposition plan, trains one local classifier per
subspace view (concurrently when asked — tasks are pure and merged by
subspace index, so results are identical for any thread count), collects
the h x N local-output matrix R on the training instances, standardizes
its rows, and trains the global classifier on (R, y). `predict_dc` replays
the same stages with the stored parameters; the final label is
sign(global score) with sign(0) = +1.

R carries continuous local scores rather than hard labels so the global
learner sees margins. Row standardization (zero mean, unit variance over
training instances) makes the arbitrary local score scales commensurable;
rows that are constant on the training set are left untouched, and the
same affine map is replayed at predict time. By default the fusion R is
the locals' resubstitution output; an optional 5-fold cross-fitted R
(`crossfit=True`) guards against the stacking overfit at the cost of
five extra local fits.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classify import label_from_score, train_linear, train_trbf_krr
from .dataio import Dataset
from .decompose import (_plan_triple, apply_decomposition, compose,
                        fit_plan_entry, part_seed)
from .errors import ConfigError, DataError, FeatdcError

CONSTANT_ROW_TOL = 1e-12


@dataclass
class LearnerSpec:
    """Which learner to use for a pipeline role and its hyperparameters
    (None defers to the data-scaled defaults)."""

    type: str = "linear"
    lam: Optional[float] = None
    sigma: Optional[float] = None
    p: int = 2

    def __post_init__(self):
        if self.type not in ("linear", "trbf"):
            raise ConfigError(f"unknown learner type {self.type!r}")


@dataclass
class Guards:
    max_dense_features: int = 4096
    max_intrinsic_dim: int = 20000


@dataclass
class DcModel:
    decomposition: object
    locals: list
    global_model: object
    r_shift: np.ndarray
    r_scale: np.ndarray
    config_snapshot: dict = field(default_factory=dict)
    fit_timings: dict = field(default_factory=dict)

    @property
    def h(self):
        return len(self.locals)


@contextmanager
def _stage(name):
    """Tag errors escaping a pipeline stage with the stage name."""
    try:
        yield
    except FeatdcError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def train_learner(spec, x, y, guards, seed):
    if spec.type == "linear":
        return train_linear(x, y, lam=spec.lam,
                            max_dense=guards.max_dense_features)
    return train_trbf_krr(x, y, sigma=spec.sigma, p=spec.p, lam=spec.lam,
                          max_intrinsic_dim=guards.max_intrinsic_dim,
                          seed=seed)


def _map_indexed(fn, count, threads):
    """Run fn(i) for i in 0..count-1, merged by index; pure tasks only."""
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(i) for i in range(count)]


def build_r(local_models, views):
    """Stack continuous local scores into the h x N local-output matrix."""
    if len(local_models) != len(views):
        raise DataError(
            f"{len(local_models)} local models but {len(views)} subspace views"
        )
    rows = [np.asarray(m.decision_function(v), dtype=np.float64)
            for m, v in zip(local_models, views)]
    return np.vstack(rows)


def standardize_rows(r):
    """Per-row shift/scale to zero mean unit variance; near-constant rows
    keep shift 0 and scale 1 (left untouched)."""
    mean = r.mean(axis=1)
    std = r.std(axis=1)
    constant = std <= CONSTANT_ROW_TOL * np.maximum(1.0, np.abs(mean))
    shift = np.where(constant, 0.0, mean)
    scale = np.where(constant, 1.0, std)
    return shift, scale


def apply_standardization(r, shift, scale):
    return (r - shift[:, None]) / scale[:, None]


def _column_subset(view, idx):
    return view[:, idx]


def _crossfit_r(local_spec, views, y, guards, seed, threads, folds=5):
    """Out-of-fold local scores: each instance scored by locals that never
    saw it. Fold assignment is a seeded permutation chopped evenly."""
    n = views[0].shape[1]
    if n < folds:
        raise DataError(f"cross-fitted fusion needs at least {folds} instances")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5F)))
    perm = rng.permutation(n)
    r = np.zeros((len(views), n))
    for f in range(folds):
        hold = np.sort(perm[f::folds])
        keep = np.sort(np.setdiff1d(np.arange(n), hold, assume_unique=False))

        def task(i):
            model = train_learner(local_spec, _column_subset(views[i], keep),
                                  y[keep], guards, _role_seed(seed, "cvlocal", i))
            return model.decision_function(_column_subset(views[i], hold))

        scores = _map_indexed(task, len(views), threads)
        for i, s in enumerate(scores):
            r[i, hold] = s
    return r


def _role_seed(seed, role, index):
    entropy = (int(seed), sum(ord(c) for c in role), int(index))
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def train_dc(train, plan, local=None, global_=None, seed=0, threads=1,
             guards=None, crossfit=False, dca_ridge=None, config_snapshot=None):
    """Fit the full divide-and-conquer model on a training Dataset.

    plan is a list of (method, n_subspaces, group_size) entries; local and
    global LearnerSpecs default to linear locals and a TRBF global.
    """
    if not isinstance(train, Dataset):
        raise DataError("train_dc expects a Dataset")
    local = local or LearnerSpec(type="linear")
    global_ = global_ or LearnerSpec(type="trbf")
    guards = guards or Guards()
    y = train.y.astype(np.float64)
    timings = {}

    t0 = time.perf_counter()
    with _stage("decomposition fitting"):
        comp, per_method = _timed_fit_plan(train.X, y, plan, seed, guards,
                                           dca_ridge)
    timings.update(per_method)
    timings["fit_decomposition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("local training"):
        views = apply_decomposition(comp, train.X)

        def task(i):
            return train_learner(local, views[i], y, guards,
                                 _role_seed(seed, "local", i))

        local_models = _map_indexed(task, len(views), threads)
    timings["local_training"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with _stage("fusion"):
        if crossfit:
            r = _crossfit_r(local, views, y, guards, seed, threads)
        else:
            r = build_r(local_models, views)
        shift, scale = standardize_rows(r)
        rs = apply_standardization(r, shift, scale)
        global_model = train_learner(global_, rs, y, guards,
                                     _role_seed(seed, "global", 0))
    timings["fusion"] = time.perf_counter() - t0

    return DcModel(
        decomposition=comp,
        locals=local_models,
        global_model=global_model,
        r_shift=shift,
        r_scale=scale,
        config_snapshot=dict(config_snapshot or {}),
        fit_timings=timings,
    )


def _timed_fit_plan(x, y, plan, seed, guards, dca_ridge):
    """Fit plan entries one at a time (with the same child seeds fit_plan
    would derive) so each sub-method's cost is visible in reports."""
    t_by_method = {}
    parts = []
    for i, entry in enumerate(plan):
        method = _plan_triple(entry)[0]
        t0 = time.perf_counter()
        parts.append(fit_plan_entry(x, y, entry, part_seed(seed, i),
                                    max_dense=guards.max_dense_features,
                                    dca_ridge=dca_ridge))
        t_by_method[method] = t_by_method.get(method, 0.0) + (
            time.perf_counter() - t0)
    comp = compose(parts)
    return comp, {f"fit_{m}": t for m, t in t_by_method.items()}


def predict_dc(model, test, threads=1):
    """(labels, scores) for a Dataset or raw feature matrix."""
    x = test.X if isinstance(test, Dataset) else test
    with _stage("prediction"):
        views = apply_decomposition(model.decomposition, x)

        def task(i):
            return np.asarray(model.locals[i].decision_function(views[i]))

        rows = _map_indexed(task, len(views), threads)
        r = np.vstack(rows)
        rs = apply_standardization(r, model.r_shift, model.r_scale)
        scores = model.global_model.decision_function(rs)
    return label_from_score(scores), scores


def evaluate(labels_pred, labels_true):
    """Error-rate percentage and confusion counts."""
    pred = np.asarray(labels_pred).ravel()
    true = np.asarray(labels_true).ravel()
    if pred.shape[0] != true.shape[0]:
        raise DataError(
            f"prediction length {pred.shape[0]} != truth length {true.shape[0]}"
        )
    n = pred.shape[0]
    mism = int(np.sum(pred != true))
    return {
        "n": n,
        "mismatches": mism,
        "error_rate_pct": 100.0 * mism / n,
        "confusion": {
            "tp": int(np.sum((pred == 1) & (true == 1))),
            "tn": int(np.sum((pred == -1) & (true == -1))),
            "fp": int(np.sum((pred == 1) & (true == -1))),
            "fn": int(np.sum((pred == -1) & (true == 1))),
        },
    }
