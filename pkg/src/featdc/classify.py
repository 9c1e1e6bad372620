"""Local and global learners.

Two model families cover both roles in the pipeline:

* a regularized least-squares linear classifier with an unregularized
  bias (the bias row of the augmented normal equations is eliminated by
  centering, so only the weights are penalized), and
* kernel ridge regression with the order-p truncated-RBF feature map,
  trained directly in the finite intrinsic space of dimension
  J = C(m + p, p).

Both produce continuous decision scores; sign(score) is the label, with
sign(0) = +1.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lsmr

from .decompose import feature_scatter
from .errors import ConfigError, DataError, NumericError
from .numerics import solve_spd

DEFAULT_MAX_DENSE_FEATURES = 4096
DEFAULT_MAX_INTRINSIC_DIM = 20000
EXPAND_CHUNK = 256


def default_lam(n_instances):
    """Data-scaled ridge default: 1e-3 per training instance."""
    return 1e-3 * n_instances


def _check_finite_features(x):
    data = x.data if sp.issparse(x) else x
    if not np.all(np.isfinite(data)):
        raise NumericError("training features contain non-finite values")


def _as_2d(x):
    if sp.issparse(x):
        return x
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[:, None]
    return x


# ---------------------------------------------------------------------------
# linear model


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    lam: float
    solver: str = "dense"

    @property
    def n_features(self):
        return self.weights.shape[0]

    def decision_function(self, x):
        x = _as_2d(x)
        if x.shape[0] != self.n_features:
            raise DataError(
                f"model expects {self.n_features} features, got {x.shape[0]}"
            )
        return np.asarray(x.T @ self.weights).ravel() + self.bias

    def predict(self, x):
        return label_from_score(self.decision_function(x))


def label_from_score(scores):
    """sign with sign(0) = +1, as int64 labels."""
    return np.where(np.asarray(scores) >= 0.0, 1, -1).astype(np.int64)


def _centering_operator(x, mu):
    """Matrix-free X_c^T = (X - mu 1^T)^T as an (N x d) operator."""
    d, n = x.shape

    def matvec(w):
        w = np.asarray(w).ravel()
        return np.asarray(x.T @ w).ravel() - float(mu @ w)

    def rmatvec(v):
        v = np.asarray(v).ravel()
        return np.asarray(x @ v).ravel() - mu * float(v.sum())

    return LinearOperator((n, d), matvec=matvec, rmatvec=rmatvec,
                          dtype=np.float64)


def _row_means(x):
    if sp.issparse(x):
        return np.asarray(x.mean(axis=1)).ravel()
    return x.mean(axis=1)


def train_linear(x, y, lam=None, max_dense=DEFAULT_MAX_DENSE_FEATURES):
    """Minimize sum_n (w.x_n + b - y_n)^2 + lam ||w||^2 (bias unpenalized).

    Features up to `max_dense` go through the dense normal equations via
    a Cholesky solve; larger dimensions use the damped LSMR least-squares
    iteration on the centered operator, which minimizes the identical
    objective. Both routes must leave a relative normal-equation residual
    of at most 1e-8.
    """
    x = _as_2d(x)
    _check_finite_features(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    d, n = x.shape
    if y.shape[0] != n:
        raise DataError(f"{n} instances but {y.shape[0]} labels")
    if lam is None:
        lam = default_lam(n)
    if lam <= 0:
        raise ConfigError(f"ridge parameter must be positive, got {lam}")

    mu = _row_means(x)
    ybar = float(y.mean())
    yc = y - ybar
    rhs = np.asarray(x @ yc).ravel()  # X_c y_c = X y_c since y_c sums to 0

    if d <= max_dense:
        a = feature_scatter(x, center=True) + lam * np.eye(d)
        w = solve_spd(a, rhs)
        resid = np.linalg.norm(a @ w - rhs)
        solver = "dense"
    else:
        w, resid = _lsmr_weights(x, mu, yc, lam, rhs)
        solver = "lsmr"
    rel = resid / (1.0 + np.linalg.norm(rhs))
    if not np.isfinite(rel) or rel > 1e-8:
        raise NumericError(
            f"linear normal-equation residual {rel:.3e} exceeds 1e-8"
        )
    bias = ybar - float(mu @ w)
    return LinearModel(weights=w, bias=bias, lam=float(lam), solver=solver)


def _lsmr_weights(x, mu, yc, lam, rhs):
    op = _centering_operator(x, mu)
    d = x.shape[0]
    w = None
    for maxiter in (max(4 * d, 2000), max(40 * d, 20000)):
        result = lsmr(op, yc, damp=math.sqrt(lam), atol=1e-12, btol=1e-12,
                      conlim=1e14, maxiter=maxiter, x0=w)
        w = result[0]
        resid = np.linalg.norm(op.rmatvec(op.matvec(w)) + lam * w - rhs)
        if resid / (1.0 + np.linalg.norm(rhs)) <= 1e-8:
            break
    return w, resid


def predict_linear(model, x):
    return label_from_score(model.decision_function(x))


# ---------------------------------------------------------------------------
# truncated-RBF feature map


def trbf_dim(m, p):
    return math.comb(m + p, p)


def trbf_indices(m, p):
    """Multi-indices with |a| <= p in graded lexicographic order, each
    encoded as the sorted tuple of coordinates it multiplies (the empty
    tuple is the constant term)."""
    out = []
    for k in range(p + 1):
        out.extend(itertools.combinations_with_replacement(range(m), k))
    return out


def trbf_expand(x, sigma, p):
    """Order-p truncated-RBF feature map.

    For every multi-index a with |a| <= p the output coordinate is

        exp(-||x||^2 / (2 sigma^2)) * prod_k (x_k/sigma)^a_k / sqrt(prod_k a_k!)

    so that phi(x).phi(y) equals the degree-p truncation of the RBF
    kernel's exponential series. Accepts a vector (m,) or a batch (m, n);
    the output is (J,) or (J, n) with J = C(m+p, p), coordinates in
    graded lexicographic multi-index order.
    """
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if p < 1:
        raise ConfigError(f"order p must be at least 1, got {p}")
    single = np.ndim(x) == 1 and not sp.issparse(x)
    x = _as_2d(x)
    if sp.issparse(x):
        x = x.toarray()
    if not np.all(np.isfinite(x)):
        raise NumericError("input to the feature map contains non-finite values")
    m, n = x.shape
    u = x / sigma
    envelope = np.exp(-0.5 * np.einsum("ij,ij->j", u, u))
    combos = trbf_indices(m, p)
    z = np.empty((len(combos), n))
    z[0] = 1.0
    coef = np.empty(len(combos))
    coef[0] = 1.0
    row_of = {(): 0}
    for r, c in enumerate(combos[1:], start=1):
        parent = c[:-1]
        last = c[-1]
        pr = row_of[parent]
        z[r] = z[pr] * u[last]
        coef[r] = coef[pr] / math.sqrt(c.count(last))
        row_of[c] = r
    z *= coef[:, None]
    z *= envelope[None, :]
    return z[:, 0] if single else z


def truncated_rbf_kernel(x, y, sigma, p):
    """Degree-p truncation of the RBF kernel between two vectors: the
    induced kernel of `trbf_expand` (test and dual-form oracle)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    s2 = sigma * sigma
    dot = float(x @ y) / s2
    series = sum(dot ** k / math.factorial(k) for k in range(p + 1))
    return math.exp(-(x @ x + y @ y) / (2 * s2)) * series


def sigma_heuristic(x, seed=0, max_sample=256):
    """Median pairwise distance over a seeded instance subsample (the
    usual kernel-bandwidth rule of thumb); falls back to 1.0 when the
    median is degenerate."""
    x = _as_2d(x)
    n = x.shape[1]
    rng = np.random.default_rng(seed)
    take = min(n, max_sample)
    cols = np.sort(rng.choice(n, size=take, replace=False))
    xs = x[:, cols]
    gram = np.asarray((xs.T @ xs).toarray() if sp.issparse(xs) else xs.T @ xs)
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    iu = np.triu_indices(take, k=1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.median(np.sqrt(np.clip(d2[iu], 0.0, None))))
    if not np.isfinite(med) or med <= 0.0:
        return 1.0
    return med


# ---------------------------------------------------------------------------
# TRBF kernel ridge regression (intrinsic-space path)


@dataclass
class TrbfModel:
    weights: np.ndarray
    sigma: float
    p: int
    lam: float
    n_features: int

    @property
    def intrinsic_dim(self):
        return self.weights.shape[0]

    def decision_function(self, x):
        x = _as_2d(x)
        if x.shape[0] != self.n_features:
            raise DataError(
                f"model expects {self.n_features} features, got {x.shape[0]}"
            )
        n = x.shape[1]
        scores = np.empty(n)
        for lo in range(0, n, EXPAND_CHUNK):
            hi = min(lo + EXPAND_CHUNK, n)
            z = trbf_expand(x[:, lo:hi], self.sigma, self.p)
            scores[lo:hi] = self.weights @ z
        return scores

    def predict(self, x):
        return label_from_score(self.decision_function(x))


def train_trbf_krr(x, y, sigma=None, p=2, lam=None,
                   max_intrinsic_dim=DEFAULT_MAX_INTRINSIC_DIM, seed=0):
    """Kernel ridge regression through the explicit truncated-RBF map.

    All columns are expanded to Z (J x N, accumulated in fixed 256-column
    chunks so results are reproducible regardless of caller threading)
    and the intrinsic-space normal equations (Z Z^T + lam I) u = Z y are
    solved with a Cholesky factorization: the J^2 N + J^3 path, which
    beats the N^3 dual path whenever J stays moderate.
    """
    x = _as_2d(x)
    _check_finite_features(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, n = x.shape
    if y.shape[0] != n:
        raise DataError(f"{n} instances but {y.shape[0]} labels")
    j = trbf_dim(m, p)
    if j > max_intrinsic_dim:
        raise ConfigError(
            f"intrinsic dimension C({m}+{p},{p}) = {j} exceeds the guard "
            f"{max_intrinsic_dim}; lower the order p or fuse fewer inputs"
        )
    if sigma is None:
        sigma = sigma_heuristic(x, seed=seed)
    if lam is None:
        lam = default_lam(n)
    if lam <= 0:
        raise ConfigError(f"ridge parameter must be positive, got {lam}")

    a = lam * np.eye(j)
    b = np.zeros(j)
    for lo in range(0, n, EXPAND_CHUNK):
        hi = min(lo + EXPAND_CHUNK, n)
        z = trbf_expand(x[:, lo:hi], sigma, p)
        a += z @ z.T
        b += z @ y[lo:hi]
    u = solve_spd(a, b)
    return TrbfModel(weights=u, sigma=float(sigma), p=int(p),
                     lam=float(lam), n_features=m)


def predict_trbf(model, x):
    return label_from_score(model.decision_function(x))
