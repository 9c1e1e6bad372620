"""Feature-space decomposition: five sub-methods and their composition.

Each sub-method produces a `SubspaceDecomposition`: a linear transform of
the feature space plus index groups that carve the transformed coordinates
into subspaces. A `CompositeDecomposition` stacks several sub-methods; its
total subspace count h is what the divide-and-conquer pipeline fans out to.

Sub-methods
-----------
rd   seeded random index groups over the raw features; identity transform
     (never materialized).
pca  rows of the transform are eigenvectors of the centered feature
     scatter, ranked by descending eigenvalue.
dca  supervised variant: generalized eigenvectors of the centered scatter
     against the ridged within-class scatter.
bcd  blocked Gaussian (Doolittle) elimination that congruence-transforms
     the uncentered feature gram to block-diagonal form; the transform is
     the product of unit-block-triangular eliminators.
abd  block-level gram matrix (sum of elementwise products per block pair),
     eigendecomposed; the transform mixes whole equal-size blocks with the
     eigenvector weights and is orthogonal by construction.

bcd and abd rearrange features and may pad the feature space with zero
rows so the block grid is exact; padding is recorded and re-applied to
held-out data automatically.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .dataio import Dataset
from .errors import ConfigError, DataError, NumericError
from .numerics import gen_sym_eig, solve_spd, sym_eig

METHODS = ("rd", "pca", "dca", "bcd", "abd")


@dataclass
class SubspaceDecomposition:
    """One fitted sub-method.

    index_groups live in the output coordinate space (0-based). transform
    is None for rd (identity), a full (n_out x n_out) matrix for pca/dca/
    bcd, and the small block-mixing eigenvector matrix V for abd (the
    effective transform is kron(V.T, I_blocksize), never materialized for
    large feature counts). feature_order records bcd/abd's rearrangement
    of the (zero-padded) input rows.
    """

    method: str
    n_features_in: int
    n_features_out: int
    index_groups: list
    transform: Optional[np.ndarray] = None
    feature_order: Optional[np.ndarray] = None
    block_size: Optional[int] = None
    eigenvalues: Optional[np.ndarray] = None
    fit_stats: dict = field(default_factory=dict)

    @property
    def n_subspaces(self):
        return len(self.index_groups)


@dataclass
class CompositeDecomposition:
    """Ordered stack of fitted sub-methods; h = total subspace count."""

    parts: list

    def __post_init__(self):
        if not self.parts:
            raise ConfigError("composite decomposition needs at least one part")
        dims = {p.n_features_in for p in self.parts}
        if len(dims) != 1:
            raise ConfigError(f"parts disagree on input feature count: {sorted(dims)}")

    @property
    def n_features_in(self):
        return self.parts[0].n_features_in

    @property
    def h(self):
        return sum(p.n_subspaces for p in self.parts)


def _as_matrix(x):
    """Accept a Dataset or a raw (sparse or dense) n_features x n matrix."""
    if isinstance(x, Dataset):
        return x.X
    if sp.issparse(x):
        return x
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# index-group construction


def overlapping_groups(n_coords, n_subspaces, group_size, rng):
    """Seeded-shuffle grouping: permute once, take consecutive runs, and
    re-shuffle whenever a run would fall off the end (so oversubscribed
    plans produce overlapping groups)."""
    if group_size > n_coords:
        raise ConfigError(f"group size {group_size} exceeds {n_coords} coordinates")
    perm = rng.permutation(n_coords)
    pos = 0
    groups = []
    for _ in range(n_subspaces):
        if pos + group_size > n_coords:
            perm = rng.permutation(n_coords)
            pos = 0
        groups.append(np.sort(perm[pos:pos + group_size]).astype(np.int64))
        pos += group_size
    return groups


def disjoint_groups(n_features, n_subspaces, group_size, rng):
    """Disjoint equal-size grouping for bcd/abd, padding with zero features.

    The effective group size is max(group_size, ceil(M / n_subspaces)) so
    the groups always cover every real feature; real features are shuffled
    into the leading blocks and the zero padding fills the tail. Returns
    (groups over the padded index space, padded feature count).
    """
    size = max(group_size, -(-n_features // n_subspaces))
    padded = size * n_subspaces
    order = np.concatenate([rng.permutation(n_features),
                            np.arange(n_features, padded)])
    return (
        [np.sort(order[i * size:(i + 1) * size]).astype(np.int64) for i in range(n_subspaces)],
        padded,
    )


def _check_partition(groups, equal_sizes):
    sizes = [len(g) for g in groups]
    if not groups or min(sizes) < 1:
        raise ConfigError("index groups must be non-empty")
    if equal_sizes and len(set(sizes)) != 1:
        raise ConfigError(f"groups must have equal sizes, got {sizes}")
    total = int(np.sum(sizes))
    flat = np.concatenate(groups)
    if flat.min() < 0 or flat.max() != total - 1 or np.unique(flat).size != total:
        raise ConfigError(
            "index groups must disjointly cover 0..n-1 (pad the feature "
            "space first if the plan oversubscribes it)"
        )
    return total


def _padded_rearranged(x, order, n_padded):
    """Zero-pad x to n_padded rows and rearrange rows by `order`."""
    m, n = x.shape
    if n_padded < m:
        raise ConfigError(f"padded size {n_padded} smaller than feature count {m}")
    if sp.issparse(x):
        xp = sp.csc_array((x.tocsc().data, x.tocsc().indices, x.tocsc().indptr),
                          shape=(n_padded, n))
        return sp.csr_array(xp.tocsr()[order])
    xp = np.zeros((n_padded, n))
    xp[:m] = x
    return xp[order]


# ---------------------------------------------------------------------------
# scatter matrices


def feature_scatter(x, center):
    """Dense feature scatter X X^T, optionally after centering each row.

    Overflow is not trapped here: non-finite entries are rejected by the
    eigensolvers with a NumericError naming the failing stage.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        if sp.issparse(x):
            s = (x @ x.T).toarray()
            mu = np.asarray(x.mean(axis=1)).ravel()
        else:
            s = x @ x.T
            mu = x.mean(axis=1)
        if center:
            s = s - x.shape[1] * np.outer(mu, mu)
        return (s + s.T) / 2.0


def within_class_scatter(x, y):
    """Sum over classes of the class-centered scatter (two classes expected)."""
    labels = np.unique(np.asarray(y))
    if labels.size < 2:
        raise DataError("within-class scatter needs both classes present")
    m = x.shape[0]
    sw = np.zeros((m, m))
    for label in labels:
        idx = np.flatnonzero(np.asarray(y) == label)
        xl = x[:, idx]
        sw += feature_scatter(xl, center=True)
    return (sw + sw.T) / 2.0


def _guard_dense(m, max_dense, method):
    if m > max_dense:
        raise ConfigError(
            f"{method} needs dense {m}x{m} work but the guard allows at most "
            f"{max_dense} features; use rd or abd for this dimension"
        )


# ---------------------------------------------------------------------------
# sub-method fitting


def make_rd(n_features, n_subspaces, group_size, seed):
    """Random decomposition: identity transform, seeded index groups."""
    if n_subspaces < 1:
        raise ConfigError("need at least one subspace")
    rng = np.random.default_rng(seed)
    groups = overlapping_groups(n_features, n_subspaces, group_size, rng)
    return SubspaceDecomposition(
        method="rd",
        n_features_in=n_features,
        n_features_out=n_features,
        index_groups=groups,
    )


def fit_pca(x, n_subspaces, group_size, seed=0, center=True, max_dense=4096):
    """Principal-component transform; groups drawn over the rotated
    coordinates with the same seeded scheme as rd."""
    x = _as_matrix(x)
    m = x.shape[0]
    _guard_dense(m, max_dense, "pca")
    scatter = feature_scatter(x, center=center)
    values, vectors = sym_eig(scatter)
    rng = np.random.default_rng(seed)
    groups = overlapping_groups(m, n_subspaces, group_size, rng)
    return SubspaceDecomposition(
        method="pca",
        n_features_in=m,
        n_features_out=m,
        index_groups=groups,
        transform=vectors.T,
        eigenvalues=values,
        fit_stats={"scatter_norm": float(np.linalg.norm(scatter))},
    )


def default_dca_ridge(sw, scatter):
    """Scale-aware ridge: 1e-3 tr(S_w)/M, with a floor for degenerate S_w."""
    m = sw.shape[0]
    rho = 1e-3 * float(np.trace(sw)) / m
    if rho <= 0.0:
        rho = 1e-9 * (1.0 + float(np.trace(scatter)) / m)
    return rho


def fit_dca(x, y=None, rho=None, n_subspaces=1, group_size=None, seed=0,
            max_dense=4096):
    """Discriminant transform: generalized eigenvectors of the centered
    scatter against the ridged within-class scatter, descending eigenvalue."""
    if isinstance(x, Dataset) and y is None:
        y = x.y
    x = _as_matrix(x)
    if y is None:
        raise DataError("dca needs labels")
    m = x.shape[0]
    _guard_dense(m, max_dense, "dca")
    if group_size is None:
        group_size = m
    scatter = feature_scatter(x, center=True)
    sw = within_class_scatter(x, y)
    if rho is None:
        rho = default_dca_ridge(sw, scatter)
    if rho <= 0:
        raise ConfigError(f"dca ridge must be positive, got {rho}")
    ridged = sw + rho * np.eye(m)
    values, vectors = gen_sym_eig(scatter, ridged)
    rng = np.random.default_rng(seed)
    groups = overlapping_groups(m, n_subspaces, group_size, rng)
    return SubspaceDecomposition(
        method="dca",
        n_features_in=m,
        n_features_out=m,
        index_groups=groups,
        transform=vectors.T,
        eigenvalues=values,
        fit_stats={"ridge": float(rho)},
    )


def _solve_pivot(pivot, rhs_t, scatter_norm):
    """rhs_t @ pivot^-1 with a one-shot ridge retry on singular pivots."""
    try:
        return solve_spd(pivot, rhs_t.T).T
    except NumericError:
        eps = 1e-8 * scatter_norm / max(pivot.shape[0], 1)
        try:
            return solve_spd(pivot + eps * np.eye(pivot.shape[0]), rhs_t.T).T
        except NumericError as exc:
            raise NumericError(
                "bcd pivot block is singular even after ridge augmentation; "
                "regroup the features or drop constant ones"
            ) from exc


def fit_bcd(x, index_groups, center=False):
    """Blocked Doolittle elimination of the feature gram.

    index_groups must disjointly partition the (possibly padded) feature
    index range; `disjoint_groups` builds such a partition from a plan
    entry. Each eliminator is built against the current gram, so the
    accumulated transform is the product B_h ... B_1 and the final gram is
    block-diagonal up to roundoff.
    """
    x = _as_matrix(x)
    n_padded = _check_partition(index_groups, equal_sizes=False)
    order = np.concatenate(index_groups)
    xr = _padded_rearranged(x, order, n_padded)
    scatter = feature_scatter(xr, center=center)
    scatter_norm = float(np.linalg.norm(scatter))

    offsets = np.cumsum([0] + [len(g) for g in index_groups])
    w = np.eye(n_padded)
    s = scatter.copy()
    for i in range(len(index_groups) - 1):
        piv = slice(offsets[i], offsets[i + 1])
        below = slice(offsets[i + 1], n_padded)
        pivot = s[piv, piv]
        if not np.any(pivot) and not np.any(s[below, piv]):
            continue  # all-zero padding block: eliminator is the identity
        elim = _solve_pivot(pivot, s[below, piv], scatter_norm)
        s[below, :] -= elim @ s[piv, :]
        s[:, below] -= s[:, piv] @ elim.T
        w[below, :] -= elim @ w[piv, :]

    out_groups = [np.arange(offsets[i], offsets[i + 1], dtype=np.int64)
                  for i in range(len(index_groups))]
    off_norm = _offdiag_block_norm(s, offsets)
    return SubspaceDecomposition(
        method="bcd",
        n_features_in=x.shape[0],
        n_features_out=n_padded,
        index_groups=out_groups,
        transform=w,
        feature_order=order,
        fit_stats={
            "offdiag_block_residual": off_norm / scatter_norm if scatter_norm else 0.0,
            "scatter_norm": scatter_norm,
        },
    )


def _offdiag_block_norm(s, offsets):
    mask = np.ones_like(s, dtype=bool)
    for i in range(len(offsets) - 1):
        blk = slice(offsets[i], offsets[i + 1])
        mask[blk, blk] = False
    return float(np.linalg.norm(s[mask]))


def block_gram(x, index_groups):
    """Block-pair gram: entry (i, j) is the sum of the elementwise product
    of row-blocks i and j of the rearranged matrix."""
    n_padded = _check_partition(index_groups, equal_sizes=True)
    order = np.concatenate(index_groups)
    xr = _padded_rearranged(x, order, n_padded)
    size = len(index_groups[0])
    count = len(index_groups)
    gram = np.zeros((count, count))
    blocks = [xr[i * size:(i + 1) * size] for i in range(count)]
    for i in range(count):
        for j in range(i, count):
            if sp.issparse(xr):
                value = blocks[i].multiply(blocks[j]).sum()
            else:
                value = float(np.sum(blocks[i] * blocks[j]))
            gram[i, j] = gram[j, i] = value
    return gram, xr, order, size


def fit_abd(x, index_groups):
    """Approximately orthogonal block transform.

    Eigendecomposes the block-pair gram and mixes whole blocks with the
    eigenvector weights: output block i is sum_j V[j, i] * block_j, i.e.
    the effective transform is kron(V.T, I_blocksize), orthogonal because
    V is. Requires disjoint equal-size groups (zero-pad first).
    """
    x = _as_matrix(x)
    gram, _, order, size = block_gram(x, index_groups)
    values, vectors = sym_eig(gram)
    regram = vectors.T @ gram @ vectors
    off = regram - np.diag(np.diag(regram))
    gram_norm = float(np.linalg.norm(gram))
    count = len(index_groups)
    out_groups = [np.arange(i * size, (i + 1) * size, dtype=np.int64)
                  for i in range(count)]
    return SubspaceDecomposition(
        method="abd",
        n_features_in=x.shape[0],
        n_features_out=count * size,
        index_groups=out_groups,
        transform=vectors,
        feature_order=order,
        block_size=size,
        eigenvalues=values,
        fit_stats={
            "regram_offdiag_residual":
                float(np.linalg.norm(off)) / gram_norm if gram_norm else 0.0,
        },
    )


def abd_dense_transform(part):
    """Materialized effective transform of an abd part (tests, persistence,
    small dimensions only)."""
    return np.kron(part.transform.T, np.eye(part.block_size))


# ---------------------------------------------------------------------------
# composition and application


def compose(parts) -> CompositeDecomposition:
    return CompositeDecomposition(list(parts))


def _apply_part(part, x):
    sparse = sp.issparse(x)
    if part.method == "rd":
        rows = x.tocsr() if sparse else x
        return [rows[g] for g in part.index_groups]
    if part.method in ("pca", "dca"):
        w = part.transform
        y = (x.T @ w.T).T if sparse else w @ x
        return [y[g] for g in part.index_groups]
    if part.method == "bcd":
        xr = _padded_rearranged(x, part.feature_order, part.n_features_out)
        w = part.transform
        y = (xr.T @ w.T).T if sp.issparse(xr) else w @ xr
        return [y[g] for g in part.index_groups]
    if part.method == "abd":
        xr = _padded_rearranged(x, part.feature_order, part.n_features_out)
        size = part.block_size
        v = part.transform
        count = len(part.index_groups)
        blocks = [xr[j * size:(j + 1) * size] for j in range(count)]
        views = []
        for i in range(count):
            acc = blocks[0] * v[0, i]
            for j in range(1, count):
                acc = acc + blocks[j] * v[j, i]
            views.append(acc)
        return views
    raise ConfigError(f"unknown decomposition method {part.method!r}")


def apply_decomposition(comp: CompositeDecomposition, x):
    """Project data through every part and slice out the h subspace views.

    Views are returned part by part, groups in order within each part;
    each view is a (group_size x n_instances) matrix, sparse where the
    transform preserves sparsity (rd, abd) and dense otherwise.
    """
    x = _as_matrix(x)
    if x.shape[0] != comp.n_features_in:
        raise DataError(
            f"data has {x.shape[0]} features but the decomposition was "
            f"fitted on {comp.n_features_in}"
        )
    views = []
    for part in comp.parts:
        views.extend(_apply_part(part, x))
    return views


# ---------------------------------------------------------------------------
# plan-level fitting


def part_seed(run_seed, part_index):
    """Stable per-part child seed derived from the run seed."""
    seq = np.random.SeedSequence((int(run_seed), int(part_index)))
    return int(seq.generate_state(1, np.uint64)[0])


def fit_plan_entry(x, y, entry, child_seed, max_dense=4096, dca_ridge=None):
    """Fit a single plan entry with an already-derived child seed."""
    x = _as_matrix(x)
    m = x.shape[0]
    method, n_sub, size = _plan_triple(entry)
    if method == "rd":
        return make_rd(m, n_sub, size, child_seed)
    if method == "pca":
        return fit_pca(x, n_sub, size, seed=child_seed, max_dense=max_dense)
    if method == "dca":
        return fit_dca(x, y, rho=dca_ridge, n_subspaces=n_sub, group_size=size,
                       seed=child_seed, max_dense=max_dense)
    if method in ("bcd", "abd"):
        groups, _ = disjoint_groups(m, n_sub, size,
                                    np.random.default_rng(child_seed))
        return fit_bcd(x, groups) if method == "bcd" else fit_abd(x, groups)
    raise ConfigError(f"unknown decomposition method {method!r}")


def fit_plan(x, y, plan, seed, max_dense=4096, dca_ridge=None):
    """Fit every plan entry and compose the result.

    plan is a sequence of (method, n_subspaces, group_size) triples (or
    objects with those attributes). Each entry gets a child seed derived
    from (seed, entry position). bcd/abd entries build their disjoint
    padded partition with that child seed; a bcd/abd plan whose
    n_subspaces * group_size falls short of the feature count gets larger
    groups so real features are always covered.
    """
    parts = [
        fit_plan_entry(x, y, entry, part_seed(seed, i), max_dense=max_dense,
                       dca_ridge=dca_ridge)
        for i, entry in enumerate(plan)
    ]
    return compose(parts)


def _plan_triple(entry):
    if isinstance(entry, (tuple, list)):
        method, n_sub, size = entry
    else:
        method, n_sub, size = entry.method, entry.n_subspaces, entry.group_size
    return str(method).lower(), int(n_sub), int(size)
