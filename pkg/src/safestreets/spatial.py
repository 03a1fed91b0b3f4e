"""Spatial econometrics: Queen weights, Moran's I, eigenvector filtering
(Griffith) with stepwise selection, and z-scored OLS.

The filtering basis comes from the doubly-centered weight matrix
M W M with M = I - 11^T/n; eigenvectors of that matrix orthogonal to the
constant vector have Moran's I equal to (n / S0) * eigenvalue, so adding
them to a regression absorbs residual spatial autocorrelation.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import geometry
from .errors import InvalidInputError


@dataclass
class SpatialWeights:
    W: np.ndarray  # n x n binary, symmetric, zero diagonal

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidInputError("weights must be a square matrix")
        if not np.array_equal(W, W.T):
            raise InvalidInputError("weights must be symmetric")
        if np.any(np.diag(W) != 0):
            raise InvalidInputError("weights must have a zero diagonal")
        self.W = W

    @property
    def n(self):
        return self.W.shape[0]

    @property
    def S0(self):
        return float(self.W.sum())

    def row_standardized(self):
        sums = self.W.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        return self.W / sums


@dataclass
class GriffithBasis:
    """Eigenpairs of M W M restricted to mean-zero vectors, descending."""

    eigenvalues: np.ndarray  # length n-1
    eigenvectors: np.ndarray  # n x (n-1), orthonormal columns, each sums to 0


@dataclass
class MoranResult:
    I: float
    expected: float
    p_value: float = None
    n_permutations: int = 0


@dataclass
class Coefficient:
    name: str
    beta: float
    std_error: float
    p_value: float


@dataclass
class RegressionResult:
    coefficients: list
    adj_R2: float
    n_eigenvectors_selected: int
    residual_moran: MoranResult
    selected_eigenvectors: np.ndarray = None

    def to_dict(self):
        return {
            "coefficients": [
                {
                    "name": c.name,
                    "beta": c.beta,
                    "std_error": c.std_error,
                    "p_value": c.p_value,
                }
                for c in self.coefficients
            ],
            "adj_R2": self.adj_R2,
            "n_eigenvectors_selected": self.n_eigenvectors_selected,
            "residual_moran": {
                "I": self.residual_moran.I,
                "expected": self.residual_moran.expected,
                "p_value": self.residual_moran.p_value,
                "n_permutations": self.residual_moran.n_permutations,
            },
        }


@dataclass
class StepwiseConfig:
    stop_p_value: float = 0.10
    n_permutations: int = 999
    candidate_ratio: float = 0.25  # keep eigenvectors with lambda_k / lambda_1 > ratio
    seed: int = 0
    row_standardize: bool = False


# --- Queen contiguity --------------------------------------------------------


def queen_weights(districts):
    """Binary Queen-contiguity weights: neighbors share a snapped vertex."""
    n = len(districts)
    if n == 1:
        warnings.warn("single district: weights matrix has no neighbors")
    vertex_sets = [geometry.ring_vertices(d.rings) for d in districts]
    owners = {}
    for i, verts in enumerate(vertex_sets):
        for v in verts:
            owners.setdefault(v, set()).add(i)
    W = np.zeros((n, n))
    for members in owners.values():
        if len(members) > 1:
            idx = sorted(members)
            for a in range(len(idx)):
                for b in range(a + 1, len(idx)):
                    W[idx[a], idx[b]] = W[idx[b], idx[a]] = 1.0
    return SpatialWeights(W=W)


# --- Moran's I ---------------------------------------------------------------


def _moran_stat(z, W, S0):
    return len(z) / S0 * float(z @ W @ z) / float(z @ z)


def morans_i(x, weights, n_permutations=999, seed=0):
    """Global Moran's I with a two-sided permutation pseudo p-value."""
    x = np.asarray(x, dtype=float)
    W = weights.W
    n = weights.n
    if x.shape != (n,):
        raise InvalidInputError(f"x has length {x.shape}, weights expect {n}")
    if weights.S0 == 0:
        raise InvalidInputError("weights have no links (S0 = 0)")
    z = x - x.mean()
    denom = float(z @ z)
    if denom == 0.0:
        raise InvalidInputError("x has zero variance")
    S0 = weights.S0
    I_obs = _moran_stat(z, W, S0)
    expected = -1.0 / (n - 1)

    p_value = None
    if n_permutations > 0:
        rng = np.random.default_rng(seed)
        dev_obs = abs(I_obs - expected)
        hits = 0
        for _ in range(n_permutations):
            zp = rng.permutation(z)
            if abs(_moran_stat(zp, W, S0) - expected) >= dev_obs - 1e-15:
                hits += 1
        p_value = (1 + hits) / (1 + n_permutations)
    return MoranResult(I=I_obs, expected=expected, p_value=p_value, n_permutations=n_permutations)


# --- Griffith eigenvector basis ----------------------------------------------


def griffith_basis(weights, row_standardize=False):
    """Eigenpairs of M W M on the mean-zero subspace, eigenvalues descending.

    The constant direction (a trivial null vector of M W M) is excluded so
    every eigenvector sums to zero. Sign convention: first nonzero
    component positive.
    """
    n = weights.n
    if n < 2:
        raise InvalidInputError("need at least two districts")
    W = weights.row_standardized() if row_standardize else weights.W
    W = 0.5 * (W + W.T)  # row-standardized variant must stay symmetric here

    # Orthonormal basis Q of the mean-zero subspace; M W M acts there as Q^T W Q.
    ones = np.ones((n, 1)) / np.sqrt(n)
    full = np.linalg.qr(np.hstack([ones, np.eye(n)[:, : n - 1]]))[0]
    Q = full[:, 1:]
    small = Q.T @ W @ Q
    eigvals, eigvecs = np.linalg.eigh(0.5 * (small + small.T))
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    vectors = Q @ eigvecs[:, order]

    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            vectors[:, k] = -col
    return GriffithBasis(eigenvalues=eigvals, eigenvectors=vectors)


def candidate_eigenvectors(basis, ratio=0.25):
    """Columns with positive eigenvalue above `ratio` of the largest one."""
    lam = basis.eigenvalues
    if lam.size == 0 or lam[0] <= 0:
        return np.empty((basis.eigenvectors.shape[0], 0)), np.array([])
    keep = lam / lam[0] > ratio
    return basis.eigenvectors[:, keep], lam[keep]


# --- OLS ---------------------------------------------------------------------


def zscore(x):
    x = np.asarray(x, dtype=float)
    sd = x.std(ddof=0)
    if sd == 0:
        raise InvalidInputError("cannot z-score a constant vector")
    return (x - x.mean()) / sd


def transform(x, kind, log_offset=0.0):
    """Elementwise transform: log, cube_root or zscore."""
    x = np.asarray(x, dtype=float)
    if kind == "log":
        shifted = x + log_offset
        if np.any(shifted <= 0):
            raise InvalidInputError("log transform requires positive values (try log_offset)")
        return np.log(shifted)
    if kind == "cube_root":
        return np.cbrt(x)
    if kind == "zscore":
        return zscore(x)
    if kind in (None, "none"):
        return x
    raise InvalidInputError(f"unknown transform {kind!r}")


def ols(y, X, names=None, add_intercept=True):
    """Classical least squares with analytic standard errors.

    Returns (list of Coefficient, adj_R2, residuals). `names` label the
    columns of X; the intercept is prepended when `add_intercept`.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if names is None:
        names = [f"x{j}" for j in range(p)]
    if add_intercept:
        X = np.hstack([np.ones((n, 1)), X])
        names = ["intercept"] + list(names)

    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        # Name the columns involved in the dependency via the QR diagonal.
        _q, r = np.linalg.qr(X)
        diag = np.abs(np.diag(r))
        bad = [names[j] for j in np.where(diag < 1e-10 * diag.max())[0]]
        raise InvalidInputError(f"design matrix is rank deficient (columns: {bad})")

    beta, _res, _rank, _sv = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ beta
    dof = n - X.shape[1]
    rss = float(residuals @ residuals)
    tss = float(((y - y.mean()) ** 2).sum())
    k_slopes = X.shape[1] - (1 if add_intercept else 0)
    if tss == 0:
        r2 = 1.0
    else:
        r2 = 1.0 - rss / tss
    if dof > 0 and n - 1 > k_slopes:
        adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - 1 - k_slopes)
    else:
        adj_r2 = r2

    if dof > 0:
        sigma2 = rss / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        ses = np.sqrt(np.diag(cov))
    else:
        ses = np.full(X.shape[1], np.nan)

    coeffs = []
    for j, name in enumerate(names):
        se = ses[j]
        if dof > 0 and se > 0:
            t = beta[j] / se
            pval = 2.0 * stats.t.sf(abs(t), dof)
        else:
            pval = float("nan")
        coeffs.append(Coefficient(name=name, beta=float(beta[j]), std_error=float(se), p_value=float(pval)))
    return coeffs, float(adj_r2), residuals


def pearson(a, b):
    """Sample Pearson correlation with the t-distribution p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 3:
        raise InvalidInputError("need two equal-length vectors with n >= 3")
    if a.std() == 0 or b.std() == 0:
        raise InvalidInputError("constant input")
    r, p = stats.pearsonr(a, b)
    return float(r), float(p)


# --- Stepwise Griffith filtering ---------------------------------------------


def stepwise_filter_regress(y, X, weights, config=StepwiseConfig(), names=None):
    """Z-score, fit OLS, then greedily add spatial-filter eigenvectors until
    the residual Moran's I permutation p-value clears the stop threshold.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = weights.n
    if len(y) != n or X.shape[0] != n:
        raise InvalidInputError("y/X rows must match the weights dimension")
    if names is None:
        names = [f"x{j}" for j in range(X.shape[1])]

    yz = zscore(y)
    Xz = np.column_stack([zscore(X[:, j]) for j in range(X.shape[1])])

    basis = griffith_basis(weights, row_standardize=config.row_standardize)
    pool, _lam = candidate_eigenvectors(basis, config.candidate_ratio)
    pool_idx = list(range(pool.shape[1]))
    selected = []

    def fit(cols):
        design = Xz if not cols else np.hstack([Xz, pool[:, cols]])
        col_names = list(names) + [f"sf_ev{c}" for c in cols]
        return ols(yz, design, names=col_names)

    def residual_moran(residuals, n_perm):
        if float(residuals @ residuals) < 1e-24:
            return MoranResult(I=0.0, expected=-1.0 / (n - 1), p_value=1.0, n_permutations=0)
        return morans_i(residuals, weights, n_permutations=n_perm, seed=config.seed)

    coeffs, adj_r2, residuals = fit(selected)
    moran = residual_moran(residuals, config.n_permutations)

    while moran.p_value is not None and moran.p_value <= config.stop_p_value:
        remaining = [c for c in pool_idx if c not in selected]
        if not remaining:
            break
        best, best_i = None, None
        for c in remaining:
            _cs, _r2, res_c = fit(selected + [c])
            I_c = residual_moran(res_c, 0).I
            if best_i is None or I_c < best_i:
                best, best_i = c, I_c
        selected.append(best)
        coeffs, adj_r2, residuals = fit(selected)
        moran = residual_moran(residuals, config.n_permutations)

    substantive = [c for c in coeffs if not c.name.startswith("sf_ev")]
    return RegressionResult(
        coefficients=substantive,
        adj_R2=adj_r2,
        n_eigenvectors_selected=len(selected),
        residual_moran=moran,
        selected_eigenvectors=pool[:, selected] if selected else np.empty((n, 0)),
    )


# --- Reporting ---------------------------------------------------------------


def render_table(title, result):
    """Text rendering in the style of the regression tables."""
    lines = [title, "-" * max(30, len(title))]
    for c in result.coefficients:
        if c.name == "intercept":
            continue
        stars = "**" if c.p_value < 0.001 else "*" if c.p_value < 0.01 else ""
        lines.append(f"{c.name:<28s} {c.beta:8.3f}{stars}")
    lines.append("-" * max(30, len(title)))
    lines.append(f"{'Spatial Eigenvectors':<28s} {result.n_eigenvectors_selected:8d}")
    lines.append(f"{'Adj-R2':<28s} {result.adj_R2:8.2f}")
    rm = result.residual_moran
    lines.append(f"{'Morans I (p-value)':<28s} {rm.I:8.2f} ({rm.p_value:.2f})")
    return "\n".join(lines)


def write_result_json(path, result, title=None):
    payload = result.to_dict()
    if title:
        payload["title"] = title
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
