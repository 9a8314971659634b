"""Gaussian-mixture distributions with exact closed-form operations.

The mixture family is closed under every operation the verification harness
needs: prefix marginals and one-dimensional conditionals (standard Gaussian
conditioning, components reweighted by their prefix likelihood), linear
combinations of independent mixtures (pairwise component convolution), and
Gaussian smoothing (adding t*I to every covariance).  Densities are strictly
positive everywhere and all second moments are finite, so every distribution
built here satisfies the hypotheses of the inequality under test by
construction.

Mixtures are immutable; per-component Cholesky factors and conditional
"skeletons" (the prefix-independent parts of the conditional parameters) are
precomputed lazily and shared by all evaluation paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp, ndtr, ndtri

from .numerics import LOG_2PI, RootConfig, solve_monotone_vec
from .rng import RngStream

__all__ = [
    "GaussianMixture",
    "Conditional1D",
    "MixtureSpecError",
    "DimensionMismatchError",
    "linear_combine",
    "product_mixture",
    "sample_mixture",
]

MAX_DIM = 3
MIN_EIGENVALUE = 1e-10
WEIGHT_SUM_TOL = 1e-12
BRACKET_SDS = 12.0  # quantile bracket half-width in component standard deviations


class MixtureSpecError(ValueError):
    """Invalid mixture parameters (weights, shapes, or covariances)."""


class DimensionMismatchError(ValueError):
    """Operands or evaluation points with incompatible dimensions."""


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``x`` to an (m, dim) array; flag whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    if dim == 1:
        if arr.ndim == 0:
            return arr.reshape(1, 1), True
        if arr.ndim == 1:
            return arr.reshape(-1, 1), False
        if arr.ndim == 2 and arr.shape[1] == 1:
            return arr, False
    else:
        if arr.ndim == 1 and arr.shape[0] == dim:
            return arr.reshape(1, dim), True
        if arr.ndim == 2 and arr.shape[1] == dim:
            return arr, False
    raise DimensionMismatchError(
        f"expected point(s) of dimension {dim}, got array of shape {arr.shape}"
    )


@dataclass(frozen=True, eq=False)
class _Cond1DParams:
    """One-dimensional mixture parameters, possibly one set per row.

    ``log_w`` and ``means`` have shape (K,) for a fixed mixture or (m, K) for
    m prefix-dependent conditionals; ``sds`` is always (K,) because Gaussian
    conditional variances do not depend on the conditioning value.
    """

    log_w: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def cdf(self, x: np.ndarray) -> np.ndarray:
        t = (np.asarray(x, dtype=float)[..., None] - self.means) / self.sds
        return np.sum(np.exp(self.log_w) * ndtr(t), axis=-1)

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        t = (np.asarray(x, dtype=float)[..., None] - self.means) / self.sds
        comp = self.log_w - 0.5 * t * t - np.log(self.sds) - 0.5 * LOG_2PI
        return logsumexp(comp, axis=-1)

    def _cdf_pdf(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = np.exp(self.log_w)
        t = (x[..., None] - self.means) / self.sds
        cdf = np.sum(w * ndtr(t), axis=-1)
        pdf = np.sum(w * np.exp(-0.5 * t * t) / (self.sds * math.sqrt(2.0 * math.pi)), axis=-1)
        return cdf, pdf

    def quantile(self, u: np.ndarray, cfg: RootConfig | None = None) -> np.ndarray:
        """Elementwise inverse CDF by safeguarded Newton on a sign bracket.

        The residual is scaled by the tail mass min(u, 1-u), so the f_tol
        stopping rule is relative to the tail: deep lower-tail quantiles keep
        the full relative precision of the CDF instead of stopping at an
        absolute probability tolerance.
        """
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        spread = BRACKET_SDS * float(np.max(self.sds))
        lo = np.broadcast_to(np.min(self.means, axis=-1), u.shape) - spread
        hi = np.broadcast_to(np.max(self.means, axis=-1), u.shape) + spread
        lo, hi = lo.astype(float), hi.astype(float)
        for _ in range(64):
            bad_lo = self.cdf(lo) > u
            bad_hi = self.cdf(hi) < u
            if not (bad_lo.any() or bad_hi.any()):
                break
            width = hi - lo
            lo = np.where(bad_lo, lo - width, lo)
            hi = np.where(bad_hi, hi + width, hi)
        else:
            raise RuntimeError("could not bracket the requested quantiles")
        scale = np.minimum(u, 1.0 - u)

        def residual(x):
            cdf, pdf = self._cdf_pdf(x)
            return (cdf - u) / scale, pdf / scale

        return solve_monotone_vec(residual, lo, hi, cfg)


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite Gaussian mixture on R^n, 1 <= n <= 3.

    ``weights`` (K,), ``means`` (K, n) and ``covs`` (K, n, n) define
    sum_i w_i N(mu_i, Sigma_i) with strictly positive weights summing to one
    and symmetric covariances whose eigenvalues all exceed 1e-10.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        if covs.ndim == 1:
            covs = covs[:, None, None]
        k = weights.shape[0]
        if k == 0:
            raise MixtureSpecError("a mixture needs at least one component")
        if means.ndim != 2 or means.shape[0] != k:
            raise MixtureSpecError(
                f"means must have shape ({k}, dim), got {np.asarray(self.means).shape}"
            )
        dim = means.shape[1]
        if not 1 <= dim <= MAX_DIM:
            raise MixtureSpecError(f"dimension must be between 1 and {MAX_DIM}, got {dim}")
        if covs.shape != (k, dim, dim):
            raise MixtureSpecError(
                f"covs must have shape ({k}, {dim}, {dim}), got {np.asarray(self.covs).shape}"
            )
        if np.any(weights <= 0.0):
            raise MixtureSpecError(f"weights must be strictly positive, got {weights.tolist()}")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise MixtureSpecError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got sum {total!r} "
                f"for weights {weights.tolist()}"
            )
        asym = np.max(np.abs(covs - np.swapaxes(covs, 1, 2)))
        if asym > 1e-12 * max(1.0, float(np.max(np.abs(covs)))):
            raise MixtureSpecError(f"covariances must be symmetric (max asymmetry {asym:.3e})")
        eigenvalues = np.linalg.eigvalsh(covs)
        if np.any(eigenvalues < MIN_EIGENVALUE):
            raise MixtureSpecError(
                f"covariance eigenvalues must all be >= {MIN_EIGENVALUE}, "
                f"got minimum {float(eigenvalues.min()):.3e}"
            )
        chols = np.linalg.cholesky(covs)
        eye = np.eye(dim)
        chol_invs = np.stack([solve_triangular(L, eye, lower=True) for L in chols])
        log_dets = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)

        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "_log_w", np.log(weights))
        object.__setattr__(self, "_chols", chols)
        object.__setattr__(self, "_chol_invs", chol_invs)
        object.__setattr__(self, "_log_dets", log_dets)
        object.__setattr__(self, "_skeletons", {})

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_components(cls, components) -> "GaussianMixture":
        """Build from an iterable of (weight, mean, cov) triples."""
        triples = list(components)
        if not triples:
            raise MixtureSpecError("a mixture needs at least one component")
        weights = np.array([t[0] for t in triples], dtype=float)
        means = np.array([np.atleast_1d(np.asarray(t[1], dtype=float)) for t in triples])
        covs = np.array([np.atleast_2d(np.asarray(t[2], dtype=float)) for t in triples])
        return cls(weights, means, covs)

    @classmethod
    def gaussian(cls, mean, cov) -> "GaussianMixture":
        """Single-component mixture N(mean, cov)."""
        return cls.from_components([(1.0, mean, cov)])

    @classmethod
    def standard(cls, dim: int) -> "GaussianMixture":
        """Standard normal N(0, I) in the given dimension."""
        return cls.gaussian(np.zeros(dim), np.eye(dim))

    # -- basic queries -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def is_standard(self, tol: float = 1e-12) -> bool:
        return (
            self.n_components == 1
            and np.max(np.abs(self.means)) <= tol
            and np.max(np.abs(self.covs[0] - np.eye(self.dim))) <= tol
        )

    @property
    def mean(self) -> np.ndarray:
        """First moment sum_i w_i mu_i."""
        return self.weights @ self.means

    @property
    def covariance(self) -> np.ndarray:
        """Second central moment sum_i w_i (Sigma_i + mu_i mu_i^T) - m m^T."""
        m = self.mean
        second = np.einsum("k,kij->ij", self.weights, self.covs)
        second += np.einsum("k,ki,kj->ij", self.weights, self.means, self.means)
        return second - np.outer(m, m)

    # -- density -----------------------------------------------------------

    def log_pdf(self, x):
        """Log density, stabilized by a max-shifted log-sum-exp over components."""
        points, single = _as_points(x, self.dim)
        comp = np.empty((points.shape[0], self.n_components))
        for i in range(self.n_components):
            z = (points - self.means[i]) @ self._chol_invs[i].T
            comp[:, i] = (
                self._log_w[i]
                - 0.5 * np.einsum("mj,mj->m", z, z)
                - 0.5 * (self.dim * LOG_2PI + self._log_dets[i])
            )
        out = logsumexp(comp, axis=1)
        return float(out[0]) if single else out

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    # -- structure ---------------------------------------------------------

    def marginal_prefix(self, k: int) -> "GaussianMixture":
        """Marginal of the first ``k`` coordinates (same weights, leading blocks)."""
        if not 1 <= k <= self.dim:
            raise IndexError(f"prefix length must be in [1, {self.dim}], got {k}")
        return GaussianMixture(self.weights, self.means[:, :k], self.covs[:, :k, :k])

    def _skeleton(self, k: int) -> dict:
        """Prefix-independent pieces of the conditional of coordinate k."""
        cached = self._skeletons.get(k)
        if cached is not None:
            return cached
        p = k - 1
        sk: dict = {}
        if p == 0:
            sk["means"] = self.means[:, 0].copy()
            sk["sds"] = np.sqrt(self.covs[:, 0, 0])
        else:
            prefix_cov = self.covs[:, :p, :p]
            cross = self.covs[:, :p, p]
            last = self.covs[:, p, p]
            chols = np.linalg.cholesky(prefix_cov)
            eye = np.eye(p)
            chol_invs = np.stack([solve_triangular(L, eye, lower=True) for L in chols])
            # regression coefficients r_i solving Sigma_prefix r = cross
            half = np.einsum("kij,kj->ki", chol_invs, cross)
            reg = np.einsum("kji,kj->ki", chol_invs, half)
            cond_var = last - np.einsum("ki,ki->k", cross, reg)
            sk["mu_prefix"] = self.means[:, :p].copy()
            sk["mu_last"] = self.means[:, p].copy()
            sk["reg"] = reg
            sk["sds"] = np.sqrt(cond_var)
            sk["chol_invs"] = chol_invs
            sk["log_norm"] = -0.5 * (
                p * LOG_2PI + 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
            )
        self._skeletons[k] = sk
        return sk

    def conditional_params(self, k: int, prefixes: np.ndarray) -> _Cond1DParams:
        """Parameters of the law of coordinate ``k`` given each prefix row.

        Component i keeps its Gaussian conditional mean/variance and is
        reweighted in proportion to w_i times its prefix-marginal density at
        the conditioning point.
        """
        if not 1 <= k <= self.dim:
            raise IndexError(f"coordinate must be in [1, {self.dim}], got {k}")
        sk = self._skeleton(k)
        if k == 1:
            return _Cond1DParams(self._log_w, sk["means"], sk["sds"])
        prefixes = np.asarray(prefixes, dtype=float)
        if prefixes.ndim == 1:
            prefixes = prefixes[None, :]
        if prefixes.shape[1] != k - 1:
            raise DimensionMismatchError(
                f"prefix must have length {k - 1}, got {prefixes.shape[1]}"
            )
        diff = prefixes[:, None, :] - sk["mu_prefix"][None, :, :]
        z = np.einsum("kqp,mkp->mkq", sk["chol_invs"], diff)
        log_w = self._log_w + sk["log_norm"] - 0.5 * np.einsum("mkq,mkq->mk", z, z)
        log_w = log_w - logsumexp(log_w, axis=1, keepdims=True)
        means = sk["mu_last"] + np.einsum("mkp,kp->mk", diff, sk["reg"])
        return _Cond1DParams(log_w, means, sk["sds"])

    def conditional(self, k: int, prefix) -> "GaussianMixture":
        """Law of coordinate ``k`` given fixed values of coordinates 1..k-1."""
        if not 1 <= k <= self.dim:
            raise IndexError(f"coordinate must be in [1, {self.dim}], got {k}")
        prefix = np.atleast_1d(np.asarray(prefix, dtype=float))
        if prefix.shape != (k - 1,):
            raise DimensionMismatchError(
                f"prefix must have shape ({k - 1},), got {prefix.shape}"
            )
        params = self.conditional_params(k, prefix.reshape(1, -1) if k > 1 else prefix)
        log_w = np.broadcast_to(params.log_w, (1, self.n_components))[0]
        means = np.broadcast_to(params.means, (1, self.n_components))[0]
        return GaussianMixture(
            np.exp(log_w) / np.exp(log_w).sum(),
            means[:, None],
            (params.sds**2)[:, None, None],
        )

    # -- one-dimensional CDF and quantile -----------------------------------

    def _params_1d(self) -> _Cond1DParams:
        if self.dim != 1:
            raise DimensionMismatchError(f"operation requires a 1-D mixture, got dim {self.dim}")
        return _Cond1DParams(self._log_w, self.means[:, 0], np.sqrt(self.covs[:, 0, 0]))

    def cdf(self, x):
        """Mixture CDF (1-D only): weighted sum of normal CDFs."""
        out = self._params_1d().cdf(np.asarray(x, dtype=float))
        return float(out) if np.ndim(x) == 0 else out

    def quantile(self, u, root_cfg: RootConfig | None = None):
        """Inverse CDF (1-D only); requires 0 < u < 1."""
        out = self._params_1d().quantile(np.atleast_1d(np.asarray(u, dtype=float)), root_cfg)
        return float(out[0]) if np.ndim(u) == 0 else out

    # -- closure operations --------------------------------------------------

    def smooth(self, t: float) -> "GaussianMixture":
        """Law of X + sqrt(t) Z for independent standard normal Z: adds t*I."""
        if not t > 0.0:
            raise ValueError(f"smoothing scale must be positive, got {t}")
        return GaussianMixture(self.weights, self.means, self.covs + t * np.eye(self.dim))

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "components": [
                {
                    "weight": float(self.weights[i]),
                    "mean": self.means[i].tolist(),
                    "cov": self.covs[i].tolist(),
                }
                for i in range(self.n_components)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianMixture":
        if not isinstance(data, dict):
            raise MixtureSpecError(f"mixture literal must be an object, got {type(data).__name__}")
        try:
            dim = int(data["dim"])
            raw = data["components"]
        except KeyError as exc:
            raise MixtureSpecError(f"mixture literal is missing the {exc.args[0]!r} field") from exc
        if not isinstance(raw, list) or not raw:
            raise MixtureSpecError("components must be a nonempty list")
        components = []
        for idx, entry in enumerate(raw):
            try:
                w = float(entry["weight"])
                mean = np.atleast_1d(np.asarray(entry["mean"], dtype=float))
                cov = np.atleast_2d(np.asarray(entry["cov"], dtype=float))
            except (KeyError, TypeError, ValueError) as exc:
                raise MixtureSpecError(f"components[{idx}] is malformed: {exc}") from exc
            components.append((w, mean, cov))
        mixture = cls.from_components(components)
        if mixture.dim != dim:
            raise MixtureSpecError(
                f"declared dim {dim} does not match component dimension {mixture.dim}"
            )
        return mixture


Conditional1D = GaussianMixture
"""A 1-D mixture representing one coordinate given fixed predecessors."""


def linear_combine(a: float, dx: GaussianMixture, b: float, dy: GaussianMixture) -> GaussianMixture:
    """Exact law of a*X + b*Y for independent X ~ dx, Y ~ dy.

    Component pairs (i, j) combine with weight w_i v_j, mean a mu_i + b nu_j,
    and covariance a^2 Sigma_i + b^2 Gamma_j.
    """
    if dx.dim != dy.dim:
        raise DimensionMismatchError(f"operands have dimensions {dx.dim} and {dy.dim}")
    if a == 0.0 and b == 0.0:
        raise ValueError("coefficients a and b must not both be zero")
    weights = np.outer(dx.weights, dy.weights).ravel()
    means = (a * dx.means[:, None, :] + b * dy.means[None, :, :]).reshape(-1, dx.dim)
    covs = (a * a * dx.covs[:, None] + b * b * dy.covs[None, :]).reshape(-1, dx.dim, dx.dim)
    return GaussianMixture(weights, means, covs)


def product_mixture(factors) -> GaussianMixture:
    """Product distribution of independent 1-D mixtures, one per coordinate."""
    factors = list(factors)
    if not 1 <= len(factors) <= MAX_DIM:
        raise MixtureSpecError(f"product needs between 1 and {MAX_DIM} factors")
    for f in factors:
        if f.dim != 1:
            raise DimensionMismatchError("product factors must be one-dimensional")
    dim = len(factors)
    combos = [()]
    for f in factors:
        combos = [c + (i,) for c in combos for i in range(f.n_components)]
    weights, means, covs = [], [], []
    for combo in combos:
        weights.append(math.prod(float(factors[d].weights[i]) for d, i in enumerate(combo)))
        means.append([float(factors[d].means[i, 0]) for d, i in enumerate(combo)])
        cov = np.zeros((dim, dim))
        for d, i in enumerate(combo):
            cov[d, d] = factors[d].covs[i, 0, 0]
        covs.append(cov)
    return GaussianMixture(np.array(weights), np.array(means), np.array(covs))


def sample_mixture(d: GaussianMixture, rng: RngStream, count: int, start: int = 0) -> np.ndarray:
    """I.i.d. draws from ``d`` by component choice plus a Cholesky transform.

    Sample j consumes a fixed window of the stream (one uniform for the
    component index, ``dim`` for the Gaussian), so draws are reproducible and
    batch-invariant.  This sampler is deliberately independent of the
    inverse-transform machinery in :mod:`epiverify.transport` so the two can
    cross-validate each other.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    u = rng.uniforms(start, count, 1 + d.dim)
    cum = np.cumsum(d.weights)
    idx = np.minimum(np.searchsorted(cum, u[:, 0], side="left"), d.n_components - 1)
    z = ndtri(u[:, 1:])
    return d.means[idx] + np.einsum("mij,mj->mi", d._chols[idx], z)
