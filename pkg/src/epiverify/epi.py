"""Experiment harness for the entropy power inequality and its proof chain.

One experiment fixes independent distributions X, Y and a weight lam in
(0, 1) and verifies

    h(sqrt(lam) X + sqrt(1-lam) Y)  >=  lam h(X) + (1-lam) h(Y)

together with the exact decomposition of the left-minus-right gap into two
nonnegative pieces, measured against the Gaussian baseline:

* conditioning gap -- the entropy of the combination minus its entropy
  conditioned on the frozen rotated block (conditioning reduces entropy);
* Jensen gap -- the expectation of the pointwise surplus
  log(lam a + (1-lam) b) - lam log a - (1-lam) log b over the coupled diagonal
  partials a, b of the two triangular maps, which is nonnegative sample by
  sample.

The left side is estimated by resubstitution on the exact mixture law of the
combination (the mixture family is closed under linear combinations), while
the conditioning and Jensen terms share one coupled Gaussian sample set.
Matching samples are reused across the left and right sides (common random
numbers), which makes the gap estimators tightly paired: the reported gap
standard errors come from the per-sample paired integrands rather than from
the individual entropies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .densities import (
    DimensionMismatchError,
    GaussianMixture,
    linear_combine,
    product_mixture,
    sample_mixture,
)
from .entropy import (
    EntropyEstimate,
    entropy_quadrature_1d,
    entropy_resub,
    standard_gaussian_entropy,
)
from .rng import RngStream
from .transport import (
    build_knothe,
    theta_jensen_components,
    unrotate_pair,
)

__all__ = [
    "Measurement",
    "EpiReport",
    "EqualityDiagnostics",
    "ShannonForm",
    "Scenario",
    "epi_run",
    "gap_decomposition",
    "shannon_form",
    "equality_diagnostics",
    "smoothing_curve",
    "default_grid",
    "DEFAULT_LAMBDAS",
]

MIN_EPI_SAMPLES = 10_000

# stream roles within one experiment cell
_ROLE_X = 0
_ROLE_Y = 1
_ROLE_COUPLED = 2
_ROLE_FIT_PHI = 3
_ROLE_FIT_PSI = 4
_ROLE_SMOOTH = 5


@dataclass(frozen=True)
class Measurement:
    """A scalar Monte-Carlo result with its one-sigma standard error."""

    value: float
    std_error: float

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be nonnegative")


@dataclass(frozen=True)
class ShannonForm:
    """Both entropy powers e^{2h/n} and their delta-method difference."""

    lhs_power: Measurement
    rhs_power: Measurement
    difference: Measurement


@dataclass(frozen=True)
class EqualityDiagnostics:
    """Witnesses of the equality case: affine maps with equal constant slopes.

    ``affine_residual_*`` are RMS residuals of least-squares affine fits to
    the maps; ``slope_mismatch`` is the largest per-coordinate mean absolute
    difference between the two maps' diagonal partials over coupled draws;
    ``cross_partial_variation`` is the largest standard deviation of any
    below-diagonal finite-difference Jacobian entry across probe points.
    """

    affine_residual_phi: float
    affine_residual_psi: float
    slope_mismatch: float
    cross_partial_variation: float

    def __post_init__(self):
        for name in (
            "affine_residual_phi",
            "affine_residual_psi",
            "slope_mismatch",
            "cross_partial_variation",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class EpiReport:
    """One experiment: both sides of the inequality, the gap, and its split."""

    lam: float
    lhs: EntropyEstimate
    h_x: EntropyEstimate
    h_y: EntropyEstimate
    rhs: Measurement
    total_gap: Measurement
    baseline_gap_lhs: Measurement
    conditioning_gap: Measurement
    jensen_gap: Measurement
    shannon_lhs_power: float
    shannon_rhs_power: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    """A named pair of distributions for the verification grid."""

    name: str
    x: GaussianMixture
    y: GaussianMixture

    def __post_init__(self):
        if self.x.dim != self.y.dim:
            raise DimensionMismatchError(
                f"scenario {self.name!r}: x has dim {self.x.dim}, y has dim {self.y.dim}"
            )


def _paired_shannon(
    dim: int, hsum_vals: np.ndarray, hx_vals: np.ndarray, hy_vals: np.ndarray
) -> ShannonForm:
    """Entropy powers of X+Y versus X, Y with a fully paired delta method."""
    n = hsum_vals.shape[0]
    means = np.array([hsum_vals.mean(), hx_vals.mean(), hy_vals.mean()])
    p_sum, p_x, p_y = np.exp(2.0 * means / dim)
    cov = np.cov(np.stack([hsum_vals, hx_vals, hy_vals]), ddof=1) / n
    scale = 2.0 / dim
    se_lhs = scale * p_sum * math.sqrt(max(cov[0, 0], 0.0))
    grad_rhs = scale * np.array([0.0, p_x, p_y])
    se_rhs = math.sqrt(max(grad_rhs @ cov @ grad_rhs, 0.0))
    grad_diff = scale * np.array([p_sum, -p_x, -p_y])
    se_diff = math.sqrt(max(grad_diff @ cov @ grad_diff, 0.0))
    return ShannonForm(
        Measurement(float(p_sum), se_lhs),
        Measurement(float(p_x + p_y), se_rhs),
        Measurement(float(p_sum - p_x - p_y), se_diff),
    )


def epi_run(
    x: GaussianMixture, y: GaussianMixture, lam: float, rng: RngStream, n: int
) -> EpiReport:
    """Run one experiment cell and assemble the full report.

    Stream roles: child 0 draws from X, child 1 from Y, child 2 the coupled
    rotated Gaussian pairs shared by the conditioning and Jensen terms.
    """
    if x.dim != y.dim:
        raise DimensionMismatchError(f"x has dim {x.dim}, y has dim {y.dim}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"the interpolation weight must lie strictly in (0, 1), got {lam}")
    if n < MIN_EPI_SAMPLES:
        raise ValueError(f"epi experiments require n >= {MIN_EPI_SAMPLES}, got {n}")
    dim = x.dim
    s, c = math.sqrt(lam), math.sqrt(1.0 - lam)

    # paired draws from X and Y; their combination is an exact draw from the
    # combination mixture, whose density is available in closed form
    xs = sample_mixture(x, rng.child(_ROLE_X), n)
    ys = sample_mixture(y, rng.child(_ROLE_Y), n)
    combination = linear_combine(s, x, c, y)
    sum_law = linear_combine(1.0, x, 1.0, y)
    lhs_vals = -combination.log_pdf(s * xs + c * ys)
    hx_vals = -x.log_pdf(xs)
    hy_vals = -y.log_pdf(ys)

    lhs = EntropyEstimate(*_mean_se(lhs_vals), n, "resubstitution")
    h_x = EntropyEstimate(*_mean_se(hx_vals), n, "resubstitution")
    h_y = EntropyEstimate(*_mean_se(hy_vals), n, "resubstitution")
    rhs_value = lam * h_x.value + (1.0 - lam) * h_y.value
    rhs_se = math.hypot(lam * h_x.std_error, (1.0 - lam) * h_y.std_error)

    gap_vals = lhs_vals - lam * hx_vals - (1.0 - lam) * hy_vals
    total_gap = Measurement(
        lhs.value - rhs_value, float(gap_vals.std(ddof=1)) / math.sqrt(n)
    )

    # coupled rotated pairs feed both inequality steps of the chain
    phi = build_knothe(x)
    psi = build_knothe(y)
    w = rng.child(_ROLE_COUPLED).normals(0, n, 2 * dim)
    x_tilde, y_tilde = w[:, :dim], w[:, dim:]
    x_star, y_star = unrotate_pair(x_tilde, y_tilde, lam)
    _, log_a = phi._push(x_star)
    _, log_b = psi._push(y_star)
    jens_comp = theta_jensen_components(log_a, log_b, lam)
    jens_vals = jens_comp.sum(axis=1)
    weighted_vals = (lam * log_a + (1.0 - lam) * log_b).sum(axis=1)
    theta_log_jac = weighted_vals + jens_vals

    h0 = standard_gaussian_entropy(dim)
    theta_mean, theta_se = _mean_se(theta_log_jac)
    conditioning_gap = Measurement(
        lhs.value - h0 - theta_mean, math.hypot(lhs.std_error, theta_se)
    )
    jensen_gap = Measurement(*_mean_se(jens_vals))
    baseline_gap_lhs = Measurement(lhs.value - h0, lhs.std_error)

    # the three estimates reconcile up to independent sampling noise in the
    # right side and the weighted log-partial mean (the change-of-variables
    # identity applied to each map)
    weighted_mean, weighted_se = _mean_se(weighted_vals)
    recon_residual = (
        total_gap.value - conditioning_gap.value - jensen_gap.value
    )
    recon_se = math.sqrt(
        (lam * h_x.std_error) ** 2
        + ((1.0 - lam) * h_y.std_error) ** 2
        + weighted_se**2
    )

    shannon = _paired_shannon(dim, -sum_law.log_pdf(xs + ys), hx_vals, hy_vals)

    return EpiReport(
        lam=lam,
        lhs=lhs,
        h_x=h_x,
        h_y=h_y,
        rhs=Measurement(rhs_value, rhs_se),
        total_gap=total_gap,
        baseline_gap_lhs=baseline_gap_lhs,
        conditioning_gap=conditioning_gap,
        jensen_gap=jensen_gap,
        shannon_lhs_power=shannon.lhs_power.value,
        shannon_rhs_power=shannon.rhs_power.value,
        diagnostics={
            "n_samples": n,
            "jensen_violations": int(np.count_nonzero(jens_comp < 0.0)),
            "jensen_integrand_min": float(jens_comp.min()),
            "recon_residual": recon_residual,
            "recon_se": recon_se,
            "shannon_diff": shannon.difference.value,
            "shannon_diff_se": shannon.difference.std_error,
        },
    )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    return float(values.mean()), float(values.std(ddof=1)) / math.sqrt(n)


def gap_decomposition(
    x: GaussianMixture, y: GaussianMixture, lam: float, rng: RngStream, n: int
) -> tuple[Measurement, Measurement]:
    """Conditioning and Jensen gaps of one experiment cell."""
    report = epi_run(x, y, lam, rng, n)
    return report.conditioning_gap, report.jensen_gap


def shannon_form(
    x: GaussianMixture, y: GaussianMixture, rng: RngStream, n: int
) -> ShannonForm:
    """Entropy powers e^{2 h(X+Y)/n} versus e^{2 h(X)/n} + e^{2 h(Y)/n}."""
    if x.dim != y.dim:
        raise DimensionMismatchError(f"x has dim {x.dim}, y has dim {y.dim}")
    if n < MIN_EPI_SAMPLES:
        raise ValueError(f"epi experiments require n >= {MIN_EPI_SAMPLES}, got {n}")
    xs = sample_mixture(x, rng.child(_ROLE_X), n)
    ys = sample_mixture(y, rng.child(_ROLE_Y), n)
    sum_law = linear_combine(1.0, x, 1.0, y)
    return _paired_shannon(
        x.dim, -sum_law.log_pdf(xs + ys), -x.log_pdf(xs), -y.log_pdf(ys)
    )


def equality_diagnostics(
    x: GaussianMixture, y: GaussianMixture, lam: float, rng: RngStream, n: int
) -> EqualityDiagnostics:
    """Sampled witnesses of the equality characterization.

    Equality requires both triangular maps to be affine with equal constant
    diagonal (and cross) partials; the four reported statistics all vanish in
    that case and stay visibly positive otherwise.
    """
    if x.dim != y.dim:
        raise DimensionMismatchError(f"x has dim {x.dim}, y has dim {y.dim}")
    if n < MIN_EPI_SAMPLES:
        raise ValueError(f"epi experiments require n >= {MIN_EPI_SAMPLES}, got {n}")
    dim = x.dim
    phi = build_knothe(x)
    psi = build_knothe(y)

    def affine_residual(m, stream):
        points = stream.normals(0, n, dim)
        images = m.eval(points)
        design = np.hstack([points, np.ones((n, 1))])
        coef, *_ = np.linalg.lstsq(design, images, rcond=None)
        residual = images - design @ coef
        return float(np.sqrt(np.mean(residual**2))), points

    res_phi, probe_points = affine_residual(phi, rng.child(_ROLE_FIT_PHI))
    res_psi, _ = affine_residual(psi, rng.child(_ROLE_FIT_PSI))

    w = rng.child(_ROLE_COUPLED).normals(0, n, 2 * dim)
    x_star, y_star = unrotate_pair(w[:, :dim], w[:, dim:], lam)
    a = np.exp(phi._push(x_star)[1])
    b = np.exp(psi._push(y_star)[1])
    slope_mismatch = float(np.max(np.mean(np.abs(a - b), axis=0)))

    cross_variation = 0.0
    if dim > 1:
        probes = probe_points[: min(20, n)]
        for m in (phi, psi):
            jacs = np.stack([m.jacobian_matrix_fd(p) for p in probes])
            rows, cols = np.tril_indices(dim, k=-1)
            spread = jacs[:, rows, cols].std(axis=0, ddof=0)
            cross_variation = max(cross_variation, float(spread.max()))

    return EqualityDiagnostics(res_phi, res_psi, slope_mismatch, cross_variation)


def smoothing_curve(
    x: GaussianMixture, t_values, rng: RngStream, n: int
) -> list[tuple[float, EntropyEstimate]]:
    """Entropy of X + sqrt(t) Z along a descending ladder of scales t.

    Uses the deterministic quadrature oracle in one dimension and
    resubstitution otherwise.  Entropy increases with t and approaches h(X)
    as t goes to zero.
    """
    t_values = [float(t) for t in t_values]
    if not t_values:
        raise ValueError("t_values must be nonempty")
    if any(t <= 0.0 for t in t_values):
        raise ValueError(f"t_values must be positive, got {t_values}")
    if any(a <= b for a, b in zip(t_values, t_values[1:])):
        raise ValueError(f"t_values must be sorted in descending order, got {t_values}")
    out = []
    for idx, t in enumerate(t_values):
        smoothed = x.smooth(t)
        if x.dim == 1:
            estimate = entropy_quadrature_1d(smoothed)
        else:
            estimate = entropy_resub(smoothed, rng.child(_ROLE_SMOOTH + idx), n)
        out.append((t, estimate))
    return out


# -- the default verification grid -------------------------------------------

DEFAULT_LAMBDAS = (0.1, 0.25, 0.5, 0.75, 0.9)


def bimodal(separation: float = 2.0, var: float = 1.0) -> GaussianMixture:
    """Symmetric two-component 1-D mixture at +/- separation."""
    return GaussianMixture.from_components(
        [(0.5, [-separation], [[var]]), (0.5, [separation], [[var]])]
    )


def default_grid() -> list[Scenario]:
    """The six scenario pairs of the versioned default grid.

    Covers the equality case, Gaussian pairs with unequal variances,
    non-Gaussian against Gaussian, two non-Gaussians, a correlated 2-D pair,
    and a 3-D product-mixture pair.
    """
    gauss_2d = GaussianMixture.gaussian([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    mix_2d = GaussianMixture.from_components(
        [
            (0.5, [-1.0, -1.0], [[0.8, 0.0], [0.0, 0.8]]),
            (0.5, [1.0, 1.0], [[1.0, -0.3], [-0.3, 1.0]]),
        ]
    )
    mix_3d_x = product_mixture(
        [
            bimodal(1.0, 0.6),
            GaussianMixture.gaussian([0.0], [[1.0]]),
            GaussianMixture.from_components([(0.7, [-0.5], [[0.4]]), (0.3, [0.8], [[0.9]])]),
        ]
    )
    mix_3d_y = product_mixture(
        [
            GaussianMixture.from_components([(0.4, [-0.8], [[0.5]]), (0.6, [0.6], [[1.1]])]),
            bimodal(1.2, 0.7),
            GaussianMixture.gaussian([0.2], [[0.9]]),
        ]
    )
    return [
        Scenario("iid-gauss", GaussianMixture.standard(1), GaussianMixture.standard(1)),
        Scenario(
            "gauss-unequal-var",
            GaussianMixture.standard(1),
            GaussianMixture.gaussian([0.0], [[4.0]]),
        ),
        Scenario("bimodal-vs-gauss", bimodal(), GaussianMixture.standard(1)),
        Scenario(
            "bimodal-vs-bimodal",
            bimodal(),
            GaussianMixture.from_components([(0.6, [-1.0], [[0.5]]), (0.4, [1.5], [[1.2]])]),
        ),
        Scenario("gauss2d-vs-mix2d", gauss_2d, mix_2d),
        Scenario("product-mix-3d", mix_3d_x, mix_3d_y),
    ]
