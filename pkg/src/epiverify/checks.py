"""Distributional and structural diagnostics for triangular transport maps.

Each diagnostic returns a record with the measured statistic, its pass
threshold, and the verdict, so both the command-line ``map-check`` report and
the test suite consume the same machinery.

The pushforward test applies the probability integral transform coordinate
by coordinate: if the map is correct, the target's conditional CDF of each
mapped coordinate given the mapped prefix is an independent uniform, which a
one-sample Kolmogorov-Smirnov statistic checks.  Sampler agreement is a
two-sample KS per coordinate between inverse-transform draws and pushed
reference draws.  Structural checks (triangularity, positive and monotone
diagonal, density-ratio versus finite-difference partials, affine recovery
for Gaussian targets) use small batches of probe points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import GaussianMixture
from .numerics import RootConfig
from .rng import RngStream
from .transport import TriangularMap, build_knothe, sample_mitsm

__all__ = [
    "CheckResult",
    "ks_statistic_uniform",
    "ks_statistic_two_sample",
    "pushforward_pit",
    "map_diagnostics",
]

KS_ONE_SAMPLE_COEFF = 1.95  # significance 1e-3: sqrt(-log(alpha / 2) / 2)
TRIANGULARITY_TOL = 1e-6
PARTIALS_FD_REL_TOL = 1e-5
AFFINE_RESIDUAL_TOL = 1e-6
CHOLESKY_TOL = 1e-4
N_STRUCTURE_POINTS = 100
N_MONOTONE_POINTS = 1000
MONOTONE_STEP = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "statistic": self.statistic,
            "threshold": self.threshold,
        }


def ks_statistic_uniform(u: np.ndarray) -> float:
    """One-sample KS statistic of ``u`` against the uniform law on [0, 1]."""
    u = np.sort(np.asarray(u, dtype=float))
    n = u.shape[0]
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - u))
    d_minus = float(np.max(u - (grid - 1.0 / n)))
    return max(d_plus, d_minus)


def ks_statistic_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS statistic between samples ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    combined = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, combined, side="right") / a.shape[0]
    cdf_b = np.searchsorted(b, combined, side="right") / b.shape[0]
    return float(np.max(np.abs(cdf_a - cdf_b)))


def pushforward_pit(target: GaussianMixture, images: np.ndarray) -> np.ndarray:
    """Conditional-CDF transform of mapped points, one column per coordinate."""
    out = np.empty_like(images)
    for k in range(target.dim):
        params = target.conditional_params(k + 1, images[:, :k])
        out[:, k] = params.cdf(images[:, k])
    return out


def map_diagnostics(
    target: GaussianMixture,
    rng: RngStream,
    n: int,
    root_cfg: RootConfig | None = None,
) -> list[CheckResult]:
    """Full diagnostic battery for the triangular map onto ``target``.

    Stream roles: child 0 reference draws (pushforward and affine fit),
    child 1 inverse-transform draws, child 2 reference draws for the sampler
    comparison, child 3 structure probe points, child 4 monotonicity probes.
    """
    m = build_knothe(target, root_cfg)
    dim = target.dim
    results: list[CheckResult] = []

    z = rng.child(0).normals(0, n, dim)
    images, log_partials = m._push(z)
    pit = pushforward_pit(target, images)
    ks_threshold = KS_ONE_SAMPLE_COEFF / math.sqrt(n)
    for k in range(dim):
        stat = ks_statistic_uniform(pit[:, k])
        results.append(
            CheckResult(f"pushforward_pit_ks[{k}]", stat <= ks_threshold, stat, ks_threshold)
        )

    mitsm = sample_mitsm(target, rng.child(1), n)
    pushed = m.eval(rng.child(2).normals(0, n, dim))
    two_sample_threshold = KS_ONE_SAMPLE_COEFF * math.sqrt(2.0 / n)
    for k in range(dim):
        stat = ks_statistic_two_sample(mitsm[:, k], pushed[:, k])
        results.append(
            CheckResult(
                f"mitsm_vs_map_ks[{k}]", stat <= two_sample_threshold, stat, two_sample_threshold
            )
        )

    probes = rng.child(3).normals(0, N_STRUCTURE_POINTS, dim)
    jacobians = np.stack([m.jacobian_matrix_fd(p) for p in probes])
    if dim > 1:
        rows, cols = np.triu_indices(dim, k=1)
        upper_max = float(np.max(np.abs(jacobians[:, rows, cols])))
    else:
        upper_max = 0.0
    results.append(
        CheckResult(
            "triangularity_max_upper", upper_max <= TRIANGULARITY_TOL, upper_max, TRIANGULARITY_TOL
        )
    )

    exact = m.diag_partials(probes)
    diag_min = float(exact.min())
    results.append(CheckResult("diag_partials_positive_min", diag_min > 0.0, diag_min, 0.0))

    fd_diag = np.stack([np.diag(j) for j in jacobians])
    rel_err = float(np.max(np.abs(fd_diag - exact) / exact))
    results.append(
        CheckResult(
            "diag_partials_vs_fd_rel", rel_err <= PARTIALS_FD_REL_TOL, rel_err, PARTIALS_FD_REL_TOL
        )
    )

    mono = rng.child(4).normals(0, N_MONOTONE_POINTS, dim)
    base = m.eval(mono)
    violations = 0
    for k in range(dim):
        bumped = mono.copy()
        bumped[:, k] += MONOTONE_STEP
        violations += int(np.count_nonzero(m.eval(bumped)[:, k] <= base[:, k]))
    results.append(CheckResult("monotonicity_violations", violations == 0, float(violations), 0.0))

    if target.n_components == 1:
        design = np.hstack([z, np.ones((n, 1))])
        coef, *_ = np.linalg.lstsq(design, images, rcond=None)
        residual = float(np.sqrt(np.mean((images - design @ coef) ** 2)))
        results.append(
            CheckResult(
                "affine_rms_residual", residual <= AFFINE_RESIDUAL_TOL, residual, AFFINE_RESIDUAL_TOL
            )
        )
        chol = np.linalg.cholesky(target.covs[0])
        chol_err = float(np.max(np.abs(jacobians - chol)))
        results.append(
            CheckResult("jacobian_vs_cholesky_max", chol_err <= CHOLESKY_TOL, chol_err, CHOLESKY_TOL)
        )

    return results
