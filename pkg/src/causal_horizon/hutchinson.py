"""Stochastic divergence radar.

Estimates div u = tr(J) at a point from M Rademacher probes z via the
quadratic form z^T J z, each evaluated with one Jacobian-vector product.
For a symmetric Jacobian the estimator is unbiased with variance

    Var = 2 ||A||_F^2 - 2 * sum_i a_ii^2

per probe.  The quadratic form only sees the symmetric part of J, so an
asymmetric input to the variance formula is symmetrized (with a warning)
before evaluation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fields import VelocityField

__all__ = ["RadarEstimate", "estimate_divergence", "estimator_variance"]

_SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class RadarEstimate:
    mean: float
    samples: int
    sample_std: float | None  # undefined (None) for a single probe
    probe_seed: int | None = None


def estimate_divergence(
    field: VelocityField,
    x: np.ndarray,
    t: float,
    M: int = 1,
    rng: np.random.Generator | int | None = None,
) -> RadarEstimate:
    """Mean of M Rademacher quadratic forms z^T (du/dx) z at (x, t)."""
    if M < 1:
        raise DomainError(f"probe count M must be >= 1, got {M}")
    probe_seed = None
    if rng is None:
        rng = np.random.default_rng()
    elif isinstance(rng, (int, np.integer)):
        probe_seed = int(rng)
        rng = np.random.Generator(np.random.PCG64(probe_seed))
    x = np.asarray(x, dtype=float)
    z = rng.integers(0, 2, size=(M, field.dim)).astype(float) * 2.0 - 1.0
    vals = np.array([float(z[m] @ field.jvp(x, t, z[m])) for m in range(M)])
    std = float(np.std(vals, ddof=1)) if M > 1 else None
    return RadarEstimate(mean=float(np.mean(vals)), samples=M, sample_std=std,
                         probe_seed=probe_seed)


def estimator_variance(A: np.ndarray) -> float:
    """Single-probe variance of the Rademacher estimator on matrix A.

    2 ||A||_F^2 - 2 sum_i a_ii^2 for symmetric A; zero for any diagonal
    matrix.  Inputs asymmetric beyond 1e-8 (relative) are symmetrized first,
    with a warning, since the quadratic form cannot see the antisymmetric
    part.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"A must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.T)))
    if asym > _SYMMETRY_TOL * scale:
        warnings.warn(
            f"asymmetric input (max deviation {asym:.3g}); "
            "variance computed on the symmetrized matrix",
            stacklevel=2,
        )
        A = 0.5 * (A + A.T)
    fro2 = float(np.sum(A * A))
    diag2 = float(np.sum(np.diag(A) ** 2))
    return 2.0 * fro2 - 2.0 * diag2
