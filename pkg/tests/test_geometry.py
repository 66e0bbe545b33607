"""Closed-form bound calculators against frozen oracles and domain checks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from causal_horizon.errors import DomainError
from causal_horizon.geometry import (
    GeometryParams,
    conjugate_point_distance,
    horizon_energy_lower_bound,
    identity_entropy_bound,
    initial_contraction_bound,
    mollified_entropy,
    required_viscosity,
    shock_thickness,
    tearing_time_bound,
    x_coth_x,
)

REL = 1e-12


def test_mollified_entropy_oracles():
    assert mollified_entropy(1, 1.0) == pytest.approx(1.4189385332046727, rel=REL)
    assert mollified_entropy(2, 1.0) == pytest.approx(2.8378770664093453, rel=REL)
    assert mollified_entropy(2, 0.1) == pytest.approx(-1.7672931195787456, rel=REL)


def test_mollified_entropy_monotone_and_additive():
    # strictly increasing in sigma, exactly linear in n
    sigmas = [0.05, 0.1, 0.5, 1.0, 2.0, 10.0]
    vals = [mollified_entropy(3, s) for s in sigmas]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for n in (1, 2, 5, 11):
        assert mollified_entropy(n, 0.7) == pytest.approx(
            n * mollified_entropy(1, 0.7), rel=REL
        )


def test_mollified_entropy_domain():
    with pytest.raises(DomainError):
        mollified_entropy(0, 1.0)
    with pytest.raises(DomainError):
        mollified_entropy(2, 0.0)
    with pytest.raises(DomainError):
        mollified_entropy(2, -1.0)


def test_horizon_energy_oracles():
    p = GeometryParams(n=2, Delta=1.0, sigma=0.1, D=3.0, C_V=1.0)
    assert horizon_energy_lower_bound(p, 0.5) == pytest.approx(
        27.210340371976184, rel=REL
    )
    p6 = GeometryParams(n=2, Delta=1.0, sigma=0.1, D=6.0, C_V=1.0)
    assert horizon_energy_lower_bound(p6, 0.5) == pytest.approx(
        81.21034037197619, rel=REL
    )
    # no transport, no mollification penalty
    p0 = GeometryParams(n=1, Delta=1.0, sigma=1.0, D=0.0, C_V=1.0)
    assert horizon_energy_lower_bound(p0, 1.0) == 0.0


def test_horizon_energy_monotonicity():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(1, 10))
        sigma = float(rng.uniform(0.01, 0.9))
        d1, d2 = sorted(rng.uniform(0.1, 10.0, size=2))
        e1, e2 = sorted(rng.uniform(0.01, 5.0, size=2))
        base = GeometryParams(n=n, Delta=1.0, sigma=sigma, D=d1)
        wider = GeometryParams(n=n, Delta=1.0, sigma=sigma, D=d2)
        if d2 > d1:
            assert horizon_energy_lower_bound(wider, e1) > horizon_energy_lower_bound(
                base, e1
            )
        if e2 > e1:
            assert horizon_energy_lower_bound(base, e2) < horizon_energy_lower_bound(
                base, e1
            )
    with pytest.raises(DomainError):
        horizon_energy_lower_bound(base, 0.0)


def test_initial_contraction_oracles():
    flat = GeometryParams(n=2, Delta=1.0, sigma=0.1, density_ratio=1.0)
    assert initial_contraction_bound(flat) == pytest.approx(1.9, rel=REL)

    curved = GeometryParams(n=2, Delta=1.0, sigma=0.1, D=1.0, kappa=1.0)
    assert initial_contraction_bound(curved) == pytest.approx(
        2.2130352854993314, rel=REL
    )


def test_initial_contraction_warns_outside_regime():
    # sigma = Delta cancels the unit term but sits far outside sigma << Delta
    p = GeometryParams(n=2, Delta=1.0, sigma=1.0)
    with pytest.warns(UserWarning, match="small-mollification"):
        assert initial_contraction_bound(p) == pytest.approx(1.0, rel=REL)


def test_initial_contraction_density_ratio_compounding():
    # the ratio enters through its n-th root: higher n damps the correction
    lo = GeometryParams(n=2, Delta=1.0, sigma=0.3, density_ratio=30.0)
    hi = GeometryParams(n=100, Delta=1.0, sigma=0.3, density_ratio=30.0)
    assert initial_contraction_bound(lo) < initial_contraction_bound(hi)
    exact = 1.0 - 0.3 * 30.0 ** (1.0 / 2.0)
    assert initial_contraction_bound(lo) == pytest.approx(exact + 1.0, rel=REL)


def test_x_coth_x_limit_and_growth():
    assert x_coth_x(0.0) == 1.0
    assert x_coth_x(1.0) == pytest.approx(1.3130352854993312, rel=REL)
    # small-x expansion: 1 + x^2/3 + O(x^4)
    assert x_coth_x(1e-4) == pytest.approx(1.0 + 1e-8 / 3.0, abs=1e-14)
    assert x_coth_x(25.0) == 25.0  # coth is 1 to machine precision
    with pytest.raises(DomainError):
        x_coth_x(-0.5)


def test_tearing_time_oracles():
    assert tearing_time_bound(2, 0.0, 0.0, 4.0) == pytest.approx(0.5, rel=REL)
    assert tearing_time_bound(2, 1.0, 2.0, 5.0) == pytest.approx(
        0.4533650056745346, rel=REL
    )
    # buffer wins: lambda0 below sqrt(n K) D gives no guarantee
    assert tearing_time_bound(2, 1.0, 2.0, 2.0) is None


def test_tearing_time_small_K_limit():
    # K -> 0 recovers the flat value continuously
    flat = tearing_time_bound(3, 0.0, 5.0, 2.0)
    for K in (1e-6, 1e-9, 1e-12):
        curved = tearing_time_bound(3, K, 5.0, 2.0)
        assert curved is not None
        assert curved == pytest.approx(flat, rel=1e-5)


def test_tearing_time_buffer_threshold():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        K = float(rng.uniform(0.01, 4.0))
        D = float(rng.uniform(0.1, 5.0))
        s = math.sqrt(n * K) * D
        assert tearing_time_bound(n, K, D, s * 0.999) is None
        t = tearing_time_bound(n, K, D, s * 1.001)
        assert t is not None and t > 0.0
        # the curvature buffer only ever delays the flat estimate
        assert t > n / (s * 1.001)
    with pytest.raises(DomainError):
        tearing_time_bound(2, 0.0, 1.0, 0.0)


def test_conjugate_point_oracles():
    assert conjugate_point_distance(1.0) == pytest.approx(math.pi, rel=REL)
    assert conjugate_point_distance(4.0) == pytest.approx(math.pi / 2.0, rel=REL)
    assert conjugate_point_distance(0.0) == math.inf
    with pytest.raises(DomainError):
        conjugate_point_distance(-1.0)


def test_required_viscosity_oracles():
    assert required_viscosity(1.0, 1.0, 0.0, 6.0) == pytest.approx(6.0, rel=REL)
    assert required_viscosity(2.0, 1.0, 0.5, 4.0) == pytest.approx(16.0, rel=REL)
    # denominator closes at kappa_minus * Delta^2 = 1: impossible is a value
    assert required_viscosity(1.0, 2.67, 0.1403, 3.0) == math.inf
    assert required_viscosity(1.0, 2.67, 0.1403, 0.0) == math.inf


def test_required_viscosity_divergence_approach():
    # monotone blow-up as Delta approaches the critical width from below
    kappa_minus = 0.1403
    crit = 1.0 / math.sqrt(kappa_minus)
    deltas = [0.5 * crit, 0.9 * crit, 0.99 * crit, 0.999 * crit]
    vals = [required_viscosity(2.0, d, kappa_minus, 6.0) for d in deltas]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(math.isfinite(v) for v in vals)
    assert required_viscosity(2.0, crit * 1.001, kappa_minus, 6.0) == math.inf


def test_identity_entropy_oracles():
    assert identity_entropy_bound(2, 1.0 / (4.0 * math.pi * math.e)) == pytest.approx(
        0.0, abs=1e-12
    )
    assert identity_entropy_bound(2, 1.0) == pytest.approx(3.5310242469692907, rel=REL)
    assert identity_entropy_bound(4, 1.0) == pytest.approx(7.0620484939385815, rel=REL)


def test_shock_thickness_oracles():
    assert shock_thickness(1.0, 2.0) == 0.5
    assert shock_thickness(0.0, 5.0) == 0.0
    assert shock_thickness(6.0, 6.0) == 1.0
    with pytest.raises(DomainError):
        shock_thickness(1.0, 0.0)
    with pytest.raises(DomainError):
        shock_thickness(-1.0, 1.0)


def test_params_validation():
    with pytest.raises(DomainError):
        GeometryParams(n=0, Delta=1.0, sigma=0.1)
    with pytest.raises(DomainError):
        GeometryParams(n=2, Delta=0.0, sigma=0.1)
    with pytest.raises(DomainError):
        GeometryParams(n=2, Delta=1.0, sigma=0.1, kappa=1.0, K_pos=1.0)
    with pytest.raises(DomainError):
        GeometryParams(n=2, Delta=1.0, sigma=0.1, density_ratio=0.5)
    # C0 defaults to the dimension
    assert GeometryParams(n=7, Delta=1.0, sigma=0.1).effective_C0 == 7.0
    assert GeometryParams(n=7, Delta=1.0, sigma=0.1, C0=2.0).effective_C0 == 2.0
