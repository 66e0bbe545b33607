"""Trajectory samplers for deterministic, diffusive, and radar-gated transport.

One integrator serves three modes:

* ``ode``   -- plain characteristics, no noise term;
* ``sde``   -- Euler-Maruyama with a fixed diffusivity ``epsilon_fixed``;
* ``gacf``  -- geometry-aware gating: at each step the divergence reading
               theta_t is compared against ``lambda_thresh``; entropy
               ``epsilon_req`` is injected only while theta_t < lambda_thresh.

Noise-draw discipline: the Gaussian xi is drawn from the trajectory's noise
stream at every step regardless of epsilon_t, and divergence probes are drawn
at every node regardless of mode, so trigger decisions never shift either
stream.  Consequently gacf with lambda_thresh = -inf is bit-identical to ode,
and with lambda_thresh = +inf bit-identical to sde at epsilon_fixed =
epsilon_req, under the same seed.

log J accumulates the trapezoidal integral of the per-node divergence
readings (exact divergence under divergence_mode="exact", radar mean
otherwise).  Integration stops at the horizon, or earlier when exp(logJ)
drops below ``det_floor``, the field raises past its singularity, or the
state leaves the finite range; the three early outcomes clamp survival_time
identically.

Each trajectory owns two derived substreams: stream(seed, 0) for noise,
stream(seed, 1) for probes.  Ensembles derive per-trajectory seeds as
derive_seed(master_seed, index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DomainError, PastSingularityError
from .fields import VelocityField
from .seeding import derive_seed, stream

__all__ = [
    "SamplerConfig",
    "TrajectoryRecord",
    "run_flow",
    "ensemble_run",
    "identity_loss",
    "survival_fraction",
]

_MODES = ("ode", "sde", "gacf")
_DIV_MODES = ("exact", "hutchinson")


@dataclass
class SamplerConfig:
    mode: str = "ode"
    dt: float = 0.005
    t_max: float = 1.0
    epsilon_fixed: float = 0.0      # sde diffusivity
    epsilon_req: float = 0.0        # gacf injection diffusivity
    lambda_thresh: float = -2.5     # gacf trigger threshold on the radar reading
    M: int = 1                      # probes per radar reading
    divergence_mode: str = "exact"
    det_floor: float = 1e-6         # survival threshold on exp(logJ)
    track_exact_shadow: bool = False

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.divergence_mode not in _DIV_MODES:
            raise DomainError(
                f"divergence_mode must be one of {_DIV_MODES}, got {self.divergence_mode!r}"
            )
        if not (self.dt > 0.0):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.t_max <= 0.0 or self.dt > self.t_max:
            raise DomainError(f"need 0 < dt <= t_max, got dt={self.dt}, t_max={self.t_max}")
        if not (0.0 < self.det_floor < 1.0):
            raise DomainError(f"det_floor must lie in (0, 1), got {self.det_floor}")
        if self.epsilon_fixed < 0.0 or self.epsilon_req < 0.0:
            raise DomainError("diffusivities must be nonnegative")
        if self.M < 1:
            raise DomainError(f"probe count M must be >= 1, got {self.M}")


@dataclass
class TrajectoryRecord:
    times: np.ndarray                 # (k+1,) node times
    states: np.ndarray                # (k+1, dim)
    divergence_estimates: np.ndarray  # (k+1,) per-node radar readings
    epsilon_schedule: np.ndarray      # (k,) injected diffusivity per step
    logJ: np.ndarray                  # (k+1,) trapezoidal integral of readings
    survived: bool
    survival_time: float
    triggered: bool
    trigger_time: float | None
    seed: int
    exact_divergences: np.ndarray | None = None
    logJ_exact: np.ndarray | None = None
    collapse_time: float | None = None  # exact-shadow det_floor crossing

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]


def _radar(field, x, t, config, probe_rng):
    if config.divergence_mode == "exact":
        return field.divergence(x, t)
    z = probe_rng.integers(0, 2, size=(config.M, field.dim)).astype(float) * 2.0 - 1.0
    total = 0.0
    for m in range(config.M):
        total += float(z[m] @ field.jvp(x, t, z[m]))
    return total / config.M


def run_flow(
    field: VelocityField, x0: np.ndarray, config: SamplerConfig, seed: int
) -> TrajectoryRecord:
    """Integrate one trajectory from x0 under the configured mode."""
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (field.dim,):
        raise DomainError(f"x0 must have shape ({field.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x0 must be finite")

    noise_rng = stream(seed, 0)
    probe_rng = stream(seed, 1)
    dt = config.dt
    n_steps = int(round(config.t_max / dt))
    log_floor = math.log(config.det_floor)
    shadow = config.track_exact_shadow

    times = [0.0]
    states = [x.copy()]
    readings = []
    eps_sched = []
    log_j = [0.0]
    exact_divs = [] if shadow else None
    log_j_exact = [0.0] if shadow else None
    collapse_time = None
    triggered = False
    trigger_time = None
    survived = False
    survival_time = 0.0

    def clamp(t_stop):
        nonlocal survival_time
        survival_time = t_stop

    try:
        theta = _radar(field, x, 0.0, config, probe_rng)
        if shadow:
            exact_divs.append(field.divergence(x, 0.0))
    except PastSingularityError:
        # singular at the very start: zero-length record
        return TrajectoryRecord(
            times=np.asarray(times), states=np.asarray(states),
            divergence_estimates=np.zeros(1), epsilon_schedule=np.zeros(0),
            logJ=np.asarray(log_j), survived=False, survival_time=0.0,
            triggered=False, trigger_time=None, seed=seed,
        )
    readings.append(theta)

    done = False
    for k in range(n_steps):
        t_k = k * dt
        t_next = (k + 1) * dt

        if config.mode == "ode":
            eps_k = 0.0
        elif config.mode == "sde":
            eps_k = config.epsilon_fixed
        else:  # gacf gate on the current radar reading
            if theta < config.lambda_thresh:
                eps_k = config.epsilon_req
                if not triggered:
                    triggered = True
                    trigger_time = t_k
            else:
                eps_k = 0.0

        xi = noise_rng.standard_normal(field.dim)  # drawn every step, used or not

        try:
            u = field.eval(x, t_k)
        except PastSingularityError:
            clamp(t_k)
            done = True
            break

        x_next = x + u * dt
        if eps_k > 0.0:
            x_next = x_next + math.sqrt(2.0 * eps_k * dt) * xi
        eps_sched.append(eps_k)

        if not np.all(np.isfinite(x_next)):
            clamp(t_next)
            done = True
            break

        try:
            theta_next = _radar(field, x_next, t_next, config, probe_rng)
            exact_next = field.divergence(x_next, t_next) if shadow else None
        except PastSingularityError:
            clamp(t_next)
            done = True
            break

        x = x_next
        times.append(t_next)
        states.append(x.copy())
        readings.append(theta_next)
        log_j.append(log_j[-1] + 0.5 * dt * (theta + theta_next))
        theta = theta_next

        if shadow:
            log_j_exact.append(log_j_exact[-1] + 0.5 * dt * (exact_divs[-1] + exact_next))
            exact_divs.append(exact_next)
            if collapse_time is None and log_j_exact[-1] < log_floor:
                collapse_time = t_next

        if log_j[-1] < log_floor:
            clamp(t_next)
            done = True
            break

    if not done:
        survived = True
        survival_time = times[-1]

    return TrajectoryRecord(
        times=np.asarray(times),
        states=np.asarray(states),
        divergence_estimates=np.asarray(readings),
        epsilon_schedule=np.asarray(eps_sched),
        logJ=np.asarray(log_j),
        survived=survived,
        survival_time=survival_time,
        triggered=triggered,
        trigger_time=trigger_time,
        seed=seed,
        exact_divergences=np.asarray(exact_divs) if shadow else None,
        logJ_exact=np.asarray(log_j_exact) if shadow else None,
        collapse_time=collapse_time,
    )


def ensemble_run(
    field: VelocityField,
    initials: np.ndarray,
    config: SamplerConfig,
    master_seed: int,
) -> list[TrajectoryRecord]:
    """Run one trajectory per initial state with derived per-index seeds.

    The result is invariant to execution order: trajectory i always uses
    derive_seed(master_seed, i).
    """
    initials = np.asarray(initials, dtype=float)
    if initials.ndim != 2:
        raise DomainError(f"initials must be (count, dim), got shape {initials.shape}")
    return [
        run_flow(field, initials[i], config, derive_seed(master_seed, i))
        for i in range(initials.shape[0])
    ]


def identity_loss(records: list[TrajectoryRecord]) -> float:
    """Mean over dimensions of the sample variance of terminal states."""
    if len(records) < 2:
        raise DomainError("identity_loss needs at least 2 trajectories")
    terminals = np.stack([r.terminal_state for r in records])
    return float(np.mean(np.var(terminals, axis=0, ddof=1)))


def survival_fraction(records: list[TrajectoryRecord]) -> float:
    if not records:
        raise DomainError("survival_fraction needs at least 1 trajectory")
    return float(np.mean([1.0 if r.survived else 0.0 for r in records]))
