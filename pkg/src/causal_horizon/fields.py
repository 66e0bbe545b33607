"""Velocity fields with Jacobian-vector products and exact divergences.

Every field knows its dimension, can evaluate u(x, t), push a tangent vector
through its spatial Jacobian (jvp), and report its divergence.  Analytic
Jacobians are used where the field is closed-form; the multilayer perceptron
field propagates forward-mode dual numbers (one derivative channel) through
its layers.  Fields without a closed-form divergence fall back to summing the
n basis-vector JVPs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    DomainError,
    IngestError,
    PastSingularityError,
    TrainingDivergedError,
    TrainingError,
)

__all__ = [
    "VelocityField",
    "CanyonField",
    "TearingField",
    "LinearField",
    "KdeScoreField",
    "MlpField",
    "CompositeField",
    "PointCloud",
    "MlpSpec",
    "MlpTraining",
    "make_canyon",
    "make_tearing",
    "make_kde_score",
    "make_mlp",
    "make_linear",
    "jvp",
    "exact_divergence",
    "silverman_bandwidth",
]


class VelocityField:
    """Base interface; concrete fields set dim/kind and the capability flags."""

    dim: int
    kind: str
    has_exact_divergence: bool = False
    has_analytic_jvp: bool = False

    def eval(self, x: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.eval(x, t)

    def jvp(self, x: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def divergence(self, x: np.ndarray, t: float) -> float:
        # generic fallback: trace assembled from basis-vector JVPs
        total = 0.0
        e = np.zeros(self.dim)
        for i in range(self.dim):
            e[i] = 1.0
            total += float(self.jvp(x, t, e)[i])
            e[i] = 0.0
        return total


def jvp(field: VelocityField, x: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
    """Jacobian-vector product (d u / d x) v at (x, t)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != (field.dim,) or v.shape != (field.dim,):
        raise DomainError(
            f"expected shape ({field.dim},) for x and v, got {x.shape} and {v.shape}"
        )
    return field.jvp(x, t, v)


def exact_divergence(field: VelocityField, x: np.ndarray, t: float) -> float:
    """Divergence of u at (x, t): closed form where available, else basis sum."""
    x = np.asarray(x, dtype=float)
    if x.shape != (field.dim,):
        raise DomainError(f"expected shape ({field.dim},) for x, got {x.shape}")
    return field.divergence(x, t)


# ---------------------------------------------------------------------------
# analytic benchmark fields


class CanyonField(VelocityField):
    """Planar bottleneck drift: u(x, t) = [-6 * tanh(0.1 * x0) * (t + 0.1), D].

    Coordinate 0 funnels mass toward the canyon floor x0 = 0 with a
    time-growing amplitude; coordinate 1 carries constant transport D.
    """

    kind = "canyon"
    dim = 2
    has_exact_divergence = True
    has_analytic_jvp = True

    def __init__(self, D: float):
        self.D = float(D)

    def eval(self, x, t):
        return np.array([-6.0 * math.tanh(0.1 * x[0]) * (t + 0.1), self.D])

    def _du0_dx0(self, x, t):
        c = math.cosh(0.1 * x[0])
        return -0.6 * (t + 0.1) / (c * c)

    def jvp(self, x, t, v):
        return np.array([self._du0_dx0(x, t) * v[0], 0.0])

    def divergence(self, x, t):
        return self._du0_dx0(x, t)


class TearingField(VelocityField):
    """Exact inviscid-Burgers solution with linear initial data.

    u(x, t) = -(lambda0/n) * (x - c(t)) / (1 - lambda0*t/n) + D * e1 with the
    moving center c(t) = c0 + D*t*e1.  Its divergence along any characteristic
    is exactly -lambda0 / (1 - lambda0*t/n), blowing up at t = n/lambda0;
    evaluation at or past that time raises PastSingularityError.
    """

    kind = "tearing"
    has_exact_divergence = True
    has_analytic_jvp = True

    def __init__(self, n: int, D: float, lambda0: float, center0: np.ndarray | None = None):
        if n < 1:
            raise DomainError(f"dimension n must be >= 1, got {n}")
        if lambda0 <= 0.0:
            raise DomainError(f"lambda0 must be positive, got {lambda0}")
        self.dim = int(n)
        self.D = float(D)
        self.lambda0 = float(lambda0)
        self.t_singular = n / lambda0
        self.center0 = np.zeros(n) if center0 is None else np.asarray(center0, dtype=float)
        self._e1 = np.zeros(n)
        self._e1[min(1, n - 1)] = 1.0  # transport axis; falls back to axis 0 in 1D

    def _gain(self, t: float) -> float:
        if t >= self.t_singular:
            raise PastSingularityError(t, self.t_singular)
        return (self.lambda0 / self.dim) / (1.0 - self.lambda0 * t / self.dim)

    def center(self, t: float) -> np.ndarray:
        return self.center0 + self.D * t * self._e1

    def eval(self, x, t):
        g = self._gain(t)
        return -g * (np.asarray(x, dtype=float) - self.center(t)) + self.D * self._e1

    def jvp(self, x, t, v):
        return -self._gain(t) * np.asarray(v, dtype=float)

    def divergence(self, x, t):
        return -self.dim * self._gain(t)


class LinearField(VelocityField):
    """u(x, t) = A x + b for a constant square matrix A and offset b."""

    kind = "linear"
    has_exact_divergence = True
    has_analytic_jvp = True

    def __init__(self, A: np.ndarray, b: np.ndarray | None = None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError(f"A must be square, got shape {A.shape}")
        self.A = A
        self.dim = A.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        if self.b.shape != (self.dim,):
            raise DomainError(f"offset must have shape ({self.dim},), got {self.b.shape}")
        self._trace = float(np.trace(A))

    def eval(self, x, t):
        return self.A @ np.asarray(x, dtype=float) + self.b

    def jvp(self, x, t, v):
        return self.A @ np.asarray(v, dtype=float)

    def divergence(self, x, t):
        return self._trace


# ---------------------------------------------------------------------------
# kernel density estimate score field


def silverman_bandwidth(points: np.ndarray) -> float:
    """Default bandwidth: rms per-dimension spread times m^(-1/(dim+4))."""
    m, dim = points.shape
    if m < 2:
        raise DomainError("default bandwidth needs at least 2 points; pass one explicitly")
    spread = math.sqrt(float(np.mean(np.var(points, axis=0, ddof=1))))
    if spread == 0.0:
        raise DomainError("degenerate cloud (zero spread); pass a bandwidth explicitly")
    return spread * m ** (-1.0 / (dim + 4))


@dataclass
class PointCloud:
    """Point set with a kernel bandwidth; backing store for KDE score fields."""

    points: np.ndarray
    bandwidth: float | None = None
    labels: list[str] | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise DomainError(f"points must be a nonempty (m, dim) array, got {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise IngestError("point cloud contains non-finite coordinates")
        if self.bandwidth is None:
            self.bandwidth = silverman_bandwidth(self.points)
        if self.bandwidth <= 0.0:
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.labels is not None and len(self.labels) != self.points.shape[0]:
            raise DomainError("labels length must match point count")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def log_density(self, x: np.ndarray) -> float:
        """Log KDE density at x, up to the normalization constant."""
        d2 = np.sum((self.points - x) ** 2, axis=1)
        ell = -0.5 * d2 / (self.bandwidth**2)
        mx = float(np.max(ell))
        return mx + math.log(float(np.sum(np.exp(ell - mx))))


class KdeScoreField(VelocityField):
    """Target attraction plus score guidance from a kernel density estimate.

    u(x) = D * (target - x)/||target - x||   (zero inside stop_radius of target)
         + beta * grad log rho_hat(x)

    The score part is the exact gradient of the Gaussian-mixture log density,
    so the beta-term alone is a conservative field.  Time-independent.
    """

    kind = "kde_score"
    has_exact_divergence = True
    has_analytic_jvp = True

    def __init__(
        self,
        cloud: PointCloud,
        target: np.ndarray,
        beta: float,
        D: float,
        stop_radius: float | None = None,
    ):
        self.cloud = cloud
        self.target = np.asarray(target, dtype=float)
        if self.target.shape != (cloud.dim,):
            raise DomainError(f"target must have shape ({cloud.dim},)")
        self.beta = float(beta)
        self.D = float(D)
        self.stop_radius = cloud.bandwidth if stop_radius is None else float(stop_radius)
        self.dim = cloud.dim

    # softmax weights over mixture components; g_i = (p_i - x)/h^2
    def _weights(self, x):
        h2 = self.cloud.bandwidth**2
        diff = self.cloud.points - x
        ell = 0.5 * np.sum(diff * diff, axis=1) / -h2
        w = np.exp(ell - np.max(ell))
        w /= np.sum(w)
        return w, diff / h2

    def score(self, x: np.ndarray) -> np.ndarray:
        w, g = self._weights(np.asarray(x, dtype=float))
        return g.T @ w

    def _attraction(self, x):
        q = self.target - x
        r = float(np.linalg.norm(q))
        if r <= self.stop_radius:
            return np.zeros(self.dim), None, r
        return self.D * q / r, q / r, r

    def eval(self, x, t):
        x = np.asarray(x, dtype=float)
        att, _, _ = self._attraction(x)
        return att + self.beta * self.score(x)

    def jvp(self, x, t, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        h2 = self.cloud.bandwidth**2
        w, g = self._weights(x)
        gbar = g.T @ w
        # Hessian of log rho_hat: -I/h^2 + weighted covariance of the g_i
        gv = g @ v
        hess_v = -v / h2 + g.T @ (w * gv) - gbar * float(gbar @ v)
        out = self.beta * hess_v
        att, q_unit, r = self._attraction(x)
        if q_unit is not None:
            out += self.D * (-v / r + q_unit * float(q_unit @ v) / r)
        return out

    def divergence(self, x, t):
        x = np.asarray(x, dtype=float)
        h2 = self.cloud.bandwidth**2
        w, g = self._weights(x)
        gbar = g.T @ w
        div = self.beta * (
            -self.dim / h2 + float(np.sum(w * np.sum(g * g, axis=1))) - float(gbar @ gbar)
        )
        _, q_unit, r = self._attraction(x)
        if q_unit is not None:
            div += -self.D * (self.dim - 1) / r
        return div


# ---------------------------------------------------------------------------
# multilayer perceptron field


@dataclass
class MlpTraining:
    """Regression target and optimizer settings for surrogate training."""

    target: VelocityField
    learning_rate: float = 1e-3
    epochs: int = 1000
    num_samples: int = 256
    sample_center: np.ndarray | float = 0.0
    sample_radius: float = 1.0
    t_window: float = 1.0


@dataclass
class MlpSpec:
    dim: int
    hidden: int = 128
    training: MlpTraining | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dim}")
        if self.hidden < 1:
            raise DomainError(f"hidden width must be >= 1, got {self.hidden}")


class MlpField(VelocityField):
    """Two-hidden-layer tanh network mapping (x, t) to a velocity.

    JVPs propagate a single dual (tangent) channel through the layers; the
    exact divergence is the trace of the full Jacobian assembled from all
    basis tangents in one batched pass.
    """

    kind = "mlp"
    has_exact_divergence = True  # via batched basis JVPs, exact for the network
    has_analytic_jvp = True

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != 3 or len(biases) != 3:
            raise DomainError("expected exactly 3 layers (2 hidden + output)")
        self.weights = weights
        self.biases = biases
        self.dim = weights[2].shape[0]
        if weights[0].shape[1] != self.dim + 1:
            raise DomainError("first layer must take dim+1 inputs (x and t)")

    def _hidden(self, x, t):
        z = np.concatenate([x, [t]])
        h1 = np.tanh(self.weights[0] @ z + self.biases[0])
        h2 = np.tanh(self.weights[1] @ h1 + self.biases[1])
        return h1, h2

    def eval(self, x, t):
        _, h2 = self._hidden(np.asarray(x, dtype=float), t)
        return self.weights[2] @ h2 + self.biases[2]

    def jvp(self, x, t, v):
        x = np.asarray(x, dtype=float)
        h1, h2 = self._hidden(x, t)
        dz = np.concatenate([np.asarray(v, dtype=float), [0.0]])  # t carries no tangent
        d1 = (1.0 - h1 * h1) * (self.weights[0] @ dz)
        d2 = (1.0 - h2 * h2) * (self.weights[1] @ d1)
        return self.weights[2] @ d2

    def divergence(self, x, t):
        x = np.asarray(x, dtype=float)
        h1, h2 = self._hidden(x, t)
        # all basis tangents at once: columns of the spatial Jacobian
        D1 = (1.0 - h1 * h1)[:, None] * self.weights[0][:, : self.dim]
        D2 = (1.0 - h2 * h2)[:, None] * (self.weights[1] @ D1)
        return float(np.einsum("ij,ji->", self.weights[2], D2))


class CompositeField(VelocityField):
    """Pointwise sum of same-dimension fields."""

    kind = "custom"

    def __init__(self, *fields: VelocityField):
        if not fields:
            raise DomainError("need at least one component field")
        dims = {f.dim for f in fields}
        if len(dims) != 1:
            raise DomainError(f"component dimensions differ: {sorted(dims)}")
        self.fields = fields
        self.dim = fields[0].dim
        self.has_exact_divergence = all(f.has_exact_divergence for f in fields)
        self.has_analytic_jvp = all(f.has_analytic_jvp for f in fields)

    def eval(self, x, t):
        out = self.fields[0].eval(x, t)
        for f in self.fields[1:]:
            out = out + f.eval(x, t)
        return out

    def jvp(self, x, t, v):
        out = self.fields[0].jvp(x, t, v)
        for f in self.fields[1:]:
            out = out + f.jvp(x, t, v)
        return out

    def divergence(self, x, t):
        return sum(f.divergence(x, t) for f in self.fields)


# ---------------------------------------------------------------------------
# factories


def make_canyon(D: float) -> CanyonField:
    return CanyonField(D)


def make_tearing(
    n: int,
    D: float,
    sigma: float,
    Delta: float,
    *,
    kappa: float = 0.0,
    density_ratio: float = 1.0,
    lambda0: float | None = None,
    center0: np.ndarray | None = None,
) -> TearingField:
    """Tearing field with contraction tied to the geometry bound.

    By default lambda0 = initial_contraction_bound at the given scales with
    flat geometry (kappa = 0).  Curved scenarios pass kappa > 0 (the
    kappa*D*coth(kappa*D) term then makes lambda0 grow like D), and an
    explicit lambda0 overrides the derivation entirely.
    """
    if lambda0 is None:
        from .geometry import GeometryParams, initial_contraction_bound

        params = GeometryParams(
            n=n, Delta=Delta, sigma=sigma, D=D, kappa=kappa, density_ratio=density_ratio
        )
        lambda0 = initial_contraction_bound(params)
        if lambda0 <= 0.0:
            raise DomainError(f"derived lambda0 = {lambda0:.6g} is not positive")
    return TearingField(n=n, D=D, lambda0=lambda0, center0=center0)


def make_kde_score(
    cloud: PointCloud,
    target: np.ndarray,
    beta: float,
    D: float,
    stop_radius: float | None = None,
) -> KdeScoreField:
    return KdeScoreField(cloud, target, beta, D, stop_radius)


def make_linear(A: np.ndarray, b: np.ndarray | None = None) -> LinearField:
    return LinearField(A, b)


def _xavier_normal(rng, fan_out: int, fan_in: int) -> np.ndarray:
    std = math.sqrt(2.0 / (fan_in + fan_out))
    return std * rng.standard_normal((fan_out, fan_in))


def make_mlp(spec: MlpSpec, seed: int) -> MlpField:
    """Build (and optionally train) an MLP field from a seed.

    Weights are Xavier-normal initialized from the seed, so construction is
    deterministic.  When spec.training is set, the network is regressed onto
    the reference field with full-batch adaptive-moment gradient steps; the
    mean squared field error must fall by at least 90% or TrainingError is
    raised.  Non-finite losses raise TrainingDivergedError.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    dim, hidden = spec.dim, spec.hidden
    weights = [
        _xavier_normal(rng, hidden, dim + 1),
        _xavier_normal(rng, hidden, hidden),
        _xavier_normal(rng, dim, hidden),
    ]
    biases = [np.zeros(hidden), np.zeros(hidden), np.zeros(dim)]
    net = MlpField(weights, biases)
    if spec.training is not None:
        _train(net, spec.training, rng)
    return net


def _train(net: MlpField, tr: MlpTraining, rng) -> None:
    dim = net.dim
    center = np.broadcast_to(np.asarray(tr.sample_center, dtype=float), (dim,))
    X = center + tr.sample_radius * rng.standard_normal((tr.num_samples, dim))
    T = rng.uniform(0.0, tr.t_window, size=tr.num_samples)
    Y = np.stack([tr.target.eval(x, t) for x, t in zip(X, T)])

    Z = np.concatenate([X, T[:, None]], axis=1)  # (m, dim+1)
    m = tr.num_samples
    params = net.weights + net.biases
    mom1 = [np.zeros_like(p) for p in params]
    mom2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps_hat = 0.9, 0.999, 1e-8
    initial_loss = None

    for epoch in range(1, tr.epochs + 1):
        A1 = Z @ net.weights[0].T + net.biases[0]
        H1 = np.tanh(A1)
        A2 = H1 @ net.weights[1].T + net.biases[1]
        H2 = np.tanh(A2)
        out = H2 @ net.weights[2].T + net.biases[2]
        err = out - Y
        loss = float(np.mean(err * err))
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
        if initial_loss is None:
            initial_loss = loss

        g_out = 2.0 * err / (m * dim)
        gW3 = g_out.T @ H2
        gb3 = g_out.sum(axis=0)
        g2 = (g_out @ net.weights[2]) * (1.0 - H2 * H2)
        gW2 = g2.T @ H1
        gb2 = g2.sum(axis=0)
        g1 = (g2 @ net.weights[1]) * (1.0 - H1 * H1)
        gW1 = g1.T @ Z
        gb1 = g1.sum(axis=0)

        grads = [gW1, gW2, gW3, gb1, gb2, gb3]
        bc1 = 1.0 - beta1**epoch
        bc2 = 1.0 - beta2**epoch
        for p, g, m1, m2 in zip(params, grads, mom1, mom2):
            m1 *= beta1
            m1 += (1.0 - beta1) * g
            m2 *= beta2
            m2 += (1.0 - beta2) * g * g
            p -= tr.learning_rate * (m1 / bc1) / (np.sqrt(m2 / bc2) + eps_hat)

    final = float(np.mean((np.tanh((np.tanh(Z @ net.weights[0].T + net.biases[0]))
                                   @ net.weights[1].T + net.biases[1])
                           @ net.weights[2].T + net.biases[2] - Y) ** 2))
    if not math.isfinite(final):
        raise TrainingDivergedError("non-finite loss after training")
    if final > 0.1 * initial_loss:
        raise TrainingError(
            f"training loss fell only {100 * (1 - final / initial_loss):.1f}% "
            f"(from {initial_loss:.4g} to {final:.4g}); need >= 90%"
        )
