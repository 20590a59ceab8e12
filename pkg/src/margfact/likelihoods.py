"""Negative log-likelihood kernels over marginal observations.

Four observation laws are supported: Poisson counts, Poisson-quantized
binary, Gaussian reals, and Gaussian-quantized binary. Each kernel is an
elementwise cell function summed over the matrix, with an analytic
gradient with respect to the reconstruction. All kernels are guarded so
they stay finite on the non-negative orthant (projected factors can hit
exact zero).
"""

import math
from dataclasses import dataclass

import numpy as np

EPS = 1e-12

POISSON = "poisson"
GAUSSIAN = "gaussian"
INTEGER = "integer"
BINARY = "binary"
REAL = "real"

VALID_KINDS = {
    (POISSON, INTEGER),
    (POISSON, BINARY),
    (GAUSSIAN, REAL),
    (GAUSSIAN, BINARY),
}

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class ObservationKind:
    distribution: str  # "poisson" | "gaussian"
    datatype: str      # "integer" | "binary" | "real"

    def __post_init__(self):
        if (self.distribution, self.datatype) not in VALID_KINDS:
            raise ValueError(f"invalid observation kind: {self.distribution}/{self.datatype}")

    @classmethod
    def parse(cls, token):
        """Parse 'poisson-integer' style tokens."""
        dist, _, dtype = token.partition("-")
        return cls(dist, dtype)

    def __str__(self):
        return f"{self.distribution}-{self.datatype}"


@dataclass(frozen=True)
class GaussianParams:
    """Marginal Gaussian parameters: per-entry variance and marginalization multiplicity."""
    sigma2: float
    t_n: int

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.t_n < 1:
            raise ValueError("t_n must be a positive integer")


def erf(x):
    """Error function via its Maclaurin series.

    Terms are accumulated until the next one drops below 1e-15 in
    magnitude; |x| >= 6 saturates to +-1. Accumulation runs in extended
    precision because the alternating series loses ~|x| * e^{x^2} * eps
    of absolute accuracy in float64 near the edge of the grid.
    """
    x_in = np.asarray(x, dtype=float)
    scalar = x_in.ndim == 0
    xa = np.atleast_1d(x_in).astype(np.longdouble)
    out = np.sign(xa).astype(np.longdouble)
    active = np.abs(xa) < 6.0
    if np.any(active):
        z = xa[active]
        z2 = z * z
        term = z.copy()           # (-1)^k z^{2k+1} / k!, k = 0
        acc = z / 1.0
        k = 0
        while True:
            k += 1
            term = term * (-z2) / k
            contrib = term / (2 * k + 1)
            acc = acc + contrib
            if np.max(np.abs(contrib)) < 1e-15:
                break
        out[active] = np.longdouble(_TWO_OVER_SQRT_PI) * acc
    out = out.astype(float)
    return float(out[0]) if scalar else out.reshape(x_in.shape)


def erf_derivative(x):
    """d/dx erf(x) = 2/sqrt(pi) * exp(-x^2)."""
    x = np.asarray(x, dtype=float)
    res = _TWO_OVER_SQRT_PI * np.exp(-x * x)
    return float(res) if res.ndim == 0 else res


def _floor(vhat):
    return np.maximum(vhat, EPS)


def _clamp_prob(p):
    return np.clip(p, EPS, 1.0 - EPS)


def _log_expm1(v):
    """log(e^v - 1), stable for both small and large v."""
    v = _floor(v)
    small = v < 30.0
    out = np.where(small, np.log(np.expm1(np.where(small, v, 1.0))),
                   v + np.log1p(-np.exp(-v)))
    return out


def nll_poisson_integer_cells(V, Vhat):
    return Vhat - V * np.log(_floor(Vhat))


def nll_poisson_binary_cells(Vb, Vhat):
    return _floor(Vhat) - Vb * _log_expm1(Vhat)


def nll_gaussian_real_cells(V, Vhat, params):
    ts2 = params.t_n * params.sigma2
    d = V - Vhat
    return 0.5 * (math.log(2.0 * math.pi * ts2) + d * d / ts2)


def gaussian_binary_prob(Vhat, params):
    """Pr(quantized value = 1) = 1/2 - 1/2 erf(-vhat / (sqrt(2 t_n) sigma))."""
    denom = math.sqrt(2.0 * params.t_n) * math.sqrt(params.sigma2)
    return 0.5 - 0.5 * erf(-np.asarray(Vhat, dtype=float) / denom)


def nll_gaussian_binary_cells(Vb, Vhat, params):
    p = _clamp_prob(gaussian_binary_prob(Vhat, params))
    return -(Vb * np.log(p) + (1.0 - Vb) * np.log(1.0 - p))


def nll_poisson_integer(V, Vhat):
    """Sum over cells of vhat - v log(vhat); Poisson NLL without the log(v!) constant."""
    return float(np.sum(nll_poisson_integer_cells(np.asarray(V, float), np.asarray(Vhat, float))))


def nll_poisson_binary(Vb, Vhat):
    """Bernoulli NLL of the Poisson-quantized observation, p = 1 - exp(-vhat)."""
    return float(np.sum(nll_poisson_binary_cells(np.asarray(Vb, float), np.asarray(Vhat, float))))


def nll_gaussian_real(V, Vhat, params):
    """Gaussian NLL of the marginal with variance t_n sigma^2."""
    return float(np.sum(nll_gaussian_real_cells(np.asarray(V, float), np.asarray(Vhat, float), params)))


def nll_gaussian_binary(Vb, Vhat, params):
    """Bernoulli NLL of the Gaussian-quantized observation."""
    return float(np.sum(nll_gaussian_binary_cells(np.asarray(Vb, float), np.asarray(Vhat, float), params)))


def nll_cells(kind, V, Vhat, params=None):
    """Elementwise NLL contributions for any observation kind."""
    V = np.asarray(V, dtype=float)
    Vhat = np.asarray(Vhat, dtype=float)
    if kind.distribution == POISSON:
        if kind.datatype == INTEGER:
            return nll_poisson_integer_cells(V, Vhat)
        return nll_poisson_binary_cells(V, Vhat)
    if kind.datatype == REAL:
        return nll_gaussian_real_cells(V, Vhat, params)
    return nll_gaussian_binary_cells(V, Vhat, params)


def nll(kind, V, Vhat, params=None):
    return float(np.sum(nll_cells(kind, V, Vhat, params)))


def grad_nll_wrt_reconstruction(kind, V, Vhat, params=None):
    """Elementwise d NLL / d vhat for the matching kernel."""
    V = np.asarray(V, dtype=float)
    Vhat = np.asarray(Vhat, dtype=float)
    if kind.distribution == POISSON:
        if kind.datatype == INTEGER:
            return 1.0 - V / _floor(Vhat)
        p = _clamp_prob(-np.expm1(-_floor(Vhat)))
        return 1.0 - V / p
    if kind.datatype == REAL:
        return (Vhat - V) / (params.t_n * params.sigma2)
    denom = math.sqrt(2.0 * params.t_n) * math.sqrt(params.sigma2)
    p = _clamp_prob(gaussian_binary_prob(Vhat, params))
    dp_dvhat = erf_derivative(-Vhat / denom) / (2.0 * denom)
    return -(V / p - (1.0 - V) / (1.0 - p)) * dp_dvhat
