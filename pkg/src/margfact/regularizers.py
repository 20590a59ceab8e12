"""Sparsity (elastic net) and diversity (pairwise angular) penalties.

Both act on the modality factor matrices only; the shared entity factor
is never regularized. Gradients are analytic: the l1 term uses the
one-sided derivative from the non-negative side, and zero columns
contribute cosine 0 (no penalty, no gradient).
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class RegularizerConfig:
    gamma: float = 1e-5   # elastic-net weight
    alpha: float = 0.7    # l2 / l1 mixing
    beta: float = 1.0     # angular weight
    theta: float | dict = 0.5  # angular threshold, scalar or per-modality map

    def __post_init__(self):
        if self.gamma < 0 or self.beta < 0:
            raise ValueError("regularizer weights must be non-negative")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        thetas = self.theta.values() if isinstance(self.theta, dict) else [self.theta]
        if any(not (0.0 <= t <= 1.0) for t in thetas):
            raise ValueError("theta must lie in [0, 1]")

    def theta_for(self, modality):
        if isinstance(self.theta, dict):
            return self.theta.get(modality, 0.5)
        return self.theta

    def to_dict(self):
        return {"gamma": self.gamma, "alpha": self.alpha, "beta": self.beta, "theta": self.theta}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("gamma", "alpha", "beta", "theta") if k in d})


def elastic_net(factors, cfg):
    """gamma * sum over factors and columns of alpha ||u||_2^2 + (1 - alpha) ||u||_1."""
    if cfg.gamma == 0.0:
        return 0.0
    total = 0.0
    for U in _values(factors):
        total += cfg.alpha * float(np.sum(U * U)) + (1.0 - cfg.alpha) * float(np.sum(np.abs(U)))
    return cfg.gamma * total


def elastic_net_grad(U, cfg):
    """Gradient of the elastic net on one non-negative factor block."""
    if cfg.gamma == 0.0:
        return np.zeros_like(U)
    return cfg.gamma * (2.0 * cfg.alpha * U + (1.0 - cfg.alpha))


def _column_cosines(U):
    """(cos matrix, norms); zero columns get cosine 0 against everything."""
    norms = np.linalg.norm(U, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    Un = U / safe
    cos = Un.T @ Un
    dead = norms == 0
    cos[dead, :] = 0.0
    cos[:, dead] = 0.0
    return cos, norms


def angular_penalty(factors, cfg, modality_names=None):
    """beta * sum over factors of sum_{r > r'} max(0, cos(u_r, u_r') - theta)^2."""
    if cfg.beta == 0.0:
        return 0.0
    total = 0.0
    for name, U in _items(factors, modality_names):
        theta = cfg.theta_for(name)
        cos, _ = _column_cosines(U)
        R = U.shape[1]
        iu = np.triu_indices(R, k=1)
        h = np.maximum(0.0, cos[iu] - theta)
        total += float(np.sum(h * h))
    return cfg.beta * total


def angular_penalty_grad(U, cfg, modality=None):
    """Gradient of the angular penalty on one factor block."""
    grad = np.zeros_like(U)
    if cfg.beta == 0.0:
        return grad
    theta = cfg.theta_for(modality)
    cos, norms = _column_cosines(U)
    R = U.shape[1]
    for r in range(1, R):
        for rp in range(r):
            if norms[r] == 0 or norms[rp] == 0:
                continue
            h = cos[r, rp] - theta
            if h <= 0:
                continue
            u, v = U[:, r], U[:, rp]
            # d cos / d u = v / (|u||v|) - cos * u / |u|^2
            dcos_du = v / (norms[r] * norms[rp]) - cos[r, rp] * u / (norms[r] ** 2)
            dcos_dv = u / (norms[r] * norms[rp]) - cos[r, rp] * v / (norms[rp] ** 2)
            grad[:, r] += 2.0 * h * dcos_du
            grad[:, rp] += 2.0 * h * dcos_dv
    return cfg.beta * grad


def _values(factors):
    return factors.values() if isinstance(factors, dict) else factors


def _items(factors, names):
    if isinstance(factors, dict):
        return factors.items()
    if names is None:
        names = [None] * len(factors)
    return zip(names, factors)
