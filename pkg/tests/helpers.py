"""Shared builders for small synthetic models used across the test suite."""

import numpy as np

from margfact import (InteractionTensorSpec, ModelSpec, ObservationKind,
                      ObservationMatrix, RegularizerConfig, SolverConfig,
                      build_model)


def make_obs(name, values, distribution, datatype, shared_ids=None):
    values = np.asarray(values, dtype=float)
    shared_ids = shared_ids or [f"p{i}" for i in range(values.shape[0])]
    item_ids = [f"{name}_{j}" for j in range(values.shape[1])]
    return ObservationMatrix(name, shared_ids, item_ids,
                             ObservationKind(distribution, datatype), values)


def small_mixed_model(seed=0, n_patients=6, rank=2, gamma=1e-3, beta=0.5):
    """Two tensors over four modalities covering all four observation kinds."""
    rng = np.random.default_rng(seed)
    shared_ids = [f"p{i}" for i in range(n_patients)]
    counts = rng.poisson(2.0, size=(n_patients, 4)).astype(float)
    binar = (rng.uniform(size=(n_patients, 3)) < 0.5).astype(float)
    reals = rng.uniform(0.0, 2.0, size=(n_patients, 3))
    gbin = (rng.uniform(size=(n_patients, 2)) < 0.5).astype(float)
    observations = {
        "Rx": make_obs("Rx", counts, "poisson", "integer", shared_ids),
        "Dx": make_obs("Dx", binar, "poisson", "binary", shared_ids),
        "Fluid": make_obs("Fluid", reals, "gaussian", "real", shared_ids),
        "Gb": make_obs("Gb", gbin, "gaussian", "binary", shared_ids),
    }
    tensors = [
        InteractionTensorSpec("dx_rx", ["Dx", "Rx"], "poisson"),
        InteractionTensorSpec("gb_fluid", ["Gb", "Fluid"], "gaussian", sigma2=0.5),
    ]
    spec = ModelSpec(rank=rank, tensors=tensors,
                     regularizer=RegularizerConfig(gamma=gamma, alpha=0.7, beta=beta, theta=0.5),
                     init_seed=seed, solver=SolverConfig(max_sweeps=50, tol=1e-8))
    return build_model(spec, observations)


def poisson_pair_model(seed=0, n_patients=8, n_a=4, n_b=5, rank=2, gamma=0.0, beta=0.0,
                       max_sweeps=200, tol=1e-8):
    """Plain two-modality Poisson-count model (the single-tensor special case)."""
    rng = np.random.default_rng(seed)
    shared_ids = [f"p{i}" for i in range(n_patients)]
    observations = {
        "A": make_obs("A", rng.poisson(2.0, size=(n_patients, n_a)).astype(float),
                      "poisson", "integer", shared_ids),
        "B": make_obs("B", rng.poisson(2.0, size=(n_patients, n_b)).astype(float),
                      "poisson", "integer", shared_ids),
    }
    spec = ModelSpec(rank=rank,
                     tensors=[InteractionTensorSpec("ab", ["A", "B"], "poisson")],
                     regularizer=RegularizerConfig(gamma=gamma, alpha=0.7, beta=beta, theta=0.5),
                     init_seed=seed, solver=SolverConfig(max_sweeps=max_sweeps, tol=tol))
    return build_model(spec, observations)
