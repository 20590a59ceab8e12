"""Observation ingestion, binarization, splitting, and synthetic data.

Observations live on disk as triplet CSVs (patient_id,item_id,value) with
implicit zeros, referenced from a JSON manifest. In memory they are dense
patient-by-item arrays with ordered id lists.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IngestionError
from .likelihoods import (BINARY, GAUSSIAN, INTEGER, POISSON, REAL,
                          GaussianParams, ObservationKind, erf)
from .tensor import reconstruct_marginal


@dataclass
class ObservationMatrix:
    modality: str
    shared_ids: list
    item_ids: list
    kind: ObservationKind
    values: np.ndarray  # dense (I_s, I_n)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.shared_ids), len(self.item_ids)):
            raise IngestionError(f"{self.modality}: value shape {self.values.shape} does not match "
                                 f"ids ({len(self.shared_ids)}, {len(self.item_ids)})")
        _check_values(self.modality, self.kind, self.values)

    @property
    def n_items(self):
        return len(self.item_ids)


def _check_values(modality, kind, values, context=""):
    if np.any(values < 0):
        raise IngestionError(f"{modality}{context}: negative value present")
    if kind.datatype == INTEGER and np.any(values != np.round(values)):
        raise IngestionError(f"{modality}{context}: non-integer value in integer-kind matrix")
    if kind.datatype == BINARY and np.any((values != 0) & (values != 1)):
        raise IngestionError(f"{modality}{context}: non-binary value in binary-kind matrix")


def _read_vocab(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _read_triplets(path):
    triplets = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["patient_id", "item_id", "value"]:
            raise IngestionError(f"{path}:1: expected header patient_id,item_id,value")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise IngestionError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                value = float(row[2])
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: bad value {row[2]!r}") from exc
            triplets.append((row[0], row[1], value, lineno))
    return triplets


def load_observations(manifest_path):
    """Load all modalities listed in a manifest JSON; returns name -> ObservationMatrix."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(manifest_path))

    entries = manifest["modalities"]
    raw = {}
    patient_set = set()
    for entry in entries:
        name = entry["name"]
        kind = ObservationKind.parse(entry["kind"])
        path = os.path.join(base, entry["path"])
        vocab = _read_vocab(os.path.join(base, entry["vocab_path"]))
        triplets = _read_triplets(path)
        raw[name] = (kind, vocab, triplets, path)
        patient_set.update(t[0] for t in triplets)

    # union of patients across modalities, zero-filled where absent
    shared_ids = manifest.get("patients") or sorted(patient_set)
    pidx = {p: i for i, p in enumerate(shared_ids)}

    observations = {}
    for name, (kind, vocab, triplets, path) in raw.items():
        iidx = {it: j for j, it in enumerate(vocab)}
        values = np.zeros((len(shared_ids), len(vocab)))
        seen = set()
        for pid, item, value, lineno in triplets:
            if pid not in pidx:
                raise IngestionError(f"{path}:{lineno}: unknown patient id {pid!r}")
            if item not in iidx:
                raise IngestionError(f"{path}:{lineno}: item {item!r} not in vocabulary")
            key = (pid, item)
            if key in seen:
                raise IngestionError(f"{path}:{lineno}: duplicate triplet for {key}")
            seen.add(key)
            values[pidx[pid], iidx[item]] = value
        try:
            observations[name] = ObservationMatrix(name, list(shared_ids), vocab, kind, values)
        except IngestionError as exc:
            raise IngestionError(f"{path}: {exc}") from exc
    return observations


def save_observations(observations, out_dir):
    """Write manifest + triplet/vocab files; inverse of load_observations."""
    os.makedirs(out_dir, exist_ok=True)
    shared_ids = None
    entries = []
    for name, obs in observations.items():
        if shared_ids is None:
            shared_ids = obs.shared_ids
        triplet_path = f"{name}.csv"
        vocab_path = f"{name}.vocab.txt"
        with open(os.path.join(out_dir, vocab_path), "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{it}\n" for it in obs.item_ids)
        with open(os.path.join(out_dir, triplet_path), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("patient_id,item_id,value\n")
            rows, cols = np.nonzero(obs.values)
            for i, j in zip(rows, cols):
                fh.write(f"{obs.shared_ids[i]},{obs.item_ids[j]},{obs.values[i, j]:.17g}\n")
        entries.append({"name": name, "path": triplet_path, "kind": str(obs.kind),
                        "vocab_path": vocab_path})
    manifest = {"modalities": entries, "patients": list(shared_ids or [])}
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def binarize(obs):
    """Quantize to presence/absence: entry 1 iff source entry > 0. Idempotent."""
    kind = ObservationKind(obs.kind.distribution, BINARY)
    return ObservationMatrix(obs.modality, obs.shared_ids, obs.item_ids, kind,
                             (obs.values > 0).astype(float))


def load_labels(path, shared_ids):
    """Read patient_id,label CSV aligned to shared_ids; returns int array."""
    labels = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["patient_id", "label"]:
            raise IngestionError(f"{path}:1: expected header patient_id,label")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2 or row[1] not in ("0", "1"):
                raise IngestionError(f"{path}:{lineno}: expected patient_id,label with label in {{0,1}}")
            labels[row[0]] = int(row[1])
    try:
        return np.array([labels[p] for p in shared_ids], dtype=int)
    except KeyError as exc:
        raise IngestionError(f"{path}: missing label for patient {exc.args[0]!r}") from exc


def save_labels(path, shared_ids, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("patient_id,label\n")
        for pid, y in zip(shared_ids, labels):
            fh.write(f"{pid},{int(y)}\n")


def _take_patients(observations, idx):
    out = {}
    for name, obs in observations.items():
        out[name] = ObservationMatrix(name, [obs.shared_ids[i] for i in idx],
                                      obs.item_ids, obs.kind, obs.values[idx])
    return out


def split_train_test(observations, labels=None, ratio=0.8, seed=0, stratify=False):
    """Partition patients by a seeded shuffle; all modalities split consistently."""
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must lie in (0, 1)")
    n = len(next(iter(observations.values())).shared_ids)
    if n < 2:
        raise ValueError("need at least 2 patients to split")
    rng = np.random.default_rng(seed)
    if stratify and labels is not None:
        train_idx, test_idx = [], []
        for cls in (0, 1):
            members = np.flatnonzero(np.asarray(labels) == cls)
            perm = members[rng.permutation(len(members))]
            cut = int(round(ratio * len(perm)))
            train_idx.extend(perm[:cut])
            test_idx.extend(perm[cut:])
        train_idx, test_idx = sorted(train_idx), sorted(test_idx)
    else:
        perm = rng.permutation(n)
        cut = int(round(ratio * n))
        train_idx, test_idx = sorted(perm[:cut]), sorted(perm[cut:])
    train = _take_patients(observations, train_idx)
    test = _take_patients(observations, test_idx)
    if labels is None:
        return train, test
    labels = np.asarray(labels)
    return (train, labels[train_idx]), (test, labels[test_idx])


@dataclass
class SyntheticTruth:
    shared: np.ndarray
    modality_factors: dict
    marginal_means: dict  # (tensor_id, modality) -> planted reconstruction
    seed: int


def _planted_factor(rng, rows, rank, sparsity, scale):
    U = rng.uniform(0.0, 1.0, size=(rows, rank))
    mask = rng.uniform(size=(rows, rank)) < sparsity
    # keep every column alive
    for r in range(rank):
        if not mask[:, r].any():
            mask[rng.integers(rows), r] = True
    col_scale = scale * rng.uniform(0.5, 1.5, size=rank)
    return U * mask * col_scale


def synth_generate(model_spec, modality_sizes, datatypes, n_patients,
                   sparsity=0.5, scale=1.0, seed=0):
    """Sample observations from planted factors via each tensor's marginal law.

    Marginals are sampled directly (sums of Poissons are Poisson, sums of
    Gaussians are Gaussian) so hidden tensors are never materialized. A
    modality referenced by several tensors is sampled from the first
    tensor that lists it.
    """
    if not (0.0 < sparsity <= 1.0) or scale <= 0:
        raise ValueError("sparsity must lie in (0, 1] and scale must be positive")
    rng = np.random.default_rng(seed)
    R = model_spec.rank
    shared = _planted_factor(rng, n_patients, R, sparsity, scale)
    factors = {name: _planted_factor(rng, size, R, sparsity, scale)
               for name, size in modality_sizes.items()}
    shared_ids = [f"p{i}" for i in range(n_patients)]

    observations = {}
    marginal_means = {}
    for tensor in model_spec.tensors:
        mods = tensor.modalities
        blocks = [factors[m] for m in mods]
        for k, name in enumerate(mods):
            vhat = reconstruct_marginal(shared, blocks, k)
            marginal_means[(tensor.id, name)] = vhat
            if name in observations:
                continue
            dtype = datatypes[name]
            kind = ObservationKind(tensor.distribution, dtype)
            if tensor.distribution == POISSON:
                if dtype == INTEGER:
                    values = rng.poisson(vhat).astype(float)
                else:
                    values = (rng.uniform(size=vhat.shape) < -np.expm1(-vhat)).astype(float)
            else:
                t_n = max(1, sum(factors[m].shape[0] for m in mods if m != name))
                std = math.sqrt(t_n * tensor.sigma2) if tensor.sigma2 > 0 else 0.0
                if dtype == REAL:
                    values = np.maximum(0.0, vhat + std * rng.standard_normal(vhat.shape))
                else:
                    params = GaussianParams(max(tensor.sigma2, 1e-300), t_n)
                    denom = math.sqrt(2.0 * params.t_n) * math.sqrt(params.sigma2)
                    p = 0.5 - 0.5 * erf(-vhat / denom)
                    values = (rng.uniform(size=vhat.shape) < p).astype(float)
            item_ids = [f"{name}_{j}" for j in range(vhat.shape[1])]
            observations[name] = ObservationMatrix(name, shared_ids, item_ids, kind, values)

    for name in modality_sizes:
        if name not in observations:
            raise ConfigurationError(f"modality {name!r} is not referenced by any tensor")
    truth = SyntheticTruth(shared, factors, marginal_means, seed)
    return observations, truth
