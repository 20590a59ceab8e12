"""Batch front door: synth / train / correspondence / phenotypes / metrics / evaluate.

Exit codes: 0 success, 2 usage, 3 ingestion, 4 numeric failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analysis, data_io, evaluate
from .errors import ConfigurationError, IngestionError, NumericError
from .model import (InteractionTensorSpec, ModelSpec, SolverConfig,
                    build_model, load_model, save_model)
from .regularizers import RegularizerConfig
from .solver import train

EXIT_USAGE = 2
EXIT_INGESTION = 3
EXIT_NUMERIC = 4


def _parse_modality_token(token):
    """name:size:datatype:distribution, e.g. Dx:20:binary:poisson."""
    parts = token.split(":")
    if len(parts) != 4:
        raise ConfigurationError(f"bad --modality token {token!r}: "
                                 "expected name:size:datatype:distribution")
    name, size, datatype, distribution = parts
    try:
        size = int(size)
    except ValueError:
        raise ConfigurationError(f"bad size in --modality token {token!r}")
    if datatype not in ("integer", "binary", "real") or distribution not in ("poisson", "gaussian"):
        raise ConfigurationError(f"bad kind in --modality token {token!r}")
    return name, size, datatype, distribution


def _configure_threads(args):
    threads = os.environ.get("CHITF_THREADS", None)
    if threads is None:
        threads = getattr(args, "threads", 1)
    if getattr(args, "deterministic", False):
        threads = 1
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))


def cmd_synth(args):
    specs = [_parse_modality_token(t) for t in args.modality]
    sizes = {name: size for name, size, _, _ in specs}
    datatypes = {name: dt for name, _, dt, _ in specs}
    # anchor = first modality; one pairwise tensor per further modality
    tensors = []
    if len(specs) == 1:
        name, _, _, dist = specs[0]
        tensors.append(InteractionTensorSpec("t0", [name], dist,
                                             args.sigma2 if dist == "gaussian" else None))
    else:
        anchor = specs[0][0]
        for i, (name, _, _, dist) in enumerate(specs[1:]):
            sigma2 = args.sigma2 if dist == "gaussian" else None
            tensors.append(InteractionTensorSpec(f"t{i}", [anchor, name], dist, sigma2))
    spec = ModelSpec(rank=args.rank, tensors=tensors, init_seed=args.seed)
    observations, truth = data_io.synth_generate(
        spec, sizes, datatypes, args.patients,
        sparsity=args.sparsity, scale=args.scale, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    data_io.save_observations(observations, args.out)
    spec.save(os.path.join(args.out, "model_spec.json"))
    truth_dir = os.path.join(args.out, "truth")
    os.makedirs(truth_dir, exist_ok=True)
    shared_ids = next(iter(observations.values())).shared_ids
    from .tensor import write_factor_csv
    write_factor_csv(os.path.join(truth_dir, "shared.csv"), shared_ids, truth.shared)
    for name, U in truth.modality_factors.items():
        write_factor_csv(os.path.join(truth_dir, f"{name}.csv"),
                         observations[name].item_ids, U)
    print(f"wrote synthetic dataset to {args.out}")
    return 0


def _load_model_and_obs(args):
    observations = data_io.load_observations(args.manifest)
    model = load_model(args.model, observations)
    return model, observations


def cmd_train(args):
    observations = data_io.load_observations(args.manifest)
    spec = ModelSpec.load(args.spec)
    spec.init_seed = args.seed if args.seed is not None else spec.init_seed
    if args.max_sweeps is not None:
        spec.solver.max_sweeps = args.max_sweeps
    model = build_model(spec, observations)
    report = train(model, spec.solver)
    save_model(model, args.out)
    status = "converged" if report.converged else "budget exhausted"
    print(f"trained {len(model.factors)} modality factors + shared in "
          f"{report.sweeps_run} sweeps ({status}); model saved to {args.out}")
    return 0


def cmd_correspondence(args):
    model, _ = _load_model_and_obs(args)
    anchor_modality, _, anchor_item = args.anchor.partition(":")
    tensor_id = args.tensor
    if tensor_id is None:
        candidates = [t for t in model.spec.tensors
                      if anchor_modality in t.modalities and args.target in t.modalities]
        if not candidates:
            raise ConfigurationError(f"no tensor contains both {anchor_modality!r} and {args.target!r}")
        tensor_id = candidates[0].id
    row = analysis.extract_correspondence(model, tensor_id, anchor_modality,
                                          anchor_item, args.target)
    out_path = args.out or "correspondence.csv"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("anchor_modality,anchor_item,target_modality,target_item,score,rank\n")
        for rank, (item, score) in enumerate(row.top(args.top), start=1):
            fh.write(f"{anchor_modality},{anchor_item},{args.target},{item},{score:.17g},{rank}\n")
    print(f"wrote top-{args.top} correspondence to {out_path}")
    return 0


def cmd_phenotypes(args):
    model, _ = _load_model_and_obs(args)
    phenotypes = analysis.extract_phenotypes(model, weight_threshold=args.threshold)
    doc = [{"phenotype": p.index,
            "items": {name: [{"item": item, "weight": weight} for item, weight in items]
                      for name, items in p.items.items()}}
           for p in phenotypes]
    out_path = args.out or "phenotypes.json"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(doc)} phenotypes to {out_path}")
    return 0


def _read_annotations(path):
    annotations = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["anchor_item", "target_item", "score"]:
            raise IngestionError(f"{path}:1: expected header anchor_item,target_item,score")
        for lineno, rowdata in enumerate(reader, start=2):
            if len(rowdata) != 3 or rowdata[2] not in ("0", "1", "2"):
                raise IngestionError(f"{path}:{lineno}: expected anchor,target,score in {{0,1,2}}")
            annotations.setdefault(rowdata[0], {})[rowdata[1]] = int(rowdata[2])
    return annotations


def cmd_metrics(args):
    model, _ = _load_model_and_obs(args)
    phenotypes = analysis.extract_phenotypes(model)
    doc = {"sparsity": analysis.sparsity(model.factors),
           "cosine_similarity": analysis.cosine_similarity_metric(model.factors),
           "jaccard_at_k": analysis.jaccard_at_k(phenotypes, k=args.k),
           "k": args.k}
    if args.annotations:
        annotations = _read_annotations(args.annotations)
        meaningfulness = {}
        for anchor_item, ann in annotations.items():
            row = analysis.extract_correspondence(model, args.tensor, args.anchor_modality,
                                                  anchor_item, args.target)
            meaningfulness[anchor_item] = analysis.meaningfulness_score(row, ann)
        doc["meaningfulness"] = meaningfulness
    out_path = args.out or "metrics.json"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"wrote metrics to {out_path}")
    return 0


def cmd_evaluate(args):
    observations = data_io.load_observations(args.manifest)
    labels = data_io.load_labels(args.labels,
                                 next(iter(observations.values())).shared_ids)
    spec = ModelSpec.load(args.spec)
    report = evaluate.five_fold_cv(observations, labels, spec, spec.solver,
                                   n_folds=args.folds, seed=args.seed)
    out_path = args.out or "evaluation.json"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"AUPRC: {report['mean']:.4f} ({report['std']:.4f}); report at {out_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="margfact",
                                     description="Hidden interaction tensor factorization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted factors")
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--patients", type=int, default=200)
    p.add_argument("--modality", action="append", required=True,
                   help="name:size:datatype:distribution (repeatable; first is the anchor)")
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit the model on a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-sweeps", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("correspondence", help="extract a correspondence row")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--anchor", required=True, help="modality:item, e.g. Dx:428")
    p.add_argument("--target", required=True)
    p.add_argument("--tensor", default=None)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_correspondence)

    p = sub.add_parser("phenotypes", help="emit the phenotype definition report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_phenotypes)

    p = sub.add_parser("metrics", help="sparsity / cosine similarity / jaccard@k")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--annotations", default=None)
    p.add_argument("--tensor", default=None)
    p.add_argument("--anchor-modality", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("evaluate", help="cross-validated mortality prediction")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    _configure_threads(args)
    try:
        return args.func(args)
    except (IngestionError, FileNotFoundError) as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except ConfigurationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
