"""Command-line entry point.

Subcommands: synth (build a fault-injected corpus), train (fit one model),
grade (score a single C file), experiment (run all eight models and emit
the report + loss-curve CSVs).

Exit codes: 0 success, 1 partial experiment failure, 2 usage/config error,
3 runtime fit error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import embed, metrics, neural, persist, pipeline, synth, tabular
from .corpus import Dataset, DatasetError, Submission, load_dataset, save_dataset, split
from .hybrid import HybridKind, hybrid_fit, hybrid_predict
from .neural import CnnRegressor, CnnSpec, LstmRegressor, LstmSpec, TrainConfig

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_FIT = 3


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_synth(args) -> int:
    seed_dir = Path(args.seeds)
    files = sorted(seed_dir.glob("*.c")) if seed_dir.is_dir() else []
    if not files:
        return _fail(EXIT_USAGE, f"no .c seed files in {args.seeds}")
    seeds = [
        Submission(path.stem, path.read_text(encoding="utf-8"), 10.0)
        for path in files
    ]
    rng = np.random.default_rng(args.seed)
    try:
        ds, plans = synth.synthesize_with_plans(seeds, args.count, synth.Rubric(), rng)
    except (synth.NotMutableError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    save_dataset(ds, args.out)
    if args.plans:
        with open(args.plans, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "kinds"])
            for row, kinds in zip(ds.rows, plans):
                writer.writerow([row.id, "+".join(sorted(k.value for k in kinds))])
    histogram = {}
    for row in ds.rows:
        histogram[row.score] = histogram.get(row.score, 0) + 1
    print(f"wrote {len(ds)} rows to {args.out}")
    for score in sorted(histogram):
        print(f"score {score:g}: {histogram[score]}")
    return EXIT_OK


def _parse_ratios(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated ratios, got {text!r}")
    return tuple(float(p) for p in parts)


def _build_provider(args, train_ds):
    return pipeline.build_provider(
        args.embedding, train_ds, args.dim, args.seq_len, args.vectors
    )


def _print_metrics(y, yhat, split_name):
    row = metrics.evaluate(y, yhat, "model", split_name)
    print(
        f"{split_name}: rmse={row.rmse:.4f} mae={row.mae:.4f} "
        f"r2={row.r2:.4f} mape={row.mape:.4f}"
    )


def cmd_train(args) -> int:
    try:
        ratios = _parse_ratios(args.split)
        ds = load_dataset(args.data)
        parts = split(ds, ratios, args.seed)
    except (ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    kind = args.model
    try:
        provider = _build_provider(args, parts.train)
        X_train, S_train = pipeline.embed_dataset(provider, parts.train)
        X_val, S_val = pipeline.embed_dataset(provider, parts.validation)
    except (embed.EmbeddingFormatError, embed.EmbeddingLookupError,
            pipeline.ConfigError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    y_train = parts.train.scores()
    y_val = parts.validation.scores()
    grid = None
    if args.grid:
        try:
            grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            return _fail(EXIT_USAGE, f"bad grid file: {exc}")
    seed = pipeline._model_seed(args.seed, kind)
    train_cfg = TrainConfig(
        max_epochs=args.max_epochs, batch_size=args.batch_size,
        learning_rate=args.learning_rate, patience=args.patience, seed=seed,
    )
    try:
        if kind in pipeline.STATISTICAL_KINDS:
            if grid is None:
                grid = pipeline.DEFAULT_GRIDS.get(kind)
            model, params, _ = pipeline.fit_statistical(
                kind, X_train, y_train, grid, None, seed
            )
            print(f"params: {params}")
        elif kind in pipeline.NEURAL_KINDS:
            if S_train is None:
                return _fail(EXIT_USAGE,
                             "embedding provider supplies no token sequences")
            if kind == "cnn":
                model = CnnRegressor(CnnSpec(), provider.seq_len,
                                     provider.dimension, seed=seed)
            else:
                model = LstmRegressor(LstmSpec(), provider.seq_len,
                                      provider.dimension, seed=seed)
            history = neural.train(model, S_train, y_train, S_val, y_val, train_cfg)
            print(f"stopped at epoch {history.stopped_epoch}, "
                  f"best epoch {history.best_epoch}")
        else:
            if S_train is None:
                return _fail(EXIT_USAGE,
                             "embedding provider supplies no token sequences")
            rf_params = tabular.TreeParams(
                feature_subsample=tabular.RF_DEFAULT_SUBSAMPLE, seed=seed
            )
            model, history = hybrid_fit(
                HybridKind(kind), S_train, y_train, S_val, y_val, train_cfg,
                rf_params=rf_params, net_seed=seed,
            )
            print(f"stopped at epoch {history.stopped_epoch}, "
                  f"best epoch {history.best_epoch}")
    except Exception as exc:
        return _fail(EXIT_FIT, f"fit failed: {exc}")
    for split_name, pooled, sequences, y in (
        ("train", X_train, S_train, y_train),
        ("validation", X_val, S_val, y_val),
    ):
        yhat = pipeline.predict_kind(kind, model, pooled, sequences)
        _print_metrics(y, yhat, split_name)
    persist.save_model(args.out, kind, model, provider.config())
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_grade(args) -> int:
    try:
        kind, model, emb_config = persist.load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(EXIT_USAGE, f"cannot load model: {exc}")
    try:
        code = Path(args.code).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        provider = persist.provider_from_config(emb_config)
        embedding = provider.embed_code(code)
    except embed.UnsupportedEmbedding:
        return _fail(
            EXIT_USAGE,
            "this model uses an external vector file and cannot embed ad-hoc "
            "code; train with the tfidf provider to grade new files",
        )
    except (ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    pooled = embedding.pooled[None, :]
    sequences = (
        embedding.sequence[None, :, :] if embedding.sequence is not None else None
    )
    score = pipeline.predict_kind(kind, model, pooled, sequences)[0]
    print(f"{float(np.clip(score, 0.0, 10.0)):.2f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = pipeline.ExperimentConfig.from_dict(
            doc, base_dir=str(Path(args.config).resolve().parent)
        )
    except (OSError, json.JSONDecodeError, pipeline.ConfigError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        result = pipeline.run_experiment(cfg)
    except (DatasetError, pipeline.ConfigError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    print(f"report written to {cfg.report_path}")
    print(f"curves written to {cfg.curves_path}")
    if result.errors:
        for kind, message in result.errors.items():
            print(f"error: {kind}: {message}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgrader", description="Auto-grading pipeline for C assignments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a fault-injected corpus")
    p.add_argument("--seeds", required=True, help="directory of full-marks .c files")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="output corpus CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plans", help="optional plan sidecar CSV (id,kinds)")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train a single model")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=pipeline.ALL_KINDS)
    p.add_argument("--embedding", choices=["tfidf", "external"], default="tfidf")
    p.add_argument("--vectors", help="JSON-Lines vector file for --embedding external")
    p.add_argument("--dim", type=int, default=embed.DEFAULT_TFIDF_DIM)
    p.add_argument("--seq-len", type=int, default=embed.DEFAULT_SEQ_LEN)
    p.add_argument("--split", default="0.5,0.25,0.25")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--grid", help="JSON file: param name -> list of values")
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=5)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("grade", help="predict the score of one C file")
    p.add_argument("--model", required=True)
    p.add_argument("--code", required=True)
    p.set_defaults(fn=cmd_grade)

    p = sub.add_parser("experiment", help="run all eight models from a config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.set_defaults(fn=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
