"""Command-line interface: train, evaluate, sweep, predict, validate-table, serve.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.  stdout
carries machine-parseable output only (JSON, or CSV for sweep); all logging
goes to stderr.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import modelio, report
from . import sweep as sweep_mod
from .data import load_age_ethnicity, load_fer2013, take
from .models import TrainConfig, build_model, evaluate, make_spec, train
from .pipeline import PredictionEngine
from .recommend import load_playlist_file
from .service import ServiceConfig

log = logging.getLogger("moodtunes.cli")

SPEC_NAMES = {"emotion": "CNN-Emotion", "age": "CNN-Age", "ethnicity": "CNN-Ethnicity"}
KINDS = {spec_name: kind for kind, spec_name in SPEC_NAMES.items()}


def _emit(payload):
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _load_dataset(kind, path, split, limit):
    if kind == "emotion":
        dataset = load_fer2013(path, split=split)
    else:
        # Age and ethnicity share one labeled-faces file; split is CSV-driven
        # for emotion only, so the flag is ignored here.
        joint = load_age_ethnicity(path)
        dataset = joint.age_dataset() if kind == "age" else joint.ethnicity_dataset()
    return take(dataset, limit)


def _metrics_json(metrics):
    out = {}
    for name in ("accuracy", "f1_macro", "mse", "mae"):
        value = getattr(metrics, name)
        if value is not None:
            out[name] = float(value)
    if metrics.per_class_f1:
        out["per_class_f1"] = [float(v) for v in metrics.per_class_f1]
    return out


def _sibling(out_path, suffix):
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + suffix)


def cmd_train(args):
    spec = make_spec(SPEC_NAMES[args.model])
    dataset = _load_dataset(args.model, args.data, args.split, args.limit)
    config = TrainConfig(
        rng_seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
    )
    log.info("training %s on %d samples for %d epochs", spec.name, len(dataset), config.epochs)
    model = build_model(spec, config.rng_seed)
    history = train(model, dataset, config)
    modelio.save_model(model, args.out)
    figure_path = _sibling(args.out, "_training.png")
    report.save_history_figure(history, figure_path, title=spec.name)
    _emit(
        {
            "model": spec.name,
            "samples": len(dataset),
            "epochs_run": len(history),
            "final": history[-1],
            "model_file": str(args.out),
            "figure": str(figure_path),
        }
    )
    return 0


def cmd_evaluate(args):
    model = modelio.load_model(args.model_file)
    kind = KINDS.get(model.spec.name)
    if kind is None:
        raise ValueError(f"model file has unrecognized model name {model.spec.name!r}")
    dataset = _load_dataset(kind, args.data, args.split, args.limit)
    log.info("evaluating %s on %d samples", model.spec.name, len(dataset))
    metrics = evaluate(model, dataset)
    _emit({"model": model.spec.name, "samples": len(dataset), "metrics": _metrics_json(metrics)})
    return 0


def cmd_sweep(args):
    trials = sweep_mod.parse_trials(args.trials)
    dataset = _load_dataset(args.model, args.data, "train", args.limit)
    config = TrainConfig(
        rng_seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
    )
    log.info("sweeping %d trials of %s on %d samples", len(trials), args.model, len(dataset))
    rows = sweep_mod.layer_sweep(SPEC_NAMES[args.model], trials, dataset, config)
    csv_text = sweep_mod.rows_to_csv(rows)
    Path(args.out).write_text(csv_text, encoding="ascii")
    figure_path = _sibling(args.out, "_metrics.png")
    report.save_sweep_figure(rows, figure_path, title=SPEC_NAMES[args.model])
    sys.stdout.write(csv_text)
    return 0


def cmd_predict(args):
    engine = PredictionEngine(args.model_dir, cascade_path=args.cascade)
    try:
        triple = engine.predict_bytes(Path(args.image).read_bytes())
    finally:
        engine.close()
    _emit(triple)
    return 0


def cmd_validate_table(args):
    table = load_playlist_file(args.table)
    _emit({"status": "ok", "entries": len(table), "table": str(args.table)})
    return 0


def cmd_serve(args):
    from .service import run  # uvicorn import deferred to serving time

    config = ServiceConfig.from_file(args.config)
    if args.port is not None:
        config = replace(config, port=args.port)
    run(config)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="moodtunes",
        description="Train, evaluate, and serve the face-driven playlist recommender.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and save it with its training-curve figure")
    p.add_argument("--model", required=True, choices=sorted(SPEC_NAMES))
    p.add_argument("--data", required=True, help="dataset file or directory")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None, help="use only the first N samples")
    p.add_argument("--split", default="train", help="dataset split to load (emotion data only)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="report metrics for a saved model on a dataset")
    p.add_argument("--model-file", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--split", default="test", help="dataset split to load (emotion data only)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train one model per layer-count trial and tabulate metrics")
    p.add_argument("--model", required=True, choices=sorted(SPEC_NAMES))
    p.add_argument("--trials", required=True, help='comma list of conv:pool pairs, e.g. "5:2,6:3"')
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV file to write")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="print the emotion/age/ethnicity triple for one image")
    p.add_argument("--model-dir", required=True, help="directory holding the three model files")
    p.add_argument("--image", required=True)
    p.add_argument("--cascade", default=None, help="face cascade XML (default: bundled)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("validate-table", help="check a playlist table file and print its size")
    p.add_argument("--table", required=True)
    p.set_defaults(func=cmd_validate_table)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.add_argument("--port", type=int, default=None, help="override the configured port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except KeyboardInterrupt:  # pragma: no cover - interactive only
        return 1
    except Exception as exc:
        log.error("%s", exc)
        _emit({"error": {"code": type(exc).__name__, "message": str(exc)}})
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
