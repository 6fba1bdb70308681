"""Layer-combination sweep: train one model per (n_conv, n_pool) trial.

Emits rows matching the CSV header

    trial,n_conv,n_pool,f1,accuracy,mse,mae

with empty cells where a metric does not apply (regression rows leave
accuracy empty; classification rows leave mse/mae empty). A row whose
f1 cell is empty is infeasible: the trial's pooling depth was illegal
for the input size, and the sweep moved on. Repeated trials get
distinct derived seeds, so duplicates act as independent restarts.
"""

import csv
import io

from .models import ArchitectureError, _fold_seed, build_model, evaluate, make_spec, train

CSV_HEADER = ["trial", "n_conv", "n_pool", "f1", "accuracy", "mse", "mae"]


class TrialFormatError(ValueError):
    """Trial text does not parse as conv:pool pairs."""


def parse_trials(text):
    """Comma-separated conv:pool pairs, e.g. "6:3,6:4" -> [(6,3),(6,4)]."""
    trials = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 2:
            raise TrialFormatError(f"trial {part!r} is not of the form conv:pool")
        try:
            trials.append((int(pieces[0]), int(pieces[1])))
        except ValueError:
            raise TrialFormatError(f"trial {part!r} has non-integer counts") from None
    return trials


def layer_sweep(model_name, trials, dataset, config):
    """One trained-and-evaluated row dict per trial, in order.

    One held-out cut is made up front and shared by every trial so rows
    are comparable; train() only sees the fit side.
    """
    from .data import split as data_split

    if config.val_fraction > 0 and len(dataset) >= 2:
        fit_set, held = data_split(dataset, config.val_fraction, _fold_seed(config.rng_seed, 29))
    else:
        fit_set = held = dataset

    rows = []
    for index, (n_conv, n_pool) in enumerate(trials):
        row = {
            "trial": f"{n_conv}:{n_pool}",
            "n_conv": n_conv,
            "n_pool": n_pool,
            "feasible": True,
            "metrics": None,
        }
        try:
            spec = make_spec(model_name, n_conv=n_conv, n_pool=n_pool)
            trial_seed = _fold_seed(config.rng_seed, 3, index)
            model = build_model(spec, trial_seed)
        except (ArchitectureError, ValueError):
            # illegal architecture for this input size: mark and move on
            row["feasible"] = False
            rows.append(row)
            continue
        train(model, fit_set, config)
        row["metrics"] = evaluate(model, held)
        rows.append(row)
    return rows


def _fmt(value):
    return "" if value is None else f"{value:.4f}"


def rows_to_csv(rows):
    """Render sweep rows with the fixed header; metric cells are 4-decimal."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        m = row["metrics"]
        if not row["feasible"] or m is None:
            writer.writerow([row["trial"], row["n_conv"], row["n_pool"], "", "", "", ""])
            continue
        writer.writerow(
            [
                row["trial"],
                row["n_conv"],
                row["n_pool"],
                _fmt(m.f1_macro),
                _fmt(m.accuracy),
                _fmt(m.mse),
                _fmt(m.mae),
            ]
        )
    return buf.getvalue()
