"""Figure rendering for training runs and sweeps.

Figures are written as PNG files next to the delimited outputs; the
Agg backend keeps everything headless.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def save_history_figure(history, path, title):
    """Loss curve plus whichever epoch metric the history carries."""
    epochs = [h["epoch"] for h in history]
    fig, (ax_loss, ax_metric) = plt.subplots(1, 2, figsize=(10, 4))

    ax_loss.plot(epochs, [h["train_loss"] for h in history], label="train loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()

    for key, label in (
        ("train_accuracy", "train accuracy"),
        ("val_accuracy", "val accuracy"),
        ("train_mae", "train MAE"),
        ("val_mae", "val MAE"),
    ):
        if history and key in history[0]:
            ax_metric.plot(epochs, [h[key] for h in history], label=label)
    ax_metric.set_xlabel("epoch")
    ax_metric.legend()

    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def save_sweep_figure(rows, path, title):
    """Metric bars per feasible trial; infeasible trials appear unscored."""
    labels = [r["trial"] for r in rows]
    fig, ax = plt.subplots(figsize=(1.2 * max(len(rows), 4) + 2, 4))
    xs = range(len(rows))

    def series(metric):
        out = []
        for r in rows:
            m = r["metrics"]
            out.append(getattr(m, metric) if r["feasible"] and m else None)
        return out

    drew_secondary = False
    f1 = series("f1_macro")
    ax.bar(
        [x - 0.2 for x in xs],
        [v if v is not None else 0.0 for v in f1],
        width=0.4,
        label="F1",
    )
    acc = series("accuracy")
    if any(v is not None for v in acc):
        ax.bar(
            [x + 0.2 for x in xs],
            [v if v is not None else 0.0 for v in acc],
            width=0.4,
            label="accuracy",
        )
        drew_secondary = True
    mae = series("mae")
    if not drew_secondary and any(v is not None for v in mae):
        ax2 = ax.twinx()
        ax2.bar(
            [x + 0.2 for x in xs],
            [v if v is not None else 0.0 for v in mae],
            width=0.4,
            color="tab:orange",
            label="MAE (years)",
        )
        ax2.set_ylabel("MAE (years)")

    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_xlabel("conv:pool trial")
    ax.set_ylabel("score")
    ax.legend(loc="upper left")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
