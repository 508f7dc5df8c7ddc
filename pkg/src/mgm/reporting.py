"""Report emission: delimited files, metrics JSON, and rendered figures.

Every table a command writes gets a matching PNG rendered next to it;
timing lives in its own file so everything else stays bit-reproducible.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 110
# strip volatile metadata so PNG bytes depend only on the data
PNG_META = {"Software": "mgm"}


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
    return path


def write_metrics(path, report, config_echo=None, extra=None):
    obj = {"metrics": report.as_dict()}
    if extra:
        obj.update(extra)
    if config_echo is not None:
        obj["config"] = config_echo
    return write_json(path, obj)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_predictions_tsv(path, node_ids, labels, probs, label_names):
    with open(path, "w", encoding="utf-8") as fh:
        header = ["node_id", "label"] + [f"p_{name}" for name in label_names]
        fh.write("\t".join(header) + "\n")
        for nid, lab, row in zip(node_ids, labels, probs):
            cells = [str(nid), label_names[int(lab)]]
            cells += [repr(float(p)) for p in row]
            fh.write("\t".join(cells) + "\n")
    return path


def aggregate_stats(per_seed: list) -> dict:
    """Mean and sample standard deviation of each numeric metric."""
    keys = ["macro_f1", "accuracy", "avg_recall"]
    out = {}
    for key in keys:
        vals = np.asarray([m[key] for m in per_seed], dtype=float)
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out[key] = {"mean": float(vals.mean()), "std": std}
    return out


def _new_axes(n=1):
    fig, axes = plt.subplots(1, n, figsize=(5.2 * n, 3.6))
    return fig, (axes if n > 1 else [axes])


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI, metadata=PNG_META)
    plt.close(fig)
    return path


def training_figure(path, pretrain_losses, elbo_trace, val_f1_trace):
    fig, axes = _new_axes(2)
    axes[0].plot(pretrain_losses, color="tab:blue")
    axes[0].set_xlabel("epoch")
    axes[0].set_ylabel("pre-training loss")
    if elbo_trace:
        ax2 = axes[1]
        ax2.plot(elbo_trace, color="tab:orange", label="evidence bound")
        ax2.set_xlabel("EM iteration")
        ax2.set_ylabel("evidence bound")
        if val_f1_trace and any(np.isfinite(val_f1_trace)):
            twin = ax2.twinx()
            twin.plot(100 * np.asarray(val_f1_trace), color="tab:green",
                      linestyle="--", label="val macro-F1")
            twin.set_ylabel("val macro-F1")
    else:
        axes[1].set_axis_off()
    return _save(fig, path)


def sweep_figure(path, rows):
    """rows: (k, eta, seed, macro_f1); renders F1 vs K and F1 vs eta."""
    data = {}
    for k, eta, _, f1 in rows:
        data.setdefault((k, eta), []).append(f1)
    ks = sorted({k for k, _ in data})
    etas = sorted({e for _, e in data})
    fig, axes = _new_axes(2)
    for eta in etas:
        ys = [100 * np.mean(data[(k, eta)]) for k in ks if (k, eta) in data]
        axes[0].plot(ks, ys, marker="o", label=f"eta={eta:g}")
    axes[0].set_xlabel("K (global similar nodes)")
    axes[0].set_ylabel("macro-F1")
    axes[0].legend(fontsize=7)
    for k in ks:
        ys = [100 * np.mean(data[(k, e)]) for e in etas if (k, e) in data]
        axes[1].plot(etas, ys, marker="s", label=f"K={k}")
    axes[1].set_xlabel("eta (local/global trade-off)")
    axes[1].set_ylabel("macro-F1")
    axes[1].legend(fontsize=7)
    return _save(fig, path)


def fraction_figure(path, rows, xlabel):
    """rows: (fraction, variant, seed, macro_f1) with variant line styling."""
    data = {}
    for frac, variant, _, f1 in rows:
        data.setdefault(variant, {}).setdefault(frac, []).append(f1)
    fig, axes = _new_axes(1)
    for variant, series in sorted(data.items()):
        fr = sorted(series)
        ys = [100 * np.mean(series[f]) for f in fr]
        axes[0].plot(fr, ys, marker="o", label=variant)
    axes[0].set_xlabel(xlabel)
    axes[0].set_ylabel("macro-F1")
    axes[0].legend(fontsize=8)
    return _save(fig, path)
