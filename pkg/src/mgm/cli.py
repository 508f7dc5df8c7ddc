"""Command-line surface tying the engine together.

Commands: train, predict, sweep, label-fraction, memory-fraction, synth,
fuse, eval. Each writes delimited/JSON artifacts plus rendered figures into
its output directory, echoes the resolved configuration, and reports
failures as one machine-parsable line on stderr.
"""

import argparse
import os
import sys
import time

import numpy as np

from .config import RunConfig, resolve_config
from .errors import ConfigError, MgmError, PipelineError
from .fusion import ProbabilityTable, load_probabilities, run_stage_pipeline
from .graph import compute_metrics, load_graph, make_splits, save_graph, synth_graph
from .memory import select_fraction
from .model import load_checkpoint, save_checkpoint, train_em
from . import reporting


def _load_graph_for(config: RunConfig):
    if config.uses_files():
        return load_graph(config.nodes, config.edges, config.labels,
                          config.label_names)
    return synth_graph(
        config.synth_n_nodes, config.synth_components, config.synth_classes,
        config.synth_homophily, config.synth_label_fraction,
        config.synth_noise, config.synth_seed,
    )


def _train_one_seed(config: RunConfig, graph, seed):
    masks = make_splits(graph, ratios=tuple(config.split_ratios),
                        label_fraction=config.label_fraction, seed=seed)
    result = train_em(graph, masks, config.encoder_config(),
                      config.mgm_config(), seed=seed, weighted=config.weighted)
    return masks, result


def _memory_for_mode(result, config: RunConfig):
    if config.memory_mode == "full":
        return result.memory
    return result.memory_sampled


def _seed_dir(out, seed):
    path = os.path.join(out, f"seed_{seed}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_seed_artifacts(config, graph, masks, result, seed):
    sdir = _seed_dir(config.out, seed)
    save_checkpoint(result, os.path.join(sdir, "checkpoint.json"))

    memory = _memory_for_mode(result, config)
    eta = 1.0 if config.vanilla else config.eta
    probs, labels = result.model.predict(memory=memory, eta=eta)
    reporting.write_predictions_tsv(
        os.path.join(sdir, "predictions.tsv"), graph.node_ids, labels, probs,
        graph.label_names,
    )
    table = ProbabilityTable(
        {nid: probs[i] for i, nid in enumerate(graph.node_ids)},
        graph.n_classes, source=f"mgm-{config.encoder}-seed{seed}",
        labels=graph.label_names,
    )
    table.save(os.path.join(sdir, "probabilities.json"))

    test_idx = np.nonzero(masks.test)[0]
    report = compute_metrics(labels[test_idx], graph.labels[test_idx],
                             graph.n_classes)
    extra = {"seed": seed, "split": "test", "n_test": int(test_idx.size)}
    if graph.gold is not None:
        hold = ~(masks.active_train | masks.val)
        gold_report = compute_metrics(labels[hold], graph.gold[hold],
                                      graph.n_classes)
        extra["holdout_gold_metrics"] = gold_report.as_dict()
    reporting.write_metrics(os.path.join(sdir, "metrics.json"), report,
                            config_echo=config.to_dict(), extra=extra)
    reporting.write_json(os.path.join(sdir, "timing.json"), {
        "train_minutes": result.minutes,
        "pretrain_minutes": result.pretrain.minutes,
    })

    hist = result.history
    rows = [
        (i, hist.elbo[i], hist.log_likelihood[i], hist.kl_dirichlet[i],
         hist.kl_gaussian[i], hist.kl_multinomial[i],
         repr(hist.val_macro_f1[i]))
        for i in range(len(hist.elbo))
    ]
    reporting.write_csv(
        os.path.join(sdir, "history.csv"),
        ["iteration", "elbo", "log_likelihood", "kl_dirichlet", "kl_gaussian",
         "kl_multinomial", "val_macro_f1"],
        rows,
    )
    if config.figures:
        fig_dir = os.path.join(config.out, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        reporting.training_figure(
            os.path.join(fig_dir, f"training_seed{seed}.png"),
            result.pretrain.train_losses, hist.elbo, hist.val_macro_f1,
        )
    return report


def cmd_train(config: RunConfig):
    graph = _load_graph_for(config)
    config.echo(config.out)
    per_seed = []
    minutes = []
    for seed in config.seeds:
        masks, result = _train_one_seed(config, graph, seed)
        report = _write_seed_artifacts(config, graph, masks, result, seed)
        per_seed.append(report.as_dict())
        minutes.append(result.minutes)
        print(f"seed {seed}: test macro-F1 {report.as_dict()['macro_f1']:.2f}")
    aggregate = reporting.aggregate_stats(per_seed)
    reporting.write_json(os.path.join(config.out, "aggregate.json"), {
        "aggregate": aggregate,
        "per_seed": per_seed,
        "seeds": list(config.seeds),
        "config": config.to_dict(),
    })
    reporting.write_json(os.path.join(config.out, "timing.json"), {
        "per_seed_minutes": minutes,
        "mean_minutes": float(np.mean(minutes)),
    })
    print(
        "aggregate test macro-F1 "
        f"{aggregate['macro_f1']['mean']:.2f} ± {aggregate['macro_f1']['std']:.2f}"
    )
    return 0


def cmd_synth(config: RunConfig):
    if config.synth_n_nodes is None:
        raise ConfigError("synth command requires synth_n_nodes")
    graph = synth_graph(
        config.synth_n_nodes, config.synth_components, config.synth_classes,
        config.synth_homophily, config.synth_label_fraction,
        config.synth_noise, config.synth_seed,
    )
    os.makedirs(config.out, exist_ok=True)
    nodes, edges, labels = save_graph(graph, config.out)
    gold_path = os.path.join(config.out, "gold.tsv")
    with open(gold_path, "w", encoding="utf-8") as fh:
        for i, nid in enumerate(graph.node_ids):
            fh.write(f"{nid}\t{graph.label_names[graph.gold[i]]}\n")
    config.echo(config.out)
    print(f"wrote {graph.n_nodes} nodes / {graph.n_edges} edges to {config.out}")
    return 0


def cmd_predict(config: RunConfig, checkpoint_path, eta=None):
    graph = _load_graph_for(config)
    model = load_checkpoint(checkpoint_path, graph)
    os.makedirs(config.out, exist_ok=True)
    config.echo(config.out)
    memory = model.memory if config.memory_mode == "full" else model.memory_sampled
    probs, labels = model.predict(memory=memory, eta=eta)
    reporting.write_predictions_tsv(
        os.path.join(config.out, "predictions.tsv"), graph.node_ids, labels,
        probs, graph.label_names,
    )
    table = ProbabilityTable(
        {nid: probs[i] for i, nid in enumerate(graph.node_ids)},
        graph.n_classes, source=f"mgm-{config.encoder}",
        labels=graph.label_names,
    )
    table.save(os.path.join(config.out, "probabilities.json"))
    labeled = graph.labeled_mask
    if labeled.any():
        report = compute_metrics(labels[labeled], graph.labels[labeled],
                                 graph.n_classes)
        reporting.write_metrics(os.path.join(config.out, "metrics.json"),
                                report, config_echo=config.to_dict(),
                                extra={"split": "all-labeled"})
    print(f"wrote predictions for {graph.n_nodes} nodes to {config.out}")
    return 0


def cmd_eval(predictions_path, labels_path, label_names, out):
    name_to_class = {n: i for i, n in enumerate(label_names)}
    gold = {}
    with open(labels_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            nid, name = line.split("\t")
            if name not in name_to_class:
                raise ConfigError(f"unknown label {name!r} in {labels_path}")
            gold[nid] = name_to_class[name]
    pred = []
    actual = []
    with open(predictions_path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("node_id\t"):
            raise ConfigError(f"{predictions_path}: not a predictions TSV")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            nid, label = parts[0], parts[1]
            if nid in gold:
                pred.append(name_to_class[label])
                actual.append(gold[nid])
    report = compute_metrics(np.asarray(pred), np.asarray(actual),
                             len(label_names))
    os.makedirs(out, exist_ok=True)
    reporting.write_metrics(os.path.join(out, "metrics.json"), report,
                            extra={"n_evaluated": len(pred)})
    d = report.as_dict()
    print(f"macro-F1 {d['macro_f1']:.2f} accuracy {d['accuracy']:.2f} "
          f"avg-recall {d['avg_recall']:.2f}")
    return 0


def _eval_for(result, config, graph, masks, memory=None, eta=None):
    memory = memory if memory is not None else _memory_for_mode(result, config)
    test_idx = np.nonzero(masks.test)[0]
    _, labels = result.model.predict(nodes=test_idx, memory=memory, eta=eta)
    return compute_metrics(labels, graph.labels[test_idx], graph.n_classes)


def cmd_sweep(config: RunConfig, k_grid, eta_grid):
    if not k_grid or not eta_grid:
        raise ConfigError("sweep grids must be nonempty")
    if 1.0 not in eta_grid:
        eta_grid = sorted(set(eta_grid) | {1.0})  # vanilla column always present
    graph = _load_graph_for(config)
    config.echo(config.out)
    rows = []
    for seed in config.seeds:
        masks = make_splits(graph, ratios=tuple(config.split_ratios),
                            label_fraction=config.label_fraction, seed=seed)
        for k in k_grid:
            for eta in eta_grid:
                cfg = config.mgm_config()
                cfg.k = int(k)
                cfg.eta = float(eta)
                result = train_em(graph, masks, config.encoder_config(), cfg,
                                  seed=seed, weighted=config.weighted)
                report = _eval_for(result, config, graph, masks)
                rows.append((int(k), float(eta), seed,
                             report.macro_f1, report.accuracy,
                             report.avg_recall))
                print(f"K={k} eta={eta:g} seed={seed}: "
                      f"macro-F1 {100 * report.macro_f1:.2f}")
    os.makedirs(config.out, exist_ok=True)
    csv_rows = [
        (k, eta, seed, repr(100 * f1), repr(100 * acc), repr(100 * rec))
        for k, eta, seed, f1, acc, rec in rows
    ]
    agg = {}
    for k, eta, _, f1, _, _ in rows:
        agg.setdefault((k, eta), []).append(f1)
    for (k, eta), vals in sorted(agg.items()):
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        csv_rows.append((k, eta, "mean±std", repr(100 * float(np.mean(vals))),
                         repr(100 * std), ""))
    reporting.write_csv(
        os.path.join(config.out, "sweep.csv"),
        ["k", "eta", "seed", "macro_f1", "accuracy_or_std", "avg_recall"],
        csv_rows,
    )
    if config.figures:
        reporting.sweep_figure(
            os.path.join(config.out, "sweep.png"),
            [(k, eta, seed, f1) for k, eta, seed, f1, _, _ in rows],
        )
    return 0


def cmd_label_fraction(config: RunConfig, fractions):
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise ConfigError("fractions must lie in (0, 1]")
    graph = _load_graph_for(config)
    config.echo(config.out)
    rows = []
    for fraction in fractions:
        for seed in config.seeds:
            masks = make_splits(graph, ratios=tuple(config.split_ratios),
                                label_fraction=fraction, seed=seed)
            for variant, eta in (("vanilla", 1.0), ("mgm", config.eta)):
                cfg = config.mgm_config()
                cfg.eta = eta
                result = train_em(graph, masks, config.encoder_config(), cfg,
                                  seed=seed, weighted=config.weighted)
                report = _eval_for(result, config, graph, masks)
                rows.append((fraction, variant, seed, report.macro_f1,
                             result.minutes))
                print(f"fraction={fraction:g} {variant} seed={seed}: "
                      f"macro-F1 {100 * report.macro_f1:.2f}")
    os.makedirs(config.out, exist_ok=True)
    reporting.write_csv(
        os.path.join(config.out, "label_fraction.csv"),
        ["fraction", "variant", "seed", "macro_f1", "minutes"],
        [(f, v, s, repr(100 * f1), repr(m)) for f, v, s, f1, m in rows],
    )
    if config.figures:
        reporting.fraction_figure(
            os.path.join(config.out, "label_fraction.png"),
            [(f, v, s, f1) for f, v, s, f1, _ in rows],
            "training label fraction",
        )
    return 0


def cmd_memory_fraction(config: RunConfig, fractions):
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise ConfigError("fractions must lie in (0, 1]")
    graph = _load_graph_for(config)
    config.echo(config.out)
    rows = []
    for seed in config.seeds:
        masks, result = _train_one_seed(config, graph, seed)
        omega = result.model.omega_for(result.memory)
        for fraction in fractions:
            memory = select_fraction(result.memory, omega, fraction)
            report = _eval_for(result, config, graph, masks, memory=memory)
            rows.append((fraction, "mgm", seed, report.macro_f1, memory.size))
            print(f"mass={fraction:g} seed={seed}: "
                  f"macro-F1 {100 * report.macro_f1:.2f} (M={memory.size})")
    os.makedirs(config.out, exist_ok=True)
    reporting.write_csv(
        os.path.join(config.out, "memory_fraction.csv"),
        ["fraction", "variant", "seed", "macro_f1", "memory_size"],
        [(f, v, s, repr(100 * f1), m) for f, v, s, f1, m in rows],
    )
    if config.figures:
        reporting.fraction_figure(
            os.path.join(config.out, "memory_fraction.png"),
            [(f, v, s, f1) for f, v, s, f1, _ in rows],
            "retained probability mass",
        )
    return 0


def _read_id_list(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def cmd_fuse(stage, gold_path, label_names, train_ids_path, test_ids_path,
             out, text=None, text_secondary=None, graph=None,
             graph_groups=None, figures=True):
    name_to_class = {n: i for i, n in enumerate(label_names)}
    gold = {}
    with open(gold_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            nid, name = line.split("\t")
            if name not in name_to_class:
                raise PipelineError(f"unknown label {name!r} in {gold_path}")
            gold[nid] = name_to_class[name]
    c = len(label_names)
    tables = {
        "text": load_probabilities(text, c) if text else None,
        "text_secondary": load_probabilities(text_secondary, c)
        if text_secondary else None,
        "graph": load_probabilities(graph, c) if graph else None,
    }
    groups = None
    if graph_groups:
        groups = [
            [load_probabilities(p, c) for p in group] for group in graph_groups
        ]
    result = run_stage_pipeline(
        stage, gold, _read_id_list(train_ids_path),
        _read_id_list(test_ids_path), c, text=tables["text"],
        text_secondary=tables["text_secondary"], graph=tables["graph"],
        graph_groups=groups,
    )
    os.makedirs(out, exist_ok=True)
    extra = {"stage": stage}
    if result.metrics_std is not None:
        extra["std"] = result.metrics_std
        extra["per_seed_macro_f1"] = [100 * m.macro_f1 for m in result.per_seed]
    reporting.write_metrics(os.path.join(out, "metrics.json"), result.metrics,
                            extra=extra)
    result.fused.save(os.path.join(out, "fused.json"))
    d = result.metrics.as_dict()
    print(f"stage {stage}: macro-F1 {d['macro_f1']:.2f} "
          f"accuracy {d['accuracy']:.2f} avg-recall {d['avg_recall']:.2f}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _add_common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", help="comma-separated seed list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--encoder", choices=["gcn", "sgc", "sage"])
    p.add_argument("--k", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--memory-mode", choices=["full", "sampled"], dest="memory_mode")
    p.add_argument("--mass", type=float)
    p.add_argument("--vanilla", action="store_true", default=None)
    p.add_argument("--unweighted", action="store_true", default=None)
    p.add_argument("--no-figures", action="store_true", default=None)
    p.add_argument("--label-fraction", type=float, dest="label_fraction")


def _overrides(args):
    out = {
        "out": args.out,
        "encoder": args.encoder,
        "k": args.k,
        "eta": args.eta,
        "alpha": args.alpha,
        "memory_mode": args.memory_mode,
        "mass": args.mass,
        "label_fraction": args.label_fraction,
    }
    if args.seed is not None:
        out["seeds"] = _int_list(args.seed)
    if args.vanilla:
        out["vanilla"] = True
    if args.unweighted:
        out["edge_weights"] = "binary"
    if args.no_figures:
        out["figures"] = False
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mgm",
        description="Memory-augmented variational-EM node classification "
                    "for media graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("train", "sweep", "label-fraction", "memory-fraction",
                 "synth", "predict"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--k-grid", default="1,2,3,4,5,6,7")
            p.add_argument("--eta-grid", default="0.6,0.7,0.8,0.9,1.0")
        if name == "label-fraction":
            p.add_argument("--fractions", default="0.6,0.8,1.0")
        if name == "memory-fraction":
            p.add_argument("--fractions", default="0.6,0.8,0.9,1.0")
        if name == "synth":
            p.add_argument("--n-nodes", type=int, dest="synth_n_nodes")
            p.add_argument("--components", type=int, dest="synth_components")
            p.add_argument("--classes", type=int, dest="synth_classes")
            p.add_argument("--homophily", type=float, dest="synth_homophily")
            p.add_argument("--synth-label-fraction", type=float,
                           dest="synth_label_fraction")
            p.add_argument("--noise", type=float, dest="synth_noise")
            p.add_argument("--synth-seed", type=int, dest="synth_seed")
        if name == "predict":
            p.add_argument("--checkpoint", required=True)
            p.add_argument("--predict-eta", type=float, default=None)

    p = sub.add_parser("eval")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--label-names", required=True)
    p.add_argument("--out", default="runs/eval")

    p = sub.add_parser("fuse")
    p.add_argument("--stage", type=int, required=True, choices=[1, 2, 3, 4])
    p.add_argument("--gold", required=True)
    p.add_argument("--label-names", required=True)
    p.add_argument("--train-ids", required=True)
    p.add_argument("--test-ids", required=True)
    p.add_argument("--text")
    p.add_argument("--text-secondary")
    p.add_argument("--graph")
    p.add_argument("--graph-group", action="append",
                   help="comma-separated table paths; repeat per seed")
    p.add_argument("--out", default="runs/fuse")
    return parser


def _dispatch(args):
    if args.command == "eval":
        return cmd_eval(args.predictions, args.labels,
                        args.label_names.split(","), args.out)
    if args.command == "fuse":
        groups = [g.split(",") for g in args.graph_group] if args.graph_group \
            else None
        return cmd_fuse(
            args.stage, args.gold, args.label_names.split(","),
            args.train_ids, args.test_ids, args.out, text=args.text,
            text_secondary=args.text_secondary, graph=args.graph,
            graph_groups=groups,
        )

    overrides = _overrides(args)
    if args.command == "synth":
        for key in ("synth_n_nodes", "synth_components", "synth_classes",
                    "synth_homophily", "synth_label_fraction", "synth_noise",
                    "synth_seed"):
            value = getattr(args, key, None)
            if value is not None:
                overrides[key] = value
    config = resolve_config(args.config, overrides)
    if args.command == "train":
        return cmd_train(config)
    if args.command == "synth":
        return cmd_synth(config)
    if args.command == "predict":
        return cmd_predict(config, args.checkpoint, eta=args.predict_eta)
    if args.command == "sweep":
        return cmd_sweep(config, _int_list(args.k_grid),
                         _float_list(args.eta_grid))
    if args.command == "label-fraction":
        return cmd_label_fraction(config, _float_list(args.fractions))
    if args.command == "memory-fraction":
        return cmd_memory_fraction(config, _float_list(args.fractions))
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        start = time.perf_counter()
        code = _dispatch(args)
        print(f"done in {time.perf_counter() - start:.1f}s")
        return code
    except MgmError as e:
        print(f"error category={e.category} message={str(e)!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
