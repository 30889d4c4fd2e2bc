"""Command-line experiment runner.

Subcommands:
  gen-pq       write a synthetic power-quality dataset CSV
  gen-building write a synthetic year of building telemetry CSV
  train        train the victim model, write checkpoint + history CSV
  gradcheck    compare analytic vs finite-difference gradients
  attack       train a surrogate and write an adversarial set (CSV + JSON)
  evaluate     print clean and adversarial metrics as JSON
  sweep        evaluate the (epsilon, gamma) metric grid

Every run writes a manifest.json with the config hash, root seed, and a
checksum for each artifact it produced.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, buildingload, metrics, nn, pipeline, powerquality, train
from .config import BUILDING_DEFAULTS, PQ_DEFAULTS, ExperimentConfig, parse_config
from .errors import ConfigError, GridAdvError, ParseError
from .tensor import RandomSource

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_THRESHOLD = 4

GRADCHECK_TOLERANCE = 1e-4


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, cfg: ExperimentConfig, artifacts: list[str]) -> str:
    config_blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    manifest = {
        "config_sha256": hashlib.sha256(config_blob).hexdigest(),
        "root_seed": cfg.seed,
        "artifacts": [
            {"path": os.path.basename(p), "sha256": _sha256_file(p)}
            for p in sorted(artifacts)
        ],
        "tool_version": __version__,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg


def cmd_gen_pq(cfg: ExperimentConfig) -> list[str]:
    ds = powerquality.gen_dataset(
        cfg.get("dataset", "n_per_class"),
        pipeline.signal_params(cfg),
        RandomSource(cfg.seed).child("data").seed,
    )
    path = os.path.join(cfg.out_dir, "pq_dataset.csv")
    powerquality.write_csv(ds, path)
    print(f"wrote {len(ds)} signals to {path}")
    return [path]


def cmd_gen_building(cfg: ExperimentConfig) -> list[str]:
    params = pipeline.building_params(cfg)
    features, load = buildingload.simulate_year(
        params, RandomSource(cfg.seed).child("simulate").seed
    )
    path = os.path.join(cfg.out_dir, "building_year.csv")
    buildingload.write_csv(features, load, path)
    print(f"wrote {len(load)} steps to {path}")
    return [path]


def cmd_train(cfg: ExperimentConfig) -> list[str]:
    root = RandomSource(cfg.seed)
    if cfg.task == "power-quality":
        train_ds, test_ds = pipeline.pq_data(cfg, cfg.seed)
        model, history = pipeline._train_mlp(
            cfg,
            "model",
            train_ds,
            train_ds.inputs.shape[1],
            root.child("victim-init"),
            root.child("victim-train").seed,
        )
        labels = pipeline.victim_labels(model, test_ds.inputs)
        acc = metrics.accuracy(labels, np.argmax(test_ds.targets, axis=1))
        history.final_metrics["test_accuracy_pct"] = acc
        norm_dict = None
        print(f"held-out accuracy: {acc:.2f}%")
    else:
        params = pipeline.building_params(cfg)
        memory = cfg.get("dataset", "memory")
        features, load = buildingload.simulate_year(
            params, root.child("simulate").seed
        )
        windows = buildingload.make_windows(features, load, memory)
        train_sd, test_sd = buildingload.holdout_split(
            windows, cfg.get("dataset", "test_fraction"), root.child("split").seed
        )
        limit = cfg.get("dataset", "train_window_limit") or 0
        if limit and limit < len(train_sd):
            train_sd = buildingload.SequenceDataset(
                train_sd.windows[:limit], train_sd.targets[:limit], train_sd.norm
            )
        model, history = pipeline._train_rnn(
            cfg,
            "model",
            train_sd.to_dataset(),
            params.n_features,
            memory,
            root.child("victim-init"),
            root.child("victim-train").seed,
        )
        preds_n, _ = nn.forward(
            model, train_sd.norm.normalize(test_sd.windows), mode="eval"
        )
        preds = train_sd.norm.denormalize_target(preds_n)
        err = metrics.mape(preds, test_sd.targets)
        history.final_metrics["test_mape_pct"] = err
        norm_dict = train_sd.norm.to_dict()
        print(f"held-out MAPE: {err:.2f}%")

    ckpt = os.path.join(cfg.out_dir, "checkpoint.json")
    hist = os.path.join(cfg.out_dir, "history.csv")
    nn.save_model(model, ckpt, normalization=norm_dict)
    history.write_csv(hist)
    return [ckpt, hist]


def cmd_gradcheck(cfg: ExperimentConfig) -> list[str]:
    root = RandomSource(cfg.seed)
    worst = 0.0
    for i in range(3):
        arch = nn.MlpArch(input_dim=8, hidden=[16], n_classes=4, dropout=0.0)
        model = nn.init_mlp(arch, root.child(f"gc-mlp-{i}"))
        rng = root.child(f"gc-mlp-x-{i}")
        x = rng.normal(size=(2, 8))
        y = np.zeros((2, 4))
        y[0, rng.integers(0, 4)] = 1.0
        y[1, rng.integers(0, 4)] = 1.0
        worst = max(worst, nn.grad_check(model, x, y, "cross_entropy"))
    for i in range(3):
        arch = nn.RnnArch(
            n_features=3, hidden_width=4, memory=5, readout_hidden=[4], dropout=0.0
        )
        model = nn.init_rnn(arch, root.child(f"gc-rnn-{i}"))
        rng = root.child(f"gc-rnn-x-{i}")
        x = rng.normal(size=(5, 3))
        y = float(rng.normal())
        worst = max(worst, nn.grad_check(model, x, y, "mse"))
    print(f"max relative gradient error: {worst:.3e}")
    if worst > GRADCHECK_TOLERANCE:
        raise ThresholdFailure(
            f"gradient check failed: {worst:.3e} > {GRADCHECK_TOLERANCE}"
        )
    return []


class ThresholdFailure(GridAdvError):
    pass


def cmd_attack(cfg: ExperimentConfig) -> list[str]:
    ctx = pipeline.make_context(cfg, cfg.seed)
    adv = ctx.craft(cfg.get("attack", "epsilon"), cfg.get("attack", "gamma"))
    csv_path = os.path.join(cfg.out_dir, "adversarial_set.csv")
    json_path = os.path.join(cfg.out_dir, "adversarial_summary.json")
    adv.write_csv(csv_path)
    adv.write_json_summary(json_path)
    print(f"crafted {len(adv)} adversarial samples")
    return [csv_path, json_path]


def cmd_evaluate(cfg: ExperimentConfig) -> list[str]:
    ctx = pipeline.make_context(cfg, cfg.seed)
    clean = pipeline.clean_metric(ctx)
    adv = ctx.craft(cfg.get("attack", "epsilon"), cfg.get("attack", "gamma"))
    attacked, deviation = pipeline.score(ctx, adv)
    metric_name = "accuracy_pct" if cfg.task == "power-quality" else "mape_pct"
    doc = {
        "task": cfg.task,
        "epsilon": cfg.get("attack", "epsilon"),
        "gamma": cfg.get("attack", "gamma"),
        f"clean_{metric_name}": clean,
        f"adversarial_{metric_name}": attacked,
        "feature_deviation_pct": deviation,
        "n_samples": len(adv),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    path = os.path.join(cfg.out_dir, "evaluation.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return [path]


def cmd_sweep(cfg: ExperimentConfig) -> list[str]:
    result = pipeline.run_sweep(cfg, threads=cfg.threads)
    csv_path = os.path.join(cfg.out_dir, "sweep.csv")
    json_path = os.path.join(cfg.out_dir, "sweep.json")
    matrix_path = os.path.join(cfg.out_dir, "sweep_matrix.dat")
    result.write_csv(csv_path)
    result.write_json(json_path, config=cfg.to_dict())
    result.write_matrix(matrix_path)
    print(f"swept {len(result.epsilons)}x{len(result.gammas)} grid "
          f"over {len(result.seeds)} seeds")
    return [csv_path, json_path, matrix_path]


COMMANDS = {
    "gen-pq": cmd_gen_pq,
    "gen-building": cmd_gen_building,
    "train": cmd_train,
    "gradcheck": cmd_gradcheck,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def _defaults_epilog() -> str:
    lines = ["defaults per task (override in the config file):"]
    for name, table in (("power-quality", PQ_DEFAULTS), ("building-load", BUILDING_DEFAULTS)):
        lines.append(f"  {name}:")
        for (section, key), value in sorted(table.items()):
            lines.append(f"    [{section}] {key} = {value}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridadv",
        description=__doc__,
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="override the root seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker cap for sweep cells")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        artifacts = COMMANDS[args.command](cfg)
        manifest = _write_manifest(cfg.out_dir, cfg, artifacts)
        print(f"manifest: {manifest}")
        return EXIT_OK
    except ThresholdFailure as exc:
        print(f"gridadv {args.command}: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except (ConfigError, ParseError) as exc:
        print(f"gridadv {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridAdvError as exc:
        print(f"gridadv {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
