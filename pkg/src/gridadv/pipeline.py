"""Glue between configuration and the task pipelines.

A TaskContext bundles everything one experiment seed produces: the split
data, a trained victim, a trained surrogate, and the crafting/scoring
closures the sweep needs. Victims and surrogates are deliberately trained
with different architectures and seeds; crafting only ever sees the
surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import attack, buildingload, metrics, nn, powerquality, train
from .config import ExperimentConfig
from .tensor import RandomSource


@dataclass
class TaskContext:
    cfg: ExperimentConfig
    seed: int
    train_data: train.Dataset  # normalized for building-load
    clean_samples: list  # (x, y) pairs from the held-out set
    victim: object
    surrogate: object
    loss_tag: str
    feature_mask: np.ndarray | None = None
    clip_lo: float | None = None
    clip_hi: float | None = None
    # building-load extras
    norm: buildingload.Normalization | None = None
    test_targets_physical: np.ndarray | None = None
    building_params: buildingload.BuildingParams | None = None

    def attack_spec(self, epsilon: float, gamma: float) -> attack.AttackSpec:
        return attack.AttackSpec(
            epsilon=epsilon,
            gamma=gamma,
            kernel=self.cfg.get("attack", "kernel"),
            feature_mask=self.feature_mask,
            clip_lo=self.clip_lo,
            clip_hi=self.clip_hi,
        )

    def craft(self, epsilon: float, gamma: float) -> attack.AdversarialSet:
        return attack.craft_with_model(
            self.surrogate,
            self.clean_samples,
            self.attack_spec(epsilon, gamma),
            self.loss_tag,
        )


def _hyper(cfg: ExperimentConfig, section: str, loss: str, seed: int) -> train.Hyperparams:
    return train.Hyperparams(
        learning_rate=cfg.get(section, "learning_rate"),
        batch_size=cfg.get(section, "batch_size"),
        epochs=cfg.get(section, "epochs"),
        loss=loss,
        seed=seed,
    )


def signal_params(cfg: ExperimentConfig) -> powerquality.SignalParams:
    return powerquality.SignalParams(
        length=cfg.get("dataset", "signal_length"),
        cycle=cfg.get("dataset", "cycle"),
        noise_sigma=cfg.get("dataset", "noise_sigma"),
    )


def building_params(cfg: ExperimentConfig) -> buildingload.BuildingParams:
    return buildingload.BuildingParams(
        steps=cfg.get("dataset", "steps"),
        zones=cfg.get("dataset", "zones"),
    )


def pq_data(cfg: ExperimentConfig, seed: int) -> tuple[train.Dataset, train.Dataset]:
    root = RandomSource(seed)
    path = cfg.get("dataset", "path")
    if path:
        ds = powerquality.read_csv(path)
    else:
        ds = powerquality.gen_dataset(
            cfg.get("dataset", "n_per_class"), signal_params(cfg), root.child("data").seed
        )
    return train.split_dataset(
        ds, cfg.get("dataset", "test_fraction"), root.child("split")
    )


def _train_mlp(cfg, section, train_ds, input_dim, rng_init, train_seed):
    arch = nn.MlpArch(
        input_dim=input_dim,
        hidden=list(cfg.get(section, "hidden_sizes")),
        n_classes=train_ds.targets.shape[1],
        dropout=cfg.get(section, "dropout"),
    )
    model = nn.init_mlp(arch, rng_init)
    model, history = train.fit(
        model, train_ds, _hyper(cfg, section, "cross_entropy", train_seed)
    )
    return model, history


def _train_rnn(cfg, section, train_ds, n_features, memory, rng_init, train_seed):
    sizes = list(cfg.get(section, "hidden_sizes"))
    arch = nn.RnnArch(
        n_features=n_features,
        hidden_width=sizes[0],
        memory=memory,
        readout_hidden=sizes[1:] or [16],
        dropout=cfg.get(section, "dropout"),
    )
    model = nn.init_rnn(arch, rng_init)
    model, history = train.fit(model, train_ds, _hyper(cfg, section, "mse", train_seed))
    return model, history


def pq_context(cfg: ExperimentConfig, seed: int) -> TaskContext:
    root = RandomSource(seed)
    train_ds, test_ds = pq_data(cfg, seed)
    victim, _ = _train_mlp(
        cfg,
        "model",
        train_ds,
        train_ds.inputs.shape[1],
        root.child("victim-init"),
        root.child("victim-train").seed,
    )
    surrogate, _ = _train_mlp(
        cfg,
        "surrogate",
        train_ds,
        train_ds.inputs.shape[1],
        root.child("surrogate-init"),
        root.child("surrogate-train").seed,
    )
    n_adv = min(cfg.get("attack", "n_adv"), len(test_ds))
    clean = list(zip(test_ds.inputs[:n_adv], test_ds.targets[:n_adv]))
    return TaskContext(
        cfg=cfg,
        seed=seed,
        train_data=train_ds,
        clean_samples=clean,
        victim=victim,
        surrogate=surrogate,
        loss_tag="cross_entropy",
        clip_lo=cfg.get("attack", "clip_lo"),
        clip_hi=cfg.get("attack", "clip_hi"),
    )


def building_context(cfg: ExperimentConfig, seed: int) -> TaskContext:
    root = RandomSource(seed)
    params = building_params(cfg)
    memory = cfg.get("dataset", "memory")
    features, load = buildingload.simulate_year(params, root.child("simulate").seed)
    windows = buildingload.make_windows(features, load, memory)
    train_sd, test_sd = buildingload.holdout_split(
        windows, cfg.get("dataset", "test_fraction"), root.child("split").seed
    )
    limit = cfg.get("dataset", "train_window_limit") or 0
    if limit and limit < len(train_sd):
        # split already shuffled; a prefix is an unbiased subsample
        train_sd = buildingload.SequenceDataset(
            train_sd.windows[:limit], train_sd.targets[:limit], train_sd.norm
        )
    train_ds = train_sd.to_dataset()

    victim, _ = _train_rnn(
        cfg,
        "model",
        train_ds,
        params.n_features,
        memory,
        root.child("victim-init"),
        root.child("victim-train").seed,
    )
    surrogate, _ = _train_rnn(
        cfg,
        "surrogate",
        train_ds,
        params.n_features,
        memory,
        root.child("surrogate-init"),
        root.child("surrogate-train").seed,
    )

    n_adv = min(cfg.get("attack", "n_adv"), len(test_sd))
    norm = train_sd.norm
    test_windows_n = norm.normalize(test_sd.windows[:n_adv])
    test_targets_n = norm.normalize_target(test_sd.targets[:n_adv])
    clean = list(zip(test_windows_n, test_targets_n))

    mask = np.asarray(
        [
            t * params.n_features + c
            for t in range(memory)
            for c in params.attackable_columns()
        ]
    )
    return TaskContext(
        cfg=cfg,
        seed=seed,
        train_data=train_ds,
        clean_samples=clean,
        victim=victim,
        surrogate=surrogate,
        loss_tag="mse",
        feature_mask=mask,
        clip_lo=cfg.get("attack", "clip_lo"),
        clip_hi=cfg.get("attack", "clip_hi"),
        norm=norm,
        test_targets_physical=test_sd.targets[:n_adv],
        building_params=params,
    )


def make_context(cfg: ExperimentConfig, seed: int) -> TaskContext:
    if cfg.task == "power-quality":
        return pq_context(cfg, seed)
    return building_context(cfg, seed)


def victim_labels(model, inputs: np.ndarray) -> np.ndarray:
    logits, _ = nn.forward(model, inputs, mode="eval")
    return metrics.predicted_labels(logits)


def score_pq(ctx: TaskContext, adv_set: attack.AdversarialSet) -> tuple[float, dict]:
    """Victim accuracy on the adversarial inputs, plus mean signal deviation."""
    advs = np.stack([r.adversarial for r in adv_set.records])
    true = np.asarray([int(np.argmax(r.target)) for r in adv_set.records])
    acc = metrics.accuracy(victim_labels(ctx.victim, advs), true)
    origs = np.stack([r.original for r in adv_set.records])
    deviation = {"signal": metrics.mape(advs.ravel(), origs.ravel())}
    return acc, deviation


def score_building(
    ctx: TaskContext, adv_set: attack.AdversarialSet
) -> tuple[float, dict]:
    """Victim prediction MAPE vs true load, plus per-group deviation MAPE.

    Deviations are computed in denormalized (physical) units over the
    attackable feature groups.
    """
    advs = np.stack([r.adversarial for r in adv_set.records])
    preds_n, _ = nn.forward(ctx.victim, advs, mode="eval")
    preds = ctx.norm.denormalize_target(preds_n)
    truth = ctx.test_targets_physical[: len(adv_set)]
    pred_mape = metrics.mape(preds, truth)

    origs = np.stack([r.original for r in adv_set.records])
    advs_phys = ctx.norm.denormalize(advs)
    origs_phys = ctx.norm.denormalize(origs)
    zones = ctx.building_params.zones
    groups = {
        "occupancy": [2],
        "setpoint": [3 + z for z in range(zones)],
    }
    deviation = {}
    for name, cols in groups.items():
        deviation[name] = metrics.mape(
            advs_phys[:, :, cols].ravel(), origs_phys[:, :, cols].ravel()
        )
    return pred_mape, deviation


def score(ctx: TaskContext, adv_set: attack.AdversarialSet) -> tuple[float, dict]:
    if ctx.cfg.task == "power-quality":
        return score_pq(ctx, adv_set)
    return score_building(ctx, adv_set)


def clean_metric(ctx: TaskContext) -> float:
    """The no-attack baseline: accuracy or MAPE on the clean held-out samples."""
    xs = np.stack([x for x, _ in ctx.clean_samples])
    ys = np.stack([y for _, y in ctx.clean_samples])
    if ctx.cfg.task == "power-quality":
        true = np.argmax(ys, axis=1)
        return metrics.accuracy(victim_labels(ctx.victim, xs), true)
    preds_n, _ = nn.forward(ctx.victim, xs, mode="eval")
    preds = ctx.norm.denormalize_target(preds_n)
    return metrics.mape(preds, ctx.test_targets_physical[: len(xs)])


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> metrics.SweepResult:
    """Full grid: per-seed contexts built once, cells evaluated on top."""
    seeds = [
        RandomSource(cfg.seed).child(f"sweep-seed-{i}").seed
        for i in range(cfg.get("sweep", "n_seeds"))
    ]
    contexts = {seed: make_context(cfg, seed) for seed in seeds}

    def craft_fn(eps, gamma, seed):
        return contexts[seed].craft(eps, gamma)

    def score_fn(adv_set, seed):
        return score(contexts[seed], adv_set)

    return metrics.run_sweep(
        craft_fn,
        score_fn,
        cfg.get("sweep", "epsilon_list"),
        cfg.get("sweep", "gamma_list"),
        seeds,
        task=cfg.task,
        threads=threads,
    )
