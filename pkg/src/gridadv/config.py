"""Strict line-oriented experiment configuration.

Format: `[section]` headers and `key = value` lines; `#` starts a comment.
Unknown keys and duplicate keys are errors (misspellings must not silently
fall back to defaults). Lists are comma-separated. All defaults are
task-dependent and documented in the CLI --help output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, ParseError

TASKS = ("power-quality", "building-load")


def _parse_float_list(s: str) -> list[float]:
    return [float(p) for p in s.split(",") if p.strip()]


def _parse_int_list(s: str) -> list[int]:
    return [int(p) for p in s.split(",") if p.strip()]


def _parse_optional_float(s: str) -> float | None:
    return None if s.strip().lower() == "none" else float(s)


# (section, key) -> parser
SCHEMA = {
    ("experiment", "task"): str,
    ("experiment", "seed"): int,
    ("experiment", "out_dir"): str,
    ("experiment", "threads"): int,
    ("dataset", "n_per_class"): int,
    ("dataset", "signal_length"): int,
    ("dataset", "cycle"): int,
    ("dataset", "noise_sigma"): float,
    ("dataset", "steps"): int,
    ("dataset", "zones"): int,
    ("dataset", "memory"): int,
    ("dataset", "test_fraction"): float,
    ("dataset", "train_window_limit"): int,
    ("dataset", "path"): str,
    ("model", "hidden_sizes"): _parse_int_list,
    ("model", "learning_rate"): float,
    ("model", "batch_size"): int,
    ("model", "epochs"): int,
    ("model", "dropout"): float,
    ("surrogate", "hidden_sizes"): _parse_int_list,
    ("surrogate", "learning_rate"): float,
    ("surrogate", "batch_size"): int,
    ("surrogate", "epochs"): int,
    ("surrogate", "dropout"): float,
    ("attack", "epsilon"): float,
    ("attack", "gamma"): float,
    ("attack", "kernel"): str,
    ("attack", "clip_lo"): _parse_optional_float,
    ("attack", "clip_hi"): _parse_optional_float,
    ("attack", "n_adv"): int,
    ("sweep", "epsilon_list"): _parse_float_list,
    ("sweep", "gamma_list"): _parse_float_list,
    ("sweep", "n_seeds"): int,
}

# Defaults shared across tasks; None means "depends on the task".
PQ_DEFAULTS = {
    ("dataset", "n_per_class"): 200,
    ("dataset", "signal_length"): 256,
    ("dataset", "cycle"): 64,
    ("dataset", "noise_sigma"): 0.03,
    ("dataset", "test_fraction"): 0.25,
    ("model", "hidden_sizes"): [64, 32],
    ("model", "learning_rate"): 0.05,
    ("model", "batch_size"): 32,
    ("model", "epochs"): 300,
    ("model", "dropout"): 0.1,
    ("surrogate", "hidden_sizes"): [48, 24],
    ("surrogate", "learning_rate"): 0.05,
    ("surrogate", "batch_size"): 32,
    ("surrogate", "epochs"): 300,
    ("surrogate", "dropout"): 0.1,
    ("attack", "epsilon"): 0.1,
    ("attack", "gamma"): 0.4,
    ("attack", "kernel"): "gradient-sign",
    ("attack", "n_adv"): 200,
    ("sweep", "epsilon_list"): [0.01, 0.03, 0.05, 0.1],
    ("sweep", "gamma_list"): [0.1, 0.2, 0.4],
    ("sweep", "n_seeds"): 5,
}

BUILDING_DEFAULTS = {
    ("dataset", "steps"): 52_560,
    ("dataset", "zones"): 4,
    ("dataset", "memory"): 12,  # 2 hours at 10-minute resolution
    ("dataset", "test_fraction"): 1.0 / 6.0,
    ("dataset", "train_window_limit"): 15_000,  # 0 = use all windows
    ("model", "hidden_sizes"): [48, 16],  # [hidden width, readout hidden]
    ("model", "learning_rate"): 0.01,
    ("model", "batch_size"): 64,
    ("model", "epochs"): 300,
    ("model", "dropout"): 0.0,
    ("surrogate", "hidden_sizes"): [40, 16],
    ("surrogate", "learning_rate"): 0.01,
    ("surrogate", "batch_size"): 64,
    ("surrogate", "epochs"): 300,
    ("surrogate", "dropout"): 0.0,
    ("attack", "epsilon"): 0.03,
    ("attack", "gamma"): 0.1,
    ("attack", "kernel"): "gradient-sign",
    ("attack", "clip_lo"): None,
    ("attack", "clip_hi"): None,
    ("attack", "n_adv"): 200,
    ("sweep", "epsilon_list"): [0.01, 0.03, 0.05],
    ("sweep", "gamma_list"): [0.1, 0.2, 0.4],
    ("sweep", "n_seeds"): 5,
}


@dataclass
class ExperimentConfig:
    task: str
    seed: int
    out_dir: str = "."
    threads: int = 1
    values: dict = field(default_factory=dict)  # (section, key) -> parsed value

    def get(self, section: str, key: str):
        if (section, key) in self.values:
            return self.values[(section, key)]
        defaults = PQ_DEFAULTS if self.task == "power-quality" else BUILDING_DEFAULTS
        if (section, key) in defaults:
            return defaults[(section, key)]
        return None

    def to_dict(self) -> dict:
        # out_dir and threads are deliberately excluded: where results land
        # and how many workers computed them are not part of the experiment's
        # identity, and the manifest hash must agree across such runs.
        doc = {"task": self.task, "seed": self.seed}
        for (section, key), value in sorted(self.values.items()):
            doc[f"{section}.{key}"] = value
        return doc


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict = {}
    seen_lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected `key = value`, got {raw!r}")
        if section is None:
            raise ParseError(f"{source}:{lineno}: key before any [section] header")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if (section, key) not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key [{section}] {key}")
        if (section, key) in values:
            raise ConfigError(
                f"{source}:{lineno}: duplicate key [{section}] {key} "
                f"(first set at line {seen_lines[(section, key)]})"
            )
        try:
            values[(section, key)] = SCHEMA[(section, key)](value)
        except ValueError as exc:
            raise ParseError(f"{source}:{lineno}: bad value for {key}: {exc}")
        seen_lines[(section, key)] = lineno

    task = values.pop(("experiment", "task"), None)
    seed = values.pop(("experiment", "seed"), None)
    if task is None or seed is None:
        raise ConfigError(f"{source}: [experiment] task and seed are required")
    if task not in TASKS:
        raise ConfigError(f"{source}: unknown task {task!r}; expected one of {TASKS}")
    out_dir = values.pop(("experiment", "out_dir"), ".")
    threads = values.pop(("experiment", "threads"), 1)
    return ExperimentConfig(
        task=task, seed=seed, out_dir=out_dir, threads=threads, values=values
    )


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))
