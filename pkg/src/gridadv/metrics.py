"""Scoring: classification accuracy, MAPE, and (epsilon, gamma) sweep grids."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateInputError
from .tensor import as_tensor

MAPE_DENOM_FLOOR = 1e-8


def predicted_labels(logits: np.ndarray) -> np.ndarray:
    """Argmax per row; ties resolve to the lowest index."""
    return np.argmax(np.atleast_2d(as_tensor(logits)), axis=1)


def accuracy(predicted, true) -> float:
    """Percentage of matching labels."""
    predicted = np.asarray(predicted)
    true = np.asarray(true)
    if predicted.shape != true.shape:
        raise ContractError(f"label shapes differ: {predicted.shape} vs {true.shape}")
    if predicted.size == 0:
        raise ContractError("accuracy of an empty label set is undefined")
    return 100.0 * float(np.count_nonzero(predicted == true)) / predicted.size


def mape(var_star, var, return_skipped: bool = False):
    """Mean absolute percentage error, skipping |var| < 1e-8 denominators.

    Returns the percentage, or (percentage, skipped_count) when
    return_skipped is set.
    """
    var_star = np.atleast_1d(as_tensor(var_star)).ravel()
    var = np.atleast_1d(as_tensor(var)).ravel()
    if var_star.shape != var.shape:
        raise ContractError(f"shapes differ: {var_star.shape} vs {var.shape}")
    keep = np.abs(var) >= MAPE_DENOM_FLOOR
    skipped = int(np.count_nonzero(~keep))
    if not keep.any():
        raise DegenerateInputError("all denominators below the MAPE threshold")
    value = 100.0 * float(np.mean(np.abs(var_star[keep] - var[keep]) / np.abs(var[keep])))
    return (value, skipped) if return_skipped else value


@dataclass
class SweepResult:
    """Metric grid over (epsilon, gamma), each cell averaged over seeds."""

    epsilons: list[float]
    gammas: list[float]
    grid: np.ndarray  # |epsilons| x |gammas|
    sample_counts: np.ndarray  # per cell
    feature_deviation: list[list[dict]]  # per cell: group name -> mean MAPE %
    task: str
    seeds: list[int]

    def cell(self, eps: float, gamma: float) -> float:
        return float(self.grid[self.epsilons.index(eps), self.gammas.index(gamma)])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["epsilon", "gamma", "seed_count", "metric", "feature_deviation_json"]
            )
            for i, eps in enumerate(self.epsilons):
                for j, gamma in enumerate(self.gammas):
                    writer.writerow(
                        [
                            repr(eps),
                            repr(gamma),
                            len(self.seeds),
                            repr(float(self.grid[i, j])),
                            json.dumps(self.feature_deviation[i][j], sort_keys=True),
                        ]
                    )

    def write_json(self, path, config: dict | None = None) -> None:
        doc = {
            "task": self.task,
            "epsilons": self.epsilons,
            "gammas": self.gammas,
            "seeds": self.seeds,
            "grid": self.grid.tolist(),
            "sample_counts": self.sample_counts.tolist(),
            "feature_deviation": self.feature_deviation,
            "config": config or {},
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)

    def write_matrix(self, path) -> None:
        """Gnuplot-ready whitespace matrix: rows epsilon, columns gamma."""
        with open(path, "w") as fh:
            fh.write("# rows: epsilon " + " ".join(map(repr, self.epsilons)) + "\n")
            fh.write("# cols: gamma " + " ".join(map(repr, self.gammas)) + "\n")
            for row in self.grid:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def run_sweep(
    craft_fn,
    score_fn,
    epsilons: list[float],
    gammas: list[float],
    seeds: list[int],
    task: str = "",
    threads: int = 1,
) -> SweepResult:
    """Evaluate a metric grid over (epsilon, gamma), averaged over seeds.

    craft_fn(eps, gamma, seed) -> AdversarialSet (built on the surrogate);
    score_fn(adv_set, seed) -> (metric, feature_deviation dict) scored on the
    victim. Cells are independent; with threads > 1 they run on a pool and
    are merged deterministically by (cell, seed) coordinate.
    """
    if not epsilons or not gammas or not seeds:
        raise ContractError("epsilon, gamma and seed lists must be nonempty")

    jobs = [
        (i, j, seed)
        for i, eps in enumerate(epsilons)
        for j, gamma in enumerate(gammas)
        for seed in seeds
    ]

    def evaluate(job):
        i, j, seed = job
        try:
            adv = craft_fn(epsilons[i], gammas[j], seed)
            metric, deviation = score_fn(adv, seed)
        except Exception as exc:
            raise type(exc)(
                f"sweep cell (epsilon={epsilons[i]}, gamma={gammas[j]}, "
                f"seed={seed}): {exc}"
            ) from exc
        return job, metric, len(adv), deviation

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(evaluate, jobs))
    else:
        raw = [evaluate(job) for job in jobs]
    results = {job: rest for job, *rest in raw}

    grid = np.zeros((len(epsilons), len(gammas)))
    counts = np.zeros((len(epsilons), len(gammas)), dtype=int)
    deviations: list[list[dict]] = [
        [dict() for _ in gammas] for _ in epsilons
    ]
    for i in range(len(epsilons)):
        for j in range(len(gammas)):
            cell = [results[(i, j, seed)] for seed in seeds]
            grid[i, j] = float(np.mean([metric for metric, _, _ in cell]))
            counts[i, j] = int(np.sum([n for _, n, _ in cell]))
            keys = sorted({k for _, _, dev in cell for k in dev})
            deviations[i][j] = {
                k: float(np.mean([dev[k] for _, _, dev in cell if k in dev]))
                for k in keys
            }
    return SweepResult(
        epsilons=list(epsilons),
        gammas=list(gammas),
        grid=grid,
        sample_counts=counts,
        feature_deviation=deviations,
        task=task,
        seeds=list(seeds),
    )
