"""Accuracy, MAPE, and the (epsilon, gamma) sweep grid."""

import csv
import json

import numpy as np
import pytest

from gridadv.errors import ContractError, DegenerateInputError
from gridadv.metrics import (
    MAPE_DENOM_FLOOR,
    SweepResult,
    accuracy,
    mape,
    predicted_labels,
    run_sweep,
)


class TestPredictedLabels:
    def test_argmax_rows(self):
        logits = np.array([[0.1, 0.9], [2.0, -1.0]])
        np.testing.assert_array_equal(predicted_labels(logits), [1, 0])

    def test_tie_resolves_to_lowest_index(self):
        np.testing.assert_array_equal(predicted_labels(np.array([[1.0, 1.0]])), [0])


class TestAccuracy:
    def test_counting_oracle(self):
        pred = np.array([0, 1, 2, 1, 0])
        true = np.array([0, 1, 1, 1, 2])
        matches = sum(int(p == t) for p, t in zip(pred, true))
        assert accuracy(pred, true) == 100.0 * matches / 5

    def test_bounds(self):
        assert accuracy([1, 1], [1, 1]) == 100.0
        assert accuracy([0, 0], [1, 1]) == 0.0

    def test_guards(self):
        with pytest.raises(ContractError):
            accuracy([1, 2], [1])
        with pytest.raises(ContractError):
            accuracy([], [])


class TestMape:
    def test_hand_example(self):
        # |1.1-1|/1 = 10%, |1.8-2|/2 = 10% -> mean 10%
        np.testing.assert_allclose(mape([1.1, 1.8], [1.0, 2.0]), 10.0, atol=1e-12)

    def test_perfect_prediction_is_zero(self):
        assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0

    def test_scaling_invariance(self):
        pred = np.array([1.2, 2.4, 0.9])
        true = np.array([1.0, 2.0, 1.0])
        np.testing.assert_allclose(
            mape(pred, true), mape(1000 * pred, 1000 * true), atol=1e-9
        )

    def test_small_denominators_skipped_and_reported(self):
        value, skipped = mape(
            [1.1, 5.0], [1.0, MAPE_DENOM_FLOOR / 10], return_skipped=True
        )
        assert skipped == 1
        np.testing.assert_allclose(value, 10.0, atol=1e-9)

    def test_all_degenerate_raises(self):
        with pytest.raises(DegenerateInputError):
            mape([1.0], [0.0])

    def test_shape_guard(self):
        with pytest.raises(ContractError):
            mape([1.0, 2.0], [1.0])


def _craft_stub(eps, gamma, seed):
    # stands in for an AdversarialSet; only len() is consumed by run_sweep
    return [None] * 3


def _score_stub(adv, seed):
    return 10.0 * (seed + 1), {"occupancy": float(seed)}


class TestRunSweep:
    def test_grid_shape_and_seed_average(self):
        res = run_sweep(
            _craft_stub, _score_stub, [0.0, 0.1], [0.5], seeds=[0, 1], task="demo"
        )
        assert res.grid.shape == (2, 1)
        np.testing.assert_allclose(res.grid, [[15.0], [15.0]])
        assert res.feature_deviation[0][0] == {"occupancy": 0.5}
        assert res.cell(0.1, 0.5) == 15.0

    def test_threads_produce_identical_results(self):
        def craft(eps, gamma, seed):
            return [None] * 2

        def score(adv, seed):
            return eps_gamma_metric(seed), {}

        def eps_gamma_metric(seed):
            return float(seed * 7 % 5)

        a = run_sweep(craft, score, [0.1, 0.2], [0.3, 0.4], [1, 2, 3], threads=1)
        b = run_sweep(craft, score, [0.1, 0.2], [0.3, 0.4], [1, 2, 3], threads=8)
        np.testing.assert_array_equal(a.grid, b.grid)

    def test_empty_lists_rejected(self):
        with pytest.raises(ContractError):
            run_sweep(_craft_stub, _score_stub, [], [0.1], [0])

    def test_cell_errors_name_their_coordinates(self):
        def bad_craft(eps, gamma, seed):
            raise ValueError("boom")

        with pytest.raises(ValueError) as exc:
            run_sweep(bad_craft, _score_stub, [0.25], [0.75], [4])
        msg = str(exc.value)
        assert "0.25" in msg and "0.75" in msg and "seed=4" in msg

    def test_csv_output(self, tmp_path):
        res = run_sweep(_craft_stub, _score_stub, [0.1], [0.2, 0.3], seeds=[0, 1])
        path = tmp_path / "sweep.csv"
        res.write_csv(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "epsilon",
            "gamma",
            "seed_count",
            "metric",
            "feature_deviation_json",
        ]
        assert len(rows) == 3
        assert float(rows[1][3]) == 15.0
        assert json.loads(rows[1][4]) == {"occupancy": 0.5}

    def test_json_output_embeds_config(self, tmp_path):
        res = run_sweep(_craft_stub, _score_stub, [0.1], [0.2], seeds=[0])
        path = tmp_path / "sweep.json"
        res.write_json(path, config={"task": "demo"})
        doc = json.loads(path.read_text())
        assert doc["config"] == {"task": "demo"}
        assert doc["grid"] == [[10.0]]

    def test_matrix_output(self, tmp_path):
        res = run_sweep(_craft_stub, _score_stub, [0.1, 0.2], [0.3], seeds=[0])
        path = tmp_path / "grid.dat"
        res.write_matrix(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# rows: epsilon")
        assert len(lines) == 4
