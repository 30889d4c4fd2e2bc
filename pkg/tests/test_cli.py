"""End-to-end CLI behavior: exit codes, artifacts, manifest determinism."""

import json

import pytest

from gridadv.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_THRESHOLD,
    main,
)

# Deliberately tiny experiment so each CLI invocation stays sub-second.
TINY_PQ = """\
[experiment]
task = power-quality
seed = 11
[dataset]
n_per_class = 8
signal_length = 64
cycle = 32
[model]
hidden_sizes = 8
epochs = 3
[surrogate]
hidden_sizes = 6
epochs = 3
[attack]
n_adv = 4
[sweep]
epsilon_list = 0.05, 0.1
gamma_list = 0.2
n_seeds = 2
"""

TINY_BLD = """\
[experiment]
task = building-load
seed = 11
[dataset]
steps = 864
memory = 6
train_window_limit = 200
[model]
hidden_sizes = 6,4
epochs = 2
[surrogate]
hidden_sizes = 5,4
epochs = 2
[attack]
n_adv = 5
"""


@pytest.fixture
def pq_cfg(tmp_path):
    path = tmp_path / "pq.cfg"
    path.write_text(TINY_PQ)
    return str(path)


@pytest.fixture
def bld_cfg(tmp_path):
    path = tmp_path / "bld.cfg"
    path.write_text(TINY_BLD)
    return str(path)


def run(command, cfg, out, extra=()):
    return main([command, "--config", cfg, "--out", str(out), *extra])


class TestExitCodes:
    def test_missing_config_file_is_config_error(self, tmp_path, capsys):
        assert run("train", str(tmp_path / "absent.cfg"), tmp_path) != EXIT_OK

    def test_bad_key_is_config_error(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[experiment]\ntask = power-quality\nseed = 1\n[modle]\nepochs = 1\n")
        assert run("gen-pq", str(path), tmp_path) == EXIT_CONFIG

    def test_gradcheck_passes_with_exact_gradients(self, pq_cfg, tmp_path):
        assert run("gradcheck", pq_cfg, tmp_path / "o") == EXIT_OK

    def test_threshold_exit_reserved_value(self):
        assert EXIT_THRESHOLD == 4 and EXIT_CONFIG == 2


class TestArtifacts:
    def test_gen_pq_writes_dataset_and_manifest(self, pq_cfg, tmp_path, capsys):
        out = tmp_path / "o"
        assert run("gen-pq", pq_cfg, out) == EXIT_OK
        assert (out / "pq_dataset.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["root_seed"] == 11
        assert manifest["artifacts"][0]["path"] == "pq_dataset.csv"
        assert len(manifest["artifacts"][0]["sha256"]) == 64

    def test_train_writes_checkpoint(self, pq_cfg, tmp_path):
        out = tmp_path / "o"
        assert run("train", pq_cfg, out) == EXIT_OK
        assert (out / "checkpoint.json").exists()
        assert (out / "history.csv").exists()

    def test_attack_and_evaluate(self, pq_cfg, tmp_path, capsys):
        out = tmp_path / "o"
        assert run("attack", pq_cfg, out) == EXIT_OK
        assert (out / "adversarial_set.csv").exists()
        assert run("evaluate", pq_cfg, out) == EXIT_OK
        doc = json.loads((out / "evaluation.json").read_text())
        assert "clean_accuracy_pct" in doc and "adversarial_accuracy_pct" in doc

    def test_building_pipeline(self, bld_cfg, tmp_path, capsys):
        out = tmp_path / "o"
        assert run("gen-building", bld_cfg, out) == EXIT_OK
        assert (out / "building_year.csv").exists()
        assert run("evaluate", bld_cfg, out) == EXIT_OK
        doc = json.loads((out / "evaluation.json").read_text())
        assert "clean_mape_pct" in doc
        assert "occupancy" in doc["feature_deviation_pct"]

    def test_seed_override_changes_manifest(self, pq_cfg, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        run("gen-pq", pq_cfg, a)
        run("gen-pq", pq_cfg, b, extra=["--seed", "99"])
        ma = json.loads((a / "manifest.json").read_text())
        mb = json.loads((b / "manifest.json").read_text())
        assert ma["artifacts"][0]["sha256"] != mb["artifacts"][0]["sha256"]


class TestManifestDeterminism:
    def _manifest(self, path):
        doc = json.loads((path / "manifest.json").read_text())
        return json.dumps(doc, sort_keys=True)

    def test_repeat_runs_byte_identical(self, pq_cfg, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("evaluate", pq_cfg, a) == EXIT_OK
        assert run("evaluate", pq_cfg, b) == EXIT_OK
        assert self._manifest(a) == self._manifest(b)
        assert (a / "evaluation.json").read_bytes() == (b / "evaluation.json").read_bytes()

    def test_sweep_threads_1_vs_8_identical(self, pq_cfg, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("sweep", pq_cfg, a, extra=["--threads", "1"]) == EXIT_OK
        assert run("sweep", pq_cfg, b, extra=["--threads", "8"]) == EXIT_OK
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
        assert (a / "sweep_matrix.dat").read_bytes() == (b / "sweep_matrix.dat").read_bytes()
        ma = json.loads((a / "manifest.json").read_text())
        mb = json.loads((b / "manifest.json").read_text())
        assert ma["artifacts"] == mb["artifacts"]
