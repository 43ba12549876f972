import json
import math

import numpy as np
import pytest

import snnprune


def test_energy_table_rows():
    p = snnprune.EnergyParams()
    dense = snnprune.energy_per_timestep(535.2, 0, p)
    assert dense == pytest.approx(6811.6, abs=0.05)
    assert round(snnprune.average_power(dense, p.dt_ms), 2) == pytest.approx(1.70)
    pruned = snnprune.energy_per_timestep(54.63, 0, p)
    assert pruned == pytest.approx(708.4, abs=0.05)


def test_lif_decay_matches_closed_form():
    p = snnprune.LifParams()
    p.tau, p.dt = 7.0, 0.5
    u = [3.0]
    for _ in range(100):
        u = snnprune.lif_membrane_update(u, [0.0], p)
    assert u[0] == pytest.approx(3.0 * math.exp(-100 * 0.5 / 7.0), rel=1e-12)


def test_r_squared_examples():
    truth = np.array([[0, 0], [1, 1], [2, 2]], dtype=float)
    assert snnprune.r_squared(truth, truth) == 1.0
    assert snnprune.r_squared(np.array([[0, 0], [1, 1], [1, 2]], dtype=float), truth) == 0.75
    with pytest.raises(snnprune.DegenerateInputError):
        snnprune.r_squared(truth, np.ones((3, 2)))


def test_prune_step_masks_weights():
    net = snnprune.make_snn3(16, seed=4)
    assert net.layer_dims == [16, 50, 50, 50, 2]
    before = net.prunable_weight_count
    removed = net.prune_step(10.0)
    assert removed == round(0.1 * 2500) * 2 + round(0.1 * 800)
    assert net.pruned_fraction == pytest.approx(removed / before)
    w, m = net.weights(1), net.mask(1)
    assert np.all(w[m == 0] == 0.0)


def test_sha256_known_vector():
    assert snnprune.sha256_hex("abc").startswith("ba7816bf8f01cfea")


def tiny_config(tmp_path):
    doc = {
        "seed": 5,
        "output_dir": "out",
        "dataset": {
            "path": "out/session.spk",
            "synthetic": {"channels": 6, "timesteps": 800, "rate": 0.2, "mixing_density": 0.5},
            "split": {"subsessions": 2, "train": 0.5, "val": 0.25, "test": 0.25},
        },
        "network": {"hidden": [8, 8, 8]},
        "train": {"learning_rate": 0.01, "max_epochs": 2, "batch_length": 50},
        "prune": {"p_start": 20, "patience": 1, "pruned_max": 0.5},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return snnprune.ExperimentConfig.load(str(path))


def test_pipeline_round_trip(tmp_path):
    cfg = tiny_config(tmp_path)
    assert len(cfg.digest()) == 64
    synth = snnprune.synth(cfg)
    assert 0.0 < synth["spike_rate"] < 1.0
    pre = snnprune.pretrain(cfg)
    assert pre["epochs"] == 2
    result = snnprune.prune(cfg, mode="fixed")
    assert 0.0 < result["final_pruned"] <= 0.5
    pruned = snnprune.Network.load(str(result["checkpoint_path"]))
    assert pruned.pruned_fraction == pytest.approx(result["final_pruned"])
    record = snnprune.evaluate(cfg, result["checkpoint_path"])
    assert "r2" in json.dumps(record)


def test_bad_config_raises(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": 1, "train": {"max_epochs": -1}}')
    with pytest.raises(snnprune.ConfigError):
        snnprune.ExperimentConfig.load(str(path))
