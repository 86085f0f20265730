import math

import numpy as np
import pytest

import snodep

FAST = '{"train": {"steps": 5, "batch_size": 4}, "eval": {"num_contexts": 2}, "solver": {"steps_per_unit": 1}, "model": {"r_dim": 8, "z_dim": 4, "d_dim": 4, "hidden": 8}}'


def test_closed_forms():
    assert snodep.normal_kl(0.0, 1.0, 0.0, 1.0) == 0.0
    assert snodep.normal_kl(1.0, 1.0, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert snodep.poisson_log_prob(0, 1.0) == pytest.approx(-1.0, abs=1e-12)
    assert snodep.poisson_log_prob(2, 3.0) == pytest.approx(2 * math.log(3) - 3 - math.log(2), abs=1e-12)
    assert snodep.gaussian_mse(1.0, 3.0, 0.25) == 4.25
    assert snodep.poisson_mse(2.0, 2.0) == 2.0


def test_synthetic_dataset(tmp_path):
    data, mean, sd = snodep.generate_synthetic(cells=30, seed=3)
    assert len(data) == 16
    assert data.kind == "expression"
    x = data.samples(0)
    assert x.shape == (30, 4)
    assert np.all(x >= 0) and np.all(x == np.floor(x))
    assert len(mean) == 16 and len(mean[0]) == 4
    path = tmp_path / "d.csv"
    data.write_csv(path)
    back = snodep.Dataset.read_csv(path)
    assert np.array_equal(back.samples(5), data.samples(5))


def test_train_and_evaluate():
    data, _, _ = snodep.generate_synthetic(cells=20, seed=1)
    train, test = data.split(0.2, 4)
    model = snodep.Model(train, FAST, seed=2)
    assert model.kind == "snodep"
    losses = model.train(train)
    assert len(losses) == 5 and all(math.isfinite(v) for v in losses)
    report = model.evaluate(test)
    assert report["unseen_from"] == 13
    assert len(report["mse"]) == 16
    assert math.isfinite(report["unseen_mse"])
    means = model.predict_means(test)
    assert np.asarray(means).shape == (16, 4)
    base = snodep.constant_mean_mse(train, test)
    assert base["unseen_mse"] > 0


def test_errors():
    data, _, _ = snodep.generate_synthetic(cells=4, seed=1)
    with pytest.raises(snodep.ValidationError):
        snodep.Model(data, '{"model": {"depth": 2}}')
    with pytest.raises(ValueError):
        snodep.Dataset([0.0, 0.0], [np.ones((2, 1)), np.ones((2, 1))], ["a"])


def test_pathway_and_flux():
    p = snodep.Pathway.chain(3, 1)
    assert p.hop2_neighbors() == [[1], [0]]
    rng = np.random.default_rng(0)
    steps = [rng.integers(1, 4, size=(10, 1)).repeat(3, axis=1).astype(float) for _ in range(2)]
    ds = snodep.Dataset([0.0, 1.0], steps, p.genes, kind="expression")
    flux, balance, first, last = snodep.estimate_flux(ds, p, steps=300)
    assert flux.samples(0).shape == (10, 3)
    assert balance.samples(1).shape == (10, 2)
    assert np.all(flux.samples(0) > 0)
    assert all(b < a for a, b in zip(first, last))
