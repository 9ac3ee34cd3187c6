import csv
import io
import json
import math

import numpy as np
import pytest

from qgrad.errors import ConfigurationError
from qgrad.gradient import GradientJob
from qgrad.harness import (CSV_COLUMNS, ExperimentConfig, classical_gradient_sampling, jordan_original_job,
                           loglog_slope, mean_cost, records_to_csv, run_scaling_experiment,
                           semiclassical_gradient, semiclassical_step, write_csv)


def test_classical_sample_count():
    for d in (1, 3):
        res = classical_gradient_sampling(lambda p: 0.5, np.zeros(d), 0.05, 0.1, exact=True)
        assert res.queries == (d + 1) * math.ceil(4 / 0.05 ** 2)


def test_classical_constant_p():
    eps, delta = 0.05, 0.2
    errs = [np.abs(classical_gradient_sampling(lambda p: 0.3, [0.0, 0.0], eps, delta, s, exact=True).estimate).max()
            for s in range(50)]
    assert np.mean(np.array(errs) <= 2 * eps / delta) >= 0.9


def test_classical_linear_coverage():
    est = [classical_gradient_sampling(lambda p: float(p[0]), [0.5], 0.05, 0.1, s, exact=True).estimate[0]
           for s in range(100)]
    assert np.mean(np.abs(np.array(est) - 1) <= 1.0) >= 0.95


def test_classical_sampler_interface():
    sampler = lambda point, shots, rng: rng.binomial(shots, 0.5 + 0.1 * point[0])
    res = classical_gradient_sampling(sampler, [0.0], 0.01, 0.5, 1)
    assert abs(res.estimate[0] - 0.1) < 0.1


def test_semiclassical_noiseless_polynomial():
    coef = np.array([0.1, -0.7, 0.4, 1.3, -0.2, 0.05, 0.3])
    f = lambda pts: np.polynomial.polynomial.polyval(np.atleast_2d(pts)[:, 0], coef)
    res = semiclassical_gradient(f, [0.0], 0.01, m=3, delta=0.3, noise=False)
    assert abs(res.estimate[0] - coef[1]) < 1e-12


def test_semiclassical_accuracy_and_cost():
    f = lambda pts: np.sin(np.atleast_2d(pts).sum(axis=1))
    res = [semiclassical_gradient(f, [0.2, 0.2], 0.05, 3, s) for s in range(20)]
    assert all(np.abs(r.estimate - math.cos(0.4)).max() <= 0.05 for r in res)
    epses = [0.2, 0.1, 0.05, 0.025]
    costs = [semiclassical_gradient(f, [0.0, 0.0], e, 3, 0).queries for e in epses]
    assert 0.8 <= loglog_slope([1 / e for e in epses], costs) <= 1.3
    assert semiclassical_gradient(f, [0.0] * 4, 0.05, 3, 0).queries == 2 * costs[2]


def test_semiclassical_higher_order_cheaper():
    f = lambda pts: np.sin(np.atleast_2d(pts)[:, 0])
    lo, hi = semiclassical_gradient(f, [0.0], 0.01, 1, 0), semiclassical_gradient(f, [0.0], 0.01, 3, 0)
    assert semiclassical_step(3, 0.01) > semiclassical_step(1, 0.01)
    assert hi.queries < lo.queries


def test_jordan_original_model():
    job = jordan_original_job(2, 0.1, 1 / 3, 1.0, (0.0, 0.0))
    assert job.m == 1
    assert job.phase_scale == pytest.approx(2 * math.pi * math.sqrt(2) / 0.01)


@pytest.fixture(scope="module")
def sweep():
    cfg = ExperimentConfig(methods=["improved-smooth", "classical-sampling", "jordan-original"],
                           dims=[2], eps_values=[0.2, 0.1, 0.05, 0.025], trials=2)
    return run_scaling_experiment(cfg)


def test_eps_sweep_slopes(sweep):
    epses = [0.2, 0.1, 0.05, 0.025]
    inv = [1 / e for e in epses]
    smooth = [mean_cost(sweep, "improved-smooth", 2, e) for e in epses]
    classical = [mean_cost(sweep, "classical-sampling", 2, e) for e in epses]
    jordan = [mean_cost(sweep, "jordan-original", 2, e) for e in epses]
    assert 0.8 <= loglog_slope(inv, smooth) <= 1.3
    assert 1.8 <= loglog_slope(inv, classical) <= 2.2
    assert 1.8 <= loglog_slope(inv, jordan) <= 2.2


def test_records_match_ledger(sweep):
    for r in sweep:
        if r.method == "improved-smooth":
            job = GradientJob.smooth(2, r.eps, 1 / 3, 1.0)
            assert r.query_cost == job.planned_units and r.repetitions == job.repetitions
            assert r.err_inf is not None and r.status == "ok"


def test_dimension_sweep_per_repetition():
    cfg = ExperimentConfig(methods=["improved-smooth"], dims=[1, 2, 4], eps_values=[0.1], trials=1)
    recs = run_scaling_experiment(cfg)
    by_d = {r.d: r for r in recs}
    assert by_d[4].status.startswith("skipped")
    ratio = (by_d[4].query_cost / by_d[4].repetitions) / (by_d[1].query_cost / by_d[1].repetitions)
    assert 1.5 <= ratio <= 3.5


def test_csv_reproducible(tmp_path):
    cfg = ExperimentConfig(methods=["classical-sampling", "improved-smooth", "semi-classical"],
                           dims=[1], eps_values=[0.2], trials=2, seed=11)
    a, b = records_to_csv(run_scaling_experiment(cfg)), records_to_csv(run_scaling_experiment(cfg))
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 1 + 6
    write_csv(run_scaling_experiment(cfg), tmp_path / "x.csv")
    assert (tmp_path / "x.csv").read_text() == a


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(methods=["magic"])
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"trialz": 3})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"methods": ["semi-classical"], "dims": [1], "eps_values": [0.1]}))
    assert ExperimentConfig.load(path).methods == ["semi-classical"]
