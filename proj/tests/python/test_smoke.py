import math

import numpy as np
import pytest

import egpi


def test_envelopes():
    assert egpi.Envelope.linear(1.0, 0.0).eval(3.5) == 3.5
    env = egpi.Envelope.tanh(8.0, 0.2, -0.5, 0.0)
    assert env(2.5) == pytest.approx(0.0, abs=1e-15)
    assert env.inverse(0.0) == pytest.approx(2.5, rel=1e-10)
    with pytest.raises(egpi.ConfigError):
        egpi.Envelope.linear(0.0, 1.0)
    with pytest.raises(egpi.RangeError):
        env.inverse(9.0)
    assert egpi.lipschitz_check(egpi.Envelope.linear(3.0, 7.0), -1.0, 1.0, 11) == pytest.approx(3.0)


def test_density():
    d = egpi.DensitySpec()
    r = egpi.thresholds(d)
    assert len(r) == 31 and r[0] == 0.0 and r[-1] == pytest.approx(7.25)
    assert egpi.weights(d)[0] == 0.07
    with pytest.raises(egpi.ConfigError):
        egpi.DensitySpec(r1=3.0, rn=1.0, n=3)


def test_single_operator_is_running_extremum():
    model = egpi.GpiModel([0.0], [1.0], egpi.Envelope.identity(), egpi.Envelope.identity())
    v = [0.0, 2.0, 1.0, -1.0, 3.0]
    y = egpi.gpi_eval(model, list(range(len(v))), v)
    assert list(y) == v


def test_reference_simulation():
    tr = egpi.decaying_sinusoid()
    assert len(tr) == 10001
    out = egpi.egpi_eval(egpi.reference_model(), tr.t, tr.v)
    assert set(np.unique(out["active"])) == {1, 2}
    pick = np.where(out["active"] == 1, out["z1"], out["z2"])
    assert np.array_equal(pick, out["z"])


def test_synthetic_and_metrics():
    tr = egpi.rise_fall_sweep(0.0, 10.0, 400)
    model = egpi.build_model(egpi.FitParams(), egpi.FitMode.EgpiDescendFlag, 4.0)
    clean = egpi.gen_synthetic(model, tr, 0.0, 1)
    noisy = egpi.gen_synthetic(model, tr, 0.1, 1)
    again = egpi.gen_synthetic(model, tr, 0.1, 1)
    assert np.array_equal(noisy.theta, again.theta)
    m = egpi.compute_metrics(clean.theta, clean.theta)
    assert m.rmse == 0.0 and m.mae == 0.0 and m.nrmse == 0.0
    m = egpi.compute_metrics([0.0, 10.0], [1.0, 10.0])
    assert m.rmse == pytest.approx(math.sqrt(0.5))
    assert m.nrmse == pytest.approx(7.0710678)
    assert m.mae == 1.0


def test_fit_round_trip(tmp_path):
    truth = egpi.FitParams()
    truth.a1, truth.a2, truth.a3, truth.a4 = 2.0, 0.0, 2.5, -2.0
    truth.a5, truth.a6, truth.kappa = 1.2, 4.0, 2.0
    truth.lambda_, truth.sigma, truth.r1, truth.rn = 0.05, 0.2, 0.2, 3.0
    mode = egpi.FitMode.EgpiDescendFlag
    model = egpi.build_model(truth, mode, 4.0)
    data = egpi.gen_synthetic(model, egpi.rise_fall_sweep(0.0, 10.0, 600), 0.0, 3)

    cfg = egpi.FitConfig()
    cfg.flag_point = 4.0
    cfg.initial = truth
    res = egpi.lm_fit(data, cfg, mode)
    assert res.loss < 1e-12
    assert res.params == truth

    cfg.initial = None
    cfg.max_iterations = 50
    res = egpi.lm_fit(data, cfg, mode)
    assert all(b <= a for a, b in zip(res.loss_trace, res.loss_trace[1:]))
    assert res.metrics.rmse < 0.5

    path = tmp_path / "model.json"
    egpi.save_model(path, res.model(), "smoke")
    back = egpi.load_model(path)
    assert egpi.model_to_json(back) == egpi.model_to_json(res.model())

    csv = tmp_path / "data.csv"
    egpi.save_dataset(csv, data)
    loaded = egpi.load_dataset(csv)
    assert np.array_equal(loaded.theta, data.theta)


def test_flag_detection():
    v = list(range(11)) + list(range(9, -1, -1))
    tr = egpi.Trajectory([float(i) for i in range(len(v))], [float(x) for x in v])
    assert egpi.detect_flag_point(tr, 0.1) == 10.0
    ramp = egpi.Trajectory([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
    with pytest.raises(egpi.DetectionError):
        egpi.detect_flag_point(ramp, 1e-6)


def test_bad_trajectory():
    with pytest.raises(egpi.InputError):
        egpi.Trajectory([0.0, 0.0], [1.0, 2.0])
