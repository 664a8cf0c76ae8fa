import json

import numpy as np
import pytest

from qeclab import attacks, config, simulate
from qeclab.errors import ConfigError, RangeError


def test_bundled_configs_load():
    names = config.bundled_names()
    assert "robotarm.json" in names
    for name in names:
        cfg = config.load(name)
        assert cfg.n == 3


def test_literal_arm_values():
    cfg = config.load("robotarm")
    np.testing.assert_array_equal(cfg.plant.A, [[1, 0.1, 0], [0, 1.1, 0.1], [0, -0.2, 0.8]])
    np.testing.assert_array_equal(cfg.plant.B.ravel(), [0.001, 0.02, 0.2])
    np.testing.assert_array_equal(cfg.plant.K.ravel(), [-63, -25, 0.78])


def _base():
    return {"plant": {"A": [[0.5]], "B": [1.0], "K": [-0.2]}}


@pytest.mark.parametrize("patch, match", [
    ({"plant": {"A": [[1, 0]], "B": [1], "K": [1]}}, "square"),
    ({"plant": {"A": [[0.5]], "B": [1, 2], "K": [1]}}, "B needs"),
    ({"w_b": 0}, "1 <= w_b"),
    ({"channel": {"p": 1.5}}, "0 <= channel.p <= 1"),
    ({"channel": {"amplitudes": [1, 1, 0, 0]}}, "norm"),
    ({"seed": -1}, "seed"),
    ({"horizon": 0}, "1 <= horizon"),
    ({"extra": 1}, "unknown keys"),
    ({"realization": "fast"}, "realization"),
    ({"realization": "quantized"}, "quantized"),
    ({"realization": "quantized", "x0": [2.0], "quantized": {"w": 8, "alpha": 0.5, "xbar": 1.0}}, r"\|x0_0\| < xbar_0"),
    ({"quantized": {"w": 1, "alpha": 0.5, "xbar": 1.0}}, "2 <= quantized.w"),
    ({"divergence_limit": -1}, "divergence_limit"),
])
def test_config_errors_name_the_inequality(patch, match):
    d = _base()
    d.update(patch)
    with pytest.raises(ConfigError, match=match):
        config.from_dict(d)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        config.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        config.load(bad)


def test_load_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(dict(_base(), name="tiny", channel={"amplitudes": [0.5, 0.5, 0.5, 0.5]})))
    cfg = config.load(path)
    assert cfg.name == "tiny" and cfg.p == pytest.approx(0.5)
    assert cfg.with_channel(0.1).p == pytest.approx(0.1) and cfg.p == pytest.approx(0.5)


def test_perfect_keys_match_plain_rollout():
    cfg = config.load("robotarm_stabilized").with_overrides(horizon=40, trials=2)
    rep = simulate.simulate_closed_loop(cfg, record_states=True)
    ref = attacks.plain_rollout(cfg.plant, cfg.x0, 40)
    assert np.max(np.abs(rep.states - ref[None])) < 1e-9
    assert np.nanmax(rep.mse) < 1e-18
    assert rep.converged and not rep.diverged


def test_high_flip_rate_diverges():
    cfg = config.load("robotarm_stabilized").with_channel(0.5).with_overrides(horizon=200, trials=5)
    rep = simulate.simulate_closed_loop(cfg)
    assert rep.diverged and rep.diverged_trials > 0


def test_literal_arm_diverges_with_perfect_keys():
    rep = simulate.simulate_closed_loop(config.load("robotarm").with_overrides(horizon=15, trials=2))
    assert rep.diverged or rep.slope > 0


def test_quantized_error_shrinks_with_w():
    base = config.load("robotarm_stabilized_quantized").with_overrides(horizon=30, trials=20)
    errs = []
    for w in (8, 10, 12):
        q = base.quantized
        scen = type(q)(w, q.w_b, q.alpha, q.xbar, q.K)
        errs.append(float(np.nanmean(simulate.simulate_closed_loop(base.with_overrides(quantized=scen)).mse)))
    assert errs[0] > errs[1] > errs[2]


def test_quantized_range_error_has_context():
    cfg = config.load("robotarm_quantized").with_overrides(horizon=50, trials=1)
    with pytest.raises(RangeError, match="trial 0, step"):
        simulate.simulate_closed_loop(cfg)


def test_wire_does_not_change_results():
    cfg = config.load("robotarm_stabilized_quantized").with_overrides(horizon=10, trials=3)
    a = simulate.simulate_closed_loop(cfg, wire=True)
    b = simulate.simulate_closed_loop(cfg, wire=False)
    assert a.to_csv() == b.to_csv()


def test_workers_do_not_change_results():
    cfg = config.load("robotarm_stabilized").with_channel(0.01).with_overrides(horizon=20, trials=6)
    assert simulate.simulate_closed_loop(cfg, workers=2).to_csv() == simulate.simulate_closed_loop(cfg).to_csv()


def test_csv_shape():
    cfg = config.load("robotarm_stabilized").with_overrides(horizon=5, trials=1)
    lines = simulate.simulate_closed_loop(cfg).to_csv().splitlines()
    assert lines[0] == ",".join(simulate.CSV_COLUMNS)
    assert len(lines) == 7 and lines[-1].split(",")[1] == ""
