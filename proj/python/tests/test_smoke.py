
import numpy as np
import pytest

import gsp

SMALL = {"n_chains": 9, "n_iterations": 4, "participants_per_iteration": 3, "n_random": 2, "rating_target": 1}
QUIET = {"render": False, "validation": {"raters": 10}}


def test_default_config_round_trips():
    config = gsp.default_config()
    assert config["dimensions"] == 10
    assert config["grid"]["n"] == 32
    assert gsp.normalize_config(config) == config


def test_config_errors_carry_issues():
    with pytest.raises(gsp.GspError) as info:
        gsp.normalize_config({"participants_per_iteration": 4})
    code, _, details = info.value.args
    assert code == "config"
    assert details["issues"]


def test_render_is_deterministic_and_bounded():
    samples, rate = gsp.render([0.0] * 10)
    again, _ = gsp.render([0.0] * 10)
    assert rate > 0
    assert isinstance(samples, np.ndarray)
    assert samples.size > rate // 2
    assert np.array_equal(samples, again)
    assert np.max(np.abs(samples)) < 1.0
    with pytest.raises(gsp.GspError):
        gsp.render([0.0, 0.0])


def test_features_of_a_pulse_train():
    rate = 16000
    samples = np.zeros(rate)
    samples[:: rate // 200] = 0.5
    features = gsp.extract_features(samples, rate)
    assert features["f0_mean"] == pytest.approx(200.0, abs=2.0)
    # |(12-10)-(10-12)| / mean(10,12,10) ms
    assert gsp.jitter_ddp([0.010, 0.012, 0.010]) == pytest.approx(4.0 / (32.0 / 3.0), abs=1e-12)
    assert gsp.jitter_ddp([0.01]) is None


def test_simulate_replay_analyze():
    log, summary = gsp.simulate(SMALL, QUIET)
    assert summary["full_chains"] == 9
    again, _ = gsp.simulate(SMALL, QUIET)
    assert log == again
    state = gsp.replay(log)
    assert len(state["chains"]) == 9
    report = gsp.analyze(log)
    for key in ("contrast", "pca", "features", "classification"):
        assert key in report


def test_corrupt_log_reports_the_sequence():
    log, _ = gsp.simulate(SMALL, QUIET)
    lines = log.splitlines(keepends=True)
    lines.insert(1, "garbage\n")
    with pytest.raises(gsp.GspError) as info:
        gsp.replay("".join(lines))
    code, _, details = info.value.args
    assert code == "corrupt-log"
    assert details["seq"] == 2
