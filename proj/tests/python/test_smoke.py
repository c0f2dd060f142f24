import numpy as np
import pytest

import sidebandit as sb


def test_deconfounder_shapes():
    m = sb.build_deconfounder(2, 5, np.ones((2, 3)))
    assert m.matrix.shape == (2, 5)
    assert m.kernel_basis.shape == (5, 3)
    np.testing.assert_allclose(m.matrix @ m.kernel_basis, 0.0, atol=1e-12)
    np.testing.assert_allclose(m.proj @ m.proj, m.proj, atol=1e-12)


def test_bad_rank_raises():
    with pytest.raises(ValueError):
        sb.build_deconfounder(5, 5, np.zeros((5, 0)))


def test_radius():
    p = sb.ConfidenceParams()
    p.sigma = 0.0
    p.lambda_ = 2.0
    p.S_wo = 0.5
    assert sb.beta_known(p, 10, 10, 3, 4) == pytest.approx(0.5)


def test_plain_run_is_reproducible():
    env = sb.make_environment(5, 3, 0.1, 7)
    assert env.W.shape == (3, 5)
    p = sb.ConfidenceParams()
    a = sb.run_plain_oful(env, p, 200, 1)
    b = sb.run_plain_oful(env, p, 200, 1)
    assert a.cum_regret == b.cum_regret
    assert len(a.actions) == 200
    assert np.all(np.diff(a.cum_regret) >= 0)


def test_presets_and_config_errors():
    assert set(sb.preset_names()) == {"fig2a", "fig2b", "fig2c", "custom"}
    assert sb.preset("fig2a")["L_values"] == [0, 10, 20, 25]
    assert sb.validate_config('{"d": 10, "L_values": [12]}') == ["L must be < d (got L=12, d=10)"]
    with pytest.raises(ValueError):
        sb.validate_config('{"nope": 1}')


def test_run_small_config():
    cfg = {"d": 6, "K": 3, "T": 50, "L_values": [0, 2], "N_offline": [3000],
           "seeds": [1], "oracle_samples": 20000, "mode": "known_R12", "threads": 1}
    rows = sb.run(cfg)
    assert len(rows) == 2 * 50
    assert rows[0].keys() >= {"preset", "mode", "L", "alpha", "seed", "t", "inst_regret", "cum_regret"}
    assert sb.run(cfg) == rows
