import numpy as np
import pytest
from scipy import stats

from tbdphd.amplitude import AmplitudeParams
from tbdphd.config import preset
from tbdphd.grid import flat_pixel_indices
from tbdphd.scenario import (EchoFrame, FrameDiagnostics, MotionModel, ScenarioTarget,
                             generate_trajectories, simulate, synthesize_frame, truth_at)

# (t_b, t_l) per reference target, in order
LIFETIMES = [(1, 40), (8, 33), (8, 38), (16, 17), (16, 17), (24, 17), (24, 9), (16, 25)]


def test_deterministic_step_without_noise(rng):
    m = MotionModel(1.0, 0.0)
    out = m.propagate(np.array([0.0, 1.0, 0.0, 2.0]), rng)
    assert np.array_equal(out[0], [1.0, 1.0, 2.0, 2.0])


def test_two_steps_equal_f_squared(rng):
    m = MotionModel(1.0, 0.0)
    x = np.array([3.0, -1.0, 7.0, 0.5])
    twice = m.propagate(m.propagate(x, rng), rng)[0]
    assert np.allclose(twice, np.linalg.matrix_power(m.F, 2) @ x, atol=1e-12)


def test_process_noise_covariance(rng):
    m = MotionModel(1.0, 8.1e-3)
    x = np.tile([10.0, 1.0, 20.0, -1.0], (100_000, 1))
    resid = m.propagate(x, rng) - x @ m.F.T
    emp = np.cov(resid.T)
    mask = m.Q != 0
    assert np.all(np.abs(emp[mask] / m.Q[mask] - 1) < 0.05)
    assert np.all(np.abs(emp[~mask]) < 0.05 * np.abs(m.Q).max())


def test_noise_factor_reproduces_q():
    m = MotionModel(2.0, 0.3)
    assert np.allclose(m.noise_factor @ m.noise_factor.T, m.Q)


def test_motion_model_rejects_bad_params():
    with pytest.raises(ValueError):
        MotionModel(0.0, 1.0)
    with pytest.raises(ValueError):
        MotionModel(1.0, -1.0)


@pytest.fixture
def scenario():
    return preset("table1_corrected").targets()


def test_alive_intervals_match_table(scenario):
    for k in range(1, 50):
        for t, (tb, tl) in zip(scenario, LIFETIMES):
            assert t.alive(k) == (tb <= k < tb + tl)


def test_truth_at_examples(scenario, rng):
    traj = generate_trajectories(scenario, MotionModel(), 49, rng)
    m = MotionModel()
    assert set(truth_at(scenario, m, 1, trajectories=traj)) == {1}
    assert set(truth_at(scenario, m, 20, trajectories=traj)) == {1, 2, 3, 4, 5, 8}
    assert truth_at(scenario, m, 50, trajectories=traj) == {}


def test_truth_is_cached_not_resampled(scenario, rng):
    traj = generate_trajectories(scenario, MotionModel(), 49, rng)
    a = truth_at(scenario, MotionModel(), 30, trajectories=traj)
    b = truth_at(scenario, MotionModel(), 30, trajectories=traj)
    assert all(np.array_equal(a[i], b[i]) for i in a)


def test_initial_states_are_table_values(scenario, rng):
    traj = generate_trajectories(scenario, MotionModel(), 49, rng)
    assert np.array_equal(traj.at(1)[1], [-135.0, 0.9, 10.0, 0.4])
    assert np.array_equal(traj.at(24)[6], [0.0, -0.6, 180.0, -1.2])


def test_noise_only_frame_moment(grid, params12, rng):
    fr = synthesize_frame([], grid, params12, rng)
    assert fr.amplitudes.shape == (4800,)
    assert np.mean(fr.amplitudes ** 2) == pytest.approx(4.5, rel=0.05)


def test_target_pixel_moment(grid, params12):
    state = [0.0, 0.0, 101.0, 0.0]
    k = flat_pixel_indices([[0.0, 101.0]], grid)[0]
    r = np.random.default_rng(7)
    a2 = [synthesize_frame([state], grid, params12, r).amplitudes[k] ** 2 for _ in range(10_000)]
    assert np.mean(a2) == pytest.approx(76.5, rel=0.05)


def test_amplitudes_positive(grid, params12, rng):
    for _ in range(5):
        assert np.all(synthesize_frame([[0, 0, 50, 0]], grid, params12, rng).amplitudes > 0)


def test_noise_pixels_pass_ks(grid, params12):
    r = np.random.default_rng(99)
    a = np.concatenate([synthesize_frame([], grid, params12, r).amplitudes for _ in range(21)])[:100_000]
    assert stats.kstest(a, stats.rayleigh(scale=1.5).cdf).pvalue > 0.01


def test_shared_pixel_is_logged_once(grid, params12, rng):
    diag = FrameDiagnostics()
    fr = synthesize_frame([[1.0, 0, 101.0, 0], [1.1, 0, 101.1, 0]], grid, params12, rng, 3, diag)
    assert diag.p4_violations == 1
    assert fr.scan_index == 3


def test_simulation_is_deterministic(grid, scenario):
    p = AmplitudeParams(1.5, 6.0)

    def go():
        r = np.random.default_rng(5)
        return simulate(scenario, MotionModel(), grid, p, 49, r, np.random.default_rng(6))

    t1, f1, _ = go()
    t2, f2, _ = go()
    assert all(np.array_equal(a.amplitudes, b.amplitudes) for a, b in zip(f1, f2))
    assert all(np.array_equal(t1.at(k)[i], t2.at(k)[i]) for k in t1.states for i in t1.at(k))


def test_echo_frame_validation():
    with pytest.raises(ValueError):
        EchoFrame(0, [1.0, 0.0])
    with pytest.raises(ValueError):
        EchoFrame(0, np.ones((2, 2)))


def test_scenario_target_validation():
    with pytest.raises(ValueError):
        ScenarioTarget((0, 0, 0, 0), 0, 5)
