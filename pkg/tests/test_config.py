import pytest

from tbdphd.config import (PRESETS, ConfigError, build_config, load_config, preset, snr_amplitude,
                           with_overrides)


def test_corrected_preset():
    cfg = preset("table1_corrected")
    assert len(cfg.scenario) == 8
    assert all(t.birth_weight == 0.08 for t in cfg.scenario)
    assert cfg.scenario[3].state == (90.0, -1.4, 100.0, -0.4)
    assert cfg.scan_count == 49 and cfg.replications == 25


def test_verbatim_preset_keeps_printed_row():
    assert preset("table1_verbatim").scenario[3].state == (90.0, 100.0, -1.4, -0.4)


def test_defaults_follow_experiment_settings():
    cfg = preset("table1_corrected")
    f = cfg.filter
    assert (f.p_s, f.particles_per_component, f.prune_threshold, f.merge_threshold,
            f.birth_threshold, f.birth_weight) == (0.99, 250, 4e-3, 4.0, 6.4, 0.08)
    assert (cfg.motion.tau, cfg.motion.q) == (1.0, 8.1e-3)
    assert cfg.grid_spec().shape == (80, 60)
    assert (cfg.ospa.c, cfg.ospa.p) == (8.0, 2.0)


def test_all_presets_validate():
    for name in PRESETS:
        preset(name).targets()


def test_missing_sigma_n_names_field():
    with pytest.raises(ConfigError, match=r"amplitude\.sigma_n"):
        build_config({"amplitude": {"sigma_s": 6.0}, "scenario": []})


def test_out_of_range_ps():
    with pytest.raises(ConfigError, match=r"filter\.p_s"):
        preset("table1_corrected", filter={"p_s": 1.5})


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        preset("table1_corrected", filter={"colour": "red"})


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("nope")


def test_yaml_with_preset_key(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("preset: table1_corrected\nreplications: 3\namplitude:\n  sigma_s: 12.0\n")
    cfg = load_config(path)
    assert cfg.replications == 3
    assert cfg.amplitude.sigma_s == 12.0 and cfg.amplitude.sigma_n == 1.5


def test_yaml_must_be_mapping(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_bad_grid_reported():
    with pytest.raises(ConfigError, match="grid"):
        preset("table1_corrected", grid={"range_res": 3.0})


def test_overrides_revalidate():
    cfg = with_overrides(preset("static_target"), master_seed=7)
    assert cfg.master_seed == 7
    with pytest.raises(ConfigError):
        with_overrides(cfg, replications=0)


def test_snr_mapping():
    assert snr_amplitude(12) == {"sigma_n": 1.5, "sigma_s": 6.0}
    assert snr_amplitude(18) == {"sigma_n": 1.5, "sigma_s": 12.0}
    assert snr_amplitude(30)["sigma_s"] == pytest.approx(47.434, abs=1e-3)
