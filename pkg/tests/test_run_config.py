import json

import pytest

from run_config_loader import RunConfig, RunConfigLoader, expand_values, validate
from simulation_errors import ConfigValidationError


def ent_sweep_config(**changes):
    config = {
        "command": "ent-sweep",
        "channel": {"model": "lognormal", "mu_dB": 3.0, "sigma_dB": 1.0},
        "diversity": {"M": [1, 2, 3, 4]},
        "source": {"Vs": [3, 5, 7, 9]},
        "sampling": {"n_realizations": 500, "seed": 7},
    }
    config.update(changes)
    return config


def test_valid_config_has_no_violations():
    assert validate(ent_sweep_config()) == []


def test_zero_diversity_rejected():
    violations = validate(ent_sweep_config(diversity={"M": [0, 2]}))
    assert any("diversity.M must be ≥ 1" in v for v in violations)


def test_sub_vacuum_source_rejected():
    violations = validate(ent_sweep_config(source={"Vs": 0.5}))
    assert violations == ["source.Vs values must be ≥ 1, got [0.5]."]


def test_negative_fading_rejected():
    violations = validate(ent_sweep_config(channel={"model": "lognormal", "mu_dB": 3.0, "sigma_dB": -1}))
    assert any("sigma_dB" in v for v in violations)


def test_every_violation_is_reported():
    config = ent_sweep_config(diversity={"M": 0}, source={"Vs": 0.5}, extra=True)
    config["sampling"]["seed"] = -3
    violations = validate(config)
    assert len(violations) == 4
    assert violations[0] == "Unknown top-level keys: ['extra']."


def test_non_object_config():
    assert validate([1, 2]) == ["The run configuration must be a JSON object."]


@pytest.mark.parametrize("section,value", [
    ("channel", {"model": "rayleigh"}),
    ("channel", {"model": "lognormal", "mu_dB": 3.0, "sigma_dB": 1.0, "T": 0.5}),
    ("channel", {"model": "phasescreen", "n_grid": 1000}),
    ("channel", {"model": "deterministic", "T": 1.5}),
    ("diversity", {"M": [1], "layout": "star"}),
    ("sampling", {"n_realizations": 0}),
    ("sampling", {"method": "exact"}),
    ("source", {"Vs": {"start": 1, "stop": 5}}),
    ("output", {"path": ""}),
])
def test_invalid_sections(section, value):
    assert validate(ent_sweep_config(**{section: value}))


def test_phase_screen_needs_phasescreen_model():
    violations = validate(ent_sweep_config(command="phase-screen"))
    assert "The phase-screen command needs channel.model = 'phasescreen'." in violations


def test_fidelity_sources():
    base = {"command": "fid-sweep", "channel": {"model": "deterministic", "T": 0.5}}
    assert validate({**base, "source": {"scheme": "bpsk", "alpha": [1, 2]}}) == []
    assert validate({**base, "source": {"scheme": "gaussian", "V_mod": {"start": 2, "stop": 10, "num": 5}}}) == []
    assert validate({**base, "source": {"scheme": "bpsk"}}) == ["source.alpha is required for the bpsk scheme."]
    assert validate({**base, "source": {"scheme": "gaussian", "V_mod": 2, "target_scaling": "x"}})


def test_channel_list_for_stats():
    config = {"command": "channel-stats",
              "channel": [{"model": "lognormal", "mu_dB": 3.0, "sigma_dB": 1.0}, {"model": "deterministic", "T": 0.2}]}
    assert validate(config) == []
    assert validate({**config, "channel": []}) == ["channel list must not be empty."]


def test_expand_values():
    assert expand_values(3) == [3.0]
    assert expand_values([1, 2.5]) == [1.0, 2.5]
    assert expand_values({"start": 1, "stop": 3, "num": 3}) == [1.0, 2.0, 3.0]


def test_resolve_fills_defaults():
    config = RunConfig.resolve({"command": "ent-sweep", "channel": {"model": "lognormal", "mu_dB": 3, "sigma_dB": 1},
                                "source": {"Vs": 3}})
    assert config.M_values == [1]
    assert config.diversity["layout"] == "auto"
    assert config.sampling == {"n_realizations": 3000, "n_alpha": 200, "seed": 0, "method": "analytic"}
    assert config.channel[0]["eps_A"] == 0.03
    assert config.output == {"path": "results/ent-sweep.csv", "diagnostics_path": "results/ent-sweep.diagnostics.json"}
    assert config.values("Vs") == [3.0]


def test_phase_screen_defaults():
    config = RunConfig.resolve({"command": "phase-screen", "channel": {"model": "phasescreen"}})
    assert config.sampling["n_realizations"] == 1000
    assert config.channel[0]["n_grid"] == 1024
    assert config.channel[0]["turbulence"] is True


def test_fidelity_defaults():
    config = RunConfig.resolve({"command": "fid-sweep", "channel": {"model": "deterministic", "T": 0.5},
                                "source": {"scheme": "bpsk", "alpha": 1}})
    assert config.source["target_scaling"] == "printed"
    assert config.source["P0"] == 0.5


def test_config_echo_reparses():
    config = RunConfig.resolve(ent_sweep_config())
    echo = config.to_json()
    assert "\n" not in echo and " " not in echo
    assert RunConfig.from_json(echo) == config


def test_overrides_do_not_touch_the_original():
    original = ent_sweep_config()
    changed = RunConfigLoader.apply_overrides(original, command="fid-sweep", seed=99, out="x.csv")
    assert changed["command"] == "fid-sweep"
    assert changed["sampling"]["seed"] == 99
    assert changed["output"]["path"] == "x.csv"
    assert original["sampling"]["seed"] == 7
    assert "output" not in original


def test_overrides_leave_malformed_sections_to_validation():
    config = ent_sweep_config(sampling=[], output="out.csv")
    changed = RunConfigLoader.apply_overrides(config, seed=3, out="x.csv")
    assert changed["sampling"] == [] and changed["output"] == "out.csv"
    violations = validate(changed)
    assert "sampling must be an object." in violations
    assert "output must be an object." in violations


def test_loader_round_trip(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(ent_sweep_config()), encoding="utf-8")
    config = RunConfigLoader(verbose=False).load(path, seed=11)
    assert config.seed == 11
    assert config.command == "ent-sweep"


def test_loader_collects_violations(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(ent_sweep_config(diversity={"M": 0})), encoding="utf-8")
    with pytest.raises(ConfigValidationError) as excinfo:
        RunConfigLoader(verbose=False).load(path)
    assert excinfo.value.violations == ["diversity.M must be ≥ 1, got 0."]


def test_loader_rejects_malformed_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        RunConfigLoader(verbose=False).read(path)


def test_loader_missing_file(tmp_path):
    with pytest.raises(OSError):
        RunConfigLoader(verbose=False).load(tmp_path / "absent.json")
