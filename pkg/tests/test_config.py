import pytest

from config import AppConfig, RunConfig, get_run_config
from exceptions import ConfigError


def write_conf(tmp_path, text):
    path = tmp_path / "run.conf"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults(monkeypatch):
    monkeypatch.delenv(AppConfig.CONFIG_ENV_VAR, raising=False)
    config = RunConfig.load()
    assert config.train.episodes == 60
    assert config.train.minibatch == 32
    assert config.reward.mu == 0.4226
    assert config.run.seed is None
    assert config.eval.ttc_thresholds[0] == 1.0 and len(config.eval.ttc_thresholds) == 20


def test_file_values_are_typed(tmp_path):
    path = write_conf(tmp_path, "\n".join([
        "# 주석",
        "run.seed = 11",
        "train.gamma = 0.95",
        "extract.exclusive_vehicles = true",
        "columns.delimiter = \\t",
        "eval.ttc_thresholds = 2,4,8",
        "reward.headway_fit = none",
    ]))
    config = RunConfig.load(path)
    assert config.run.seed == 11
    assert config.train.gamma == 0.95
    assert config.extract.exclusive_vehicles is True
    assert config.columns.delimiter == "\t"
    assert config.eval.ttc_thresholds == (2.0, 4.0, 8.0)
    assert config.reward.headway_fit is None


def test_overrides_win_over_file(tmp_path):
    path = write_conf(tmp_path, "train.episodes = 10\nrun.seed = 1\n")
    config = RunConfig.load(path, {"train.episodes": "3"})
    assert config.train.episodes == 3
    assert config.run.seed == 1


def test_env_var_names_default_file(tmp_path, monkeypatch):
    path = write_conf(tmp_path, "train.hidden_dim = 12\n")
    monkeypatch.setenv(AppConfig.CONFIG_ENV_VAR, str(path))
    assert get_run_config().train.hidden_dim == 12


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.conf"
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.load(missing)
    assert str(missing) in str(excinfo.value)


@pytest.mark.parametrize("key", ["train.unknown", "bogus.seed", "noseparator"])
def test_unknown_keys_rejected(key):
    with pytest.raises(ConfigError):
        RunConfig.load(overrides={key: "1"})


@pytest.mark.parametrize("key, raw", [("train.episodes", "many"), ("extract.exclusive_vehicles", "maybe")])
def test_bad_values_rejected(key, raw):
    with pytest.raises(ConfigError):
        RunConfig.load(overrides={key: raw})


@pytest.mark.parametrize("key, raw", [
    ("train.gamma", "1.5"),
    ("train.minibatch", "0"),
    ("train.minibatch", "9000"),
    ("train.episodes", "-1"),
    ("train.tau", "0"),
    ("train.train_fraction", "1.0"),
])
def test_out_of_range_training_values(key, raw):
    with pytest.raises(ConfigError):
        RunConfig.load(overrides={key: raw})


@pytest.mark.parametrize("key, raw", [
    ("reward.sigma", "0"),
    ("reward.sigma", "-0.4"),
    ("reward.w_ttc", "-1"),
    ("reward.w_jerk", "nan"),
    ("reward.ttc_floor", "0"),
    ("reward.jerk_base", "-3600"),
    ("reward.mu", "inf"),
])
def test_out_of_range_reward_values(key, raw):
    with pytest.raises(ConfigError, match=key):
        RunConfig.load(overrides={key: raw})


def test_zero_reward_weight_is_allowed():
    assert RunConfig.load(overrides={"reward.w_headway": "0"}).reward.w_headway == 0.0


def test_require_seed():
    with pytest.raises(ConfigError):
        RunConfig().require_seed()
    assert RunConfig.load(overrides={"run.seed": "4"}).require_seed() == 4


def test_require_path(tmp_path):
    config = RunConfig()
    with pytest.raises(ConfigError):
        config.require_path("data.trajectories", None)
    with pytest.raises(ConfigError):
        config.require_path("data.trajectories", str(tmp_path / "missing.csv"))
    assert config.require_path("run.out_dir", str(tmp_path)) == tmp_path


def test_digest_tracks_resolved_values():
    base = RunConfig()
    assert base.digest() == RunConfig().digest()
    assert base.digest() != RunConfig.load(overrides={"train.tau": "0.002"}).digest()
    assert len(base.digest()) == 64


def test_key_values_cover_every_section():
    keys = [key for key, _ in RunConfig().to_key_values()]
    assert {key.split(".")[0] for key in keys} == set(AppConfig.SECTION_NAMES)
    assert ("eval.ttc_thresholds" in keys) and ("train.episodes" in keys)
