import pytest

from arsm.config import ConfigError, GlobalConfig, load_config, parse_overrides, read_pairs


def test_defaults():
    cfg = GlobalConfig()
    assert cfg.loss_weights == (0.3, 0.3, 0.2, 0.2)
    assert cfg.mu == (0.4, 0.3, 0.3) and cfg.eta == (0.3, 0.4, 0.3)
    assert (cfg.k, cfg.m, cfg.lam) == (10, 5, 0.2)
    assert (cfg.tau_conf, cfg.tau_conf_star, cfg.tau_inj, cfg.tau_cons) == (0.7, 0.85, 0.5, 0.8)
    assert (cfg.adv_ratio, cfg.eps, cfg.batch_size, cfg.epochs) == (0.3, 0.01, 32, 100)


@pytest.mark.parametrize(
    "changes",
    [
        {"split_train": 0.8},
        {"mix_clean": 0.5},
        {"mu1": 0.5},
        {"adv_ratio": 1.5},
        {"alpha": -0.1},
        {"rounds": 0},
        {"d": 8},
        {"consistency_gate": "both"},
    ],
)
def test_invalid(changes):
    with pytest.raises(ConfigError):
        GlobalConfig(**changes)


def test_file_roundtrip(tmp_path):
    cfg = GlobalConfig(seed=7, lr=0.25, reweight_literal=True, consistency_gate="pairs")
    p = tmp_path / "c.cfg"
    p.write_text(cfg.dumps())
    assert load_config(p) == cfg


def test_comments_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("ARSM_SEED", raising=False)
    p = tmp_path / "c.cfg"
    p.write_text("# header\nepochs = 3  # short\n\nlr=0.1\n")
    assert read_pairs(p) == {"epochs": " 3", "lr": "0.1"}
    cfg = load_config(p, {"lr": "0.2"})
    assert (cfg.epochs, cfg.lr) == (3, 0.2)


def test_env_seed(monkeypatch):
    monkeypatch.setenv("ARSM_SEED", "9")
    assert load_config().seed == 9


def test_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        parse_overrides({"nope": "1"})
    with pytest.raises(ConfigError, match="expected int"):
        parse_overrides({"epochs": "many"})
    with pytest.raises(ConfigError, match="expected bool"):
        parse_overrides({"reweight_literal": "maybe"})
    p = tmp_path / "c.cfg"
    p.write_text("just words\n")
    with pytest.raises(ConfigError, match=":1:"):
        read_pairs(p)


def test_hash_tracks_values():
    assert GlobalConfig().config_hash() == GlobalConfig().config_hash()
    assert GlobalConfig().config_hash() != GlobalConfig(seed=1).config_hash()
