import math

import pytest

import vsop_rl


def test_presets():
    names = vsop_rl.preset_names()
    assert "vsop-classic" in names
    assert vsop_rl.preset("vsop-mujoco").get("dropout") == "0.02"
    assert vsop_rl.preset("a3c-classic").get("gae_lambda") == "0.13"
    with pytest.raises(Exception):
        vsop_rl.preset("nope")


def test_config_round_trip():
    c = vsop_rl.preset("ppo-classic")
    text = c.serialize()
    assert vsop_rl.TrainConfig.parse(text).serialize() == text
    with pytest.raises(ValueError):
        vsop_rl.configure("ppo-classic", num_minibatches=7)


def test_gae_matches_hand_value():
    adv, ret = vsop_rl.gae([1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [False, True], [False, False], 2, 1, 0.5, 1.0)
    assert adv == pytest.approx([1.5, 1.0])
    assert ret == pytest.approx([1.5, 1.0])


def test_tabular_theorem():
    # two states, two actions, deterministic self loops
    P = [1, 0, 0, 1, 0, 1, 1, 0]
    R = [1.0, 0.0, 0.5, 0.2]
    report = vsop_rl.check_theorem(2, 2, P, R, 0.9, [0.0, 0.3, -0.2, 0.1])
    assert report["holds"]
    v = vsop_rl.policy_values(2, 2, P, R, 0.9, [0.0, 0.0, 0.0, 0.0])
    assert all(math.isfinite(x) for x in v)


def test_env_steps():
    env = vsop_rl.Env("CartPole-v1", seed=1)
    obs = env.reset()
    assert len(obs) == env.obs_dim == 4
    obs, reward, terminated, truncated = env.step([1.0])
    assert reward == 1.0


def test_verify_gae():
    (result,) = vsop_rl.verify("gae")
    assert result["passed"]
    assert result["worst"] < 1e-12


def test_train_tiny(tmp_path):
    c = vsop_rl.configure(
        "vsop-cartpole",
        num_envs=2,
        num_steps=8,
        num_minibatches=2,
        update_epochs=1,
        hidden_width=8,
        total_timesteps=64,
        eval_interval=2,
        eval_episodes=2,
    )
    out = vsop_rl.train(c, str(tmp_path))
    assert out["global_step"] == 64
    steps = [r["global_step"] for r in out["rows"]]
    assert steps == sorted(steps) and len(steps) == 4
    assert (tmp_path / "metrics.csv").exists()
    blocks = vsop_rl.read_checkpoint(str(tmp_path / "checkpoint.bin"))
    assert len(blocks) > 0
