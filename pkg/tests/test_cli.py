import json
from pathlib import Path
from typing import Tuple

import numpy as np
import pytest
from PIL import Image

from hawkdove import ScenarioConfig, Strategy, rollout, scripted_strategy
from hawkdove.cli import main
from hawkdove.raster import AGENT_COLORS, CELL, MARGIN

from .strategies import assert_close


def run(argv: list, capsys: pytest.CaptureFixture) -> Tuple[int, str, str]:
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def straight_vs_avoid(path: Path) -> Path:
    config = ScenarioConfig.make("parallel", 9)
    policies = [
        scripted_strategy(Strategy.STRAIGHT, 0, config),
        scripted_strategy(Strategy.AVOID, 1, config),
    ]
    traj = rollout(config, policies)
    traj.write_csv(path)
    return path


@pytest.mark.cli
def test_payoff(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(["payoff", "--size", "9", "--out", str(tmp_path)], capsys)
    assert code == 0
    data = json.loads(out)
    assert_close(data["cells"]["straight,avoid"][0], 0.92)
    equilibria = sorted(data["nash"]["pure_equilibria"])
    assert equilibria == [["avoid", "straight"], ["straight", "avoid"]]
    assert json.loads((tmp_path / "payoff.json").read_text()) == data
    assert "*" in (tmp_path / "payoff.txt").read_text()
    assert Image.open(tmp_path / "payoff.png").size == (2 * 140 + 2 * MARGIN,) * 2
    rollouts = sorted(p.name for p in (tmp_path / "trajectories").iterdir())
    assert rollouts == [
        "avoid_avoid_1.csv",
        "avoid_straight_1.csv",
        "straight_avoid_1.csv",
        "straight_straight_1.csv",
    ]


@pytest.mark.cli
def test_missing_config(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    missing = tmp_path / "nowhere.cfg"
    code, out, err = run(["train", "--config", str(missing)], capsys)
    assert code == 2
    assert out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("hawkdove: error: ConfigError:")
    assert str(missing) in lines[0]


@pytest.mark.cli
@pytest.mark.parametrize(
    "argv",
    [
        ["fly"],
        [],
        ["train", "--set", "bogus=1"],
        ["train", "--set", "episodes"],
        ["payoff", "--size", "nine"],
        ["eval", "--out", "somewhere"],
    ],
)
def test_usage_errors(argv: list, capsys: pytest.CaptureFixture) -> None:
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err.startswith("hawkdove: error:")
    assert len(err.strip().splitlines()) == 1


@pytest.mark.cli
def test_help(capsys: pytest.CaptureFixture) -> None:
    code, out, _ = run(["--help"], capsys)
    assert code == 0
    assert "payoff" in out


@pytest.mark.cli
def test_plot_trajectory(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    source = straight_vs_avoid(tmp_path / "episode.csv")
    first, second = tmp_path / "first.png", tmp_path / "second.png"
    assert run(["plot", str(source), "--out", str(first)], capsys)[0] == 0
    assert run(["plot", str(source), "--out", str(second)], capsys)[0] == 0
    assert first.read_bytes() == second.read_bytes()

    pixels = np.asarray(Image.open(first).convert("RGB"))
    ys, _ = np.nonzero(np.all(pixels == AGENT_COLORS[0], axis=-1))
    assert len(ys) > 0
    # agent a goes straight along row 4 and never leaves it
    top = MARGIN + 4 * CELL
    assert ys.min() >= top
    assert ys.max() < top + CELL


@pytest.mark.cli
def test_straight_line_arrows(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    "A lone agent crossing row 4 draws nine right-pointing arrows and nothing else in red."
    config = ScenarioConfig.make("parallel", 9, solo=0)
    source = tmp_path / "solo.csv"
    rollout(config, [scripted_strategy(Strategy.STRAIGHT, 0, config), None]).write_csv(source)
    target = tmp_path / "solo.png"
    assert run(["plot", str(source), "--out", str(target)], capsys)[0] == 0

    pixels = np.asarray(Image.open(target).convert("RGB"))
    red = np.all(pixels == AGENT_COLORS[0], axis=-1)
    cy = MARGIN + 4 * CELL + CELL // 2
    for x in range(9):
        cx = MARGIN + x * CELL + CELL // 2
        # shaft, then the head between the back at +12 and the tip at +18
        assert red[cy, cx + 4]
        assert red[cy, cx + 14]
        assert red[cy + 2, cx + 13]
        assert not red[cy - 6, cx + 4]
    ys, xs = np.nonzero(red)
    assert ys.min() >= cy - 3
    assert ys.max() <= cy + 3
    assert abs(xs.min() - (MARGIN + CELL // 2)) <= 1
    assert abs(xs.max() - (MARGIN + 8 * CELL + CELL // 2 + CELL * 3 // 4)) <= 1


@pytest.mark.cli
def test_plot_default_output(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    source = straight_vs_avoid(tmp_path / "episode.csv")
    assert run(["plot", str(source)], capsys)[0] == 0
    assert (tmp_path / "episode.png").exists()


@pytest.mark.cli
def test_plot_rejects_empty_metrics(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    source = tmp_path / "metrics.csv"
    source.write_text("episode,return_a,return_b,length,event_a,event_b\n")
    target = tmp_path / "metrics.png"
    code, _, err = run(["plot", str(source), "--out", str(target)], capsys)
    assert code == 2
    assert "ParseError" in err
    assert not target.exists()


@pytest.mark.cli
def test_train_analyze_eval(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    out = tmp_path / "run"
    settings = ["--size", "5", "--out", str(out), "--seeds", "1,2"]
    settings += ["--set", "episodes=3", "--set", "eval_every=1", "--set", "eval_episodes=1"]
    code, stdout, err = run(["train", *settings], capsys)
    assert code == 0, err
    assert stdout.count("final labels") == 2
    assert (out / "summary.json").exists()

    code, stdout, _ = run(["analyze", *settings], capsys)
    assert code == 0
    report = json.loads(stdout)
    assert sorted(report["joint_labels"]) == ["1", "2"]
    assert 0.0 <= report["asymmetric_fraction"] <= 1.0
    assert (out / "analysis.json").exists()

    checkpoints = [str(out / "seed_1" / f"agent_{name}.qtable") for name in "ab"]
    argv = ["eval", *settings, "--checkpoint", *checkpoints, "--episodes", "2"]
    code, stdout, _ = run(argv, capsys)
    assert code == 0
    assert json.loads(stdout)["episodes"] == 2
    assert (out / "eval.json").exists()
    rollouts = out / "trajectories"
    assert sorted(p.name for p in rollouts.iterdir()) == ["episode_1.csv", "episode_2.csv"]
    assert run(["plot", str(rollouts / "episode_1.csv")], capsys)[0] == 0
    assert Image.open(rollouts / "episode_1.png").size == (5 * CELL + 2 * MARGIN,) * 2

    code, _, err = run(["eval", *settings, "--checkpoint", checkpoints[0]], capsys)
    assert code == 2
    assert "CheckpointError" in err

    code, _, _ = run(["plot", str(out / "seed_1" / "metrics.csv")], capsys)
    assert code == 0
    assert (out / "seed_1" / "metrics.png").exists()
