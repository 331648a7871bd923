"""
Long seed sweeps that are too slow for the unit suite.

    python project/run_acceptance.py tabular     # 9 x 9, both scenarios, 20 seeds
    python project/run_acceptance.py dqn         # 16 x 16, 3 seeds
    python project/run_acceptance.py smoke64     # 64 x 64, 1,000 episodes
    python project/run_acceptance.py labels      # scripted strategies, 1,000 episodes

Each check prints PASS / FAIL and the script exits 1 if any check failed.
"""
import argparse
import itertools
import logging
import sys
from pathlib import Path
from typing import Dict, List

import hawkdove

HERE = Path(__file__).parent


def default_log_fn(seed: int, episode: int, record: hawkdove.EvalRecord) -> None:
    s = record.summary
    labels = "/".join(l.value for l in s.joint_label)
    print(f"seed {seed} episode {episode} returns {s.mean_return[0]:.3f} {s.mean_return[1]:.3f} {labels}")


def converged(metrics: hawkdove.RunMetrics) -> bool:
    "Final greedy evaluation: collision-free, both agents at their goals, one straight and one avoid."
    final = metrics.final_eval
    if final is None or final.collisions:
        return False
    goals = all(final.events[i].get("goal", 0) == final.episodes for i in range(2))
    return goals and set(final.joint_label) == {hawkdove.Label.STRAIGHT, hawkdove.Label.AVOID}


def sweep(config: str, out: Path, overrides: Dict[str, str]) -> Dict[int, hawkdove.RunMetrics]:
    run = hawkdove.load_run_config(HERE / config, {"output_dir": str(out), **overrides})
    return hawkdove.train(run, default_log_fn)


def check_tabular(out: Path, overrides: Dict[str, str]) -> bool:
    ok = True
    for config in ("parallel9.cfg", "perpendicular9.cfg"):
        results = sweep(config, out / config[:-4], overrides)
        good = [m for m in results.values() if converged(m)]
        labels = {
            m.seed: m.final_eval.joint_label for m in good if m.final_eval is not None
        }
        report = hawkdove.asymmetry_report(labels) if labels else None
        share = len(good) / len(results)
        both_roles = report is not None and min(report.straight_split) > 0
        passed = share >= 0.8 and both_roles
        print(f"{config}: {len(good)}/{len(results)} converged, roles {report and report.straight_split}")
        print(f"{'PASS' if passed else 'FAIL'} tabular {config}")
        ok = ok and passed
    return ok


def check_dqn(out: Path, overrides: Dict[str, str]) -> bool:
    results = sweep("parallel16_dqn.cfg", out / "parallel16_dqn", overrides)
    good = [m for m in results.values() if converged(m)]
    passed = len(good) >= 2
    print(f"{'PASS' if passed else 'FAIL'} dqn 16x16: {len(good)}/{len(results)} converged")
    return passed


def check_smoke64(out: Path, overrides: Dict[str, str]) -> bool:
    results = sweep("grid64_dqn.cfg", out / "grid64_dqn", overrides)
    errors = [m.error for m in results.values() if m.error is not None]
    passed = not errors and all(len(m.episodes) == 1000 for m in results.values())
    print(f"{'PASS' if passed else 'FAIL'} 64x64 smoke {errors}")
    return passed


# 2 scenarios x 3 sizes x 4 strategy pairs x 42 repeats covers 1,000 episodes
REPEATS = 42


def check_labels(out: Path, overrides: Dict[str, str]) -> bool:
    expected = {
        (hawkdove.Strategy.STRAIGHT, hawkdove.Strategy.STRAIGHT): {hawkdove.Label.COLLIDE},
        (hawkdove.Strategy.STRAIGHT, hawkdove.Strategy.AVOID): None,
        (hawkdove.Strategy.AVOID, hawkdove.Strategy.STRAIGHT): None,
        (hawkdove.Strategy.AVOID, hawkdove.Strategy.AVOID): {hawkdove.Label.AVOID},
    }
    wrong = 0
    total = 0
    for scenario, size in itertools.product(hawkdove.Scenario, (9, 13, 17)):
        config = hawkdove.ScenarioConfig.make(scenario, size)
        for (a, b), both in expected.items():
            policies = [
                hawkdove.scripted_strategy(a, 0, config),
                hawkdove.scripted_strategy(b, 1, config),
            ]
            for _ in range(REPEATS):
                traj = hawkdove.rollout(config, policies)
                got: List[hawkdove.Label] = [
                    hawkdove.classify(traj, i, config).label for i in range(2)
                ]
                want = [hawkdove.Label(s.value) for s in (a, b)] if both is None else list(both) * 2
                total += 1
                wrong += got != want
    passed = wrong == 0
    print(f"{'PASS' if passed else 'FAIL'} labels: {wrong} of {total} episodes mislabeled")
    return passed


CHECKS = {
    "tabular": check_tabular,
    "dqn": check_dqn,
    "smoke64": check_smoke64,
    "labels": check_labels,
}


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("checks", nargs="*", default=list(CHECKS), help=", ".join(CHECKS))
    parser.add_argument("--out", default="runs/acceptance")
    parser.add_argument("--set", dest="overrides", action="append", default=[])
    args = parser.parse_args()
    unknown = [name for name in args.checks if name not in CHECKS]
    if unknown:
        parser.error(f"unknown check(s): {', '.join(unknown)}")
    logging.basicConfig(level=logging.INFO)
    overrides = hawkdove.parse_overrides(args.overrides)
    results = [CHECKS[name](Path(args.out), overrides) for name in args.checks]
    sys.exit(0 if all(results) else 1)
