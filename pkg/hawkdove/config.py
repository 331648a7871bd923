"""
Flat `key = value` run configuration.

Files have no section header; `#` starts a comment. Agent hyper-parameters
given bare apply to both agents, `a.<key>` / `b.<key>` to one of them.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

from .gridworld import ConfigError, RewardSpec, Scenario, ScenarioConfig
from .network import DEFAULT_CONV, DEFAULT_HIDDEN, ConvSpec
from .policy import EpsilonSchedule, TieBreak

SECTION = "hawkdove"

SCENARIO_KEYS = (
    "scenario",
    "width",
    "height",
    "max_steps",
    "frame_stack",
    "seed",
    "solo",
    "r_goal",
    "r_collide",
    "r_wrong",
    "r_step",
    "gamma",
)
REWARD_KEYS = SCENARIO_KEYS[-5:]
RUN_KEYS = (
    "agent_kind",
    "episodes",
    "eval_every",
    "eval_episodes",
    "seeds",
    "output_dir",
    "train_ratio",
    "audit_every",
)
AGENT_KEYS = (
    "learning_rate",
    "momentum",
    "eps_start",
    "eps_end",
    "eps_decay_steps",
    "buffer_capacity",
    "batch_size",
    "sync_period",
    "tie_break",
    "prioritized",
    "priority_alpha",
    "conv",
    "hidden",
)
AGENT_PREFIXES = ("a.", "b.")

DEFAULT_LEARNING_RATE = {"tabular": 0.1, "dqn": 1e-3}


class AgentKind(Enum):
    TABULAR = "tabular"
    DQN = "dqn"


@dataclass(frozen=True)
class AgentConfig:
    learning_rate: float = 0.1
    momentum: float = 0.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 30_000
    buffer_capacity: int = 50_000
    batch_size: int = 32
    sync_period: int = 500
    tie_break: TieBreak = TieBreak.LOWEST
    prioritized: bool = False
    priority_alpha: float = 0.6
    conv: Tuple[ConvSpec, ...] = DEFAULT_CONV
    hidden: Tuple[int, ...] = DEFAULT_HIDDEN

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum", "must be in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        if self.buffer_capacity < self.batch_size:
            raise ConfigError("buffer_capacity", "must be >= batch_size")
        if self.sync_period < 1:
            raise ConfigError("sync_period", "must be >= 1")
        if not self.priority_alpha >= 0:
            raise ConfigError("priority_alpha", "must be >= 0")
        self.schedule()

    def schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.eps_start, self.eps_end, self.eps_decay_steps)


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    agent_kind: AgentKind = AgentKind.TABULAR
    agents: Tuple[AgentConfig, AgentConfig] = (AgentConfig(), AgentConfig())
    episodes: int = 50_000
    eval_every: int = 500
    eval_episodes: int = 5
    seeds: Tuple[int, ...] = (0,)
    output_dir: str = "runs"
    train_ratio: int = 1
    audit_every: int = 100

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ConfigError("episodes", "must be >= 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every", "must be >= 1")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes", "must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds", "must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "must be distinct")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds", "must be non-negative")
        if self.train_ratio < 1:
            raise ConfigError("train_ratio", "must be >= 1")
        if self.audit_every < 0:
            raise ConfigError("audit_every", "must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        "Every effective setting, keyed as in config files."
        s = self.scenario
        out: Dict[str, Any] = {
            "scenario": s.scenario.value,
            "width": s.width,
            "height": s.height,
            "max_steps": s.max_steps,
            "frame_stack": s.frame_stack,
            "seed": s.seed,
            "solo": "none" if s.solo is None else s.solo,
            **asdict(s.reward),
            "agent_kind": self.agent_kind.value,
            "episodes": self.episodes,
            "eval_every": self.eval_every,
            "eval_episodes": self.eval_episodes,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "train_ratio": self.train_ratio,
            "audit_every": self.audit_every,
        }
        for prefix, agent in zip(AGENT_PREFIXES, self.agents):
            for key in AGENT_KEYS:
                out[prefix + key] = format_value(getattr(agent, key))
        return out


def format_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple) and value and isinstance(value[0], tuple):
        return ",".join(":".join(str(v) for v in spec) for spec in value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return value


def parse_seeds(text: str) -> Tuple[int, ...]:
    "`7`, `1,2,5` or an inclusive range `1..20`."
    text = text.strip()
    m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError("seeds", f"empty range {text}")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError("seeds", f"expected 'a..b' or a comma list, got {text!r}") from None


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _solo(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("", "none") else int(text)


def _conv(text: str) -> Tuple[ConvSpec, ...]:
    specs = []
    for part in text.split(","):
        if not part.strip():
            continue
        channels, kernel, stride = (int(v) for v in part.split(":"))
        specs.append((channels, kernel, stride))
    return tuple(specs)


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


PARSERS: Dict[str, Callable[[str], Any]] = {
    "scenario": Scenario,
    "width": int,
    "height": int,
    "max_steps": int,
    "frame_stack": int,
    "seed": int,
    "solo": _solo,
    "r_goal": float,
    "r_collide": float,
    "r_wrong": float,
    "r_step": float,
    "gamma": float,
    "agent_kind": AgentKind,
    "episodes": int,
    "eval_every": int,
    "eval_episodes": int,
    "seeds": parse_seeds,
    "output_dir": str,
    "train_ratio": int,
    "audit_every": int,
    "learning_rate": float,
    "momentum": float,
    "eps_start": float,
    "eps_end": float,
    "eps_decay_steps": int,
    "buffer_capacity": int,
    "batch_size": int,
    "sync_period": int,
    "tie_break": TieBreak,
    "prioritized": _bool,
    "priority_alpha": float,
    "conv": _conv,
    "hidden": _ints,
}


def base_key(key: str) -> str:
    for prefix in AGENT_PREFIXES:
        if key.startswith(prefix) and key[len(prefix) :] in AGENT_KEYS:
            return key[len(prefix) :]
    return key


def check_key(key: str) -> None:
    if base_key(key) not in PARSERS:
        raise ConfigError(key, "unknown configuration key")
    if key != base_key(key) and base_key(key) not in AGENT_KEYS:
        raise ConfigError(key, "only agent hyper-parameters take an a./b. prefix")


def parse_value(key: str, text: str) -> Any:
    check_key(key)
    try:
        return PARSERS[base_key(key)](text.strip())
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(key, f"cannot parse {text.strip()!r}") from None


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    "Raw `key -> text` pairs of a flat config file, in file order."
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror or e}") from e
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(f"[{SECTION}]\n{text}", source=str(path))
    except configparser.Error as e:
        raise ConfigError("config", f"{path}: {e.message}") from e
    return dict(parser[SECTION])


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    "`key=value` strings from the command line."
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(item, "override must look like key=value")
        out[key.strip()] = value
    return out


def build_run_config(raw: Mapping[str, str]) -> RunConfig:
    """
    Validate raw settings and build the run configuration.

    Raises:
        ConfigError : for unknown keys, unparsable values or violated constraints.
    """
    values = {key: parse_value(key, text) for key, text in raw.items()}

    scenario = ScenarioConfig.make(
        values.get("scenario", Scenario.PARALLEL),
        values.get("width", 9),
        values.get("height"),
        reward=RewardSpec(**{k: values[k] for k in REWARD_KEYS if k in values}),
        max_steps=values.get("max_steps"),
        frame_stack=values.get("frame_stack", 4),
        seed=values.get("seed", 0),
        solo=values.get("solo"),
    )
    kind = values.get("agent_kind", AgentKind.TABULAR)
    agents = []
    for prefix in AGENT_PREFIXES:
        fields: Dict[str, Any] = {"learning_rate": DEFAULT_LEARNING_RATE[kind.value]}
        fields.update({k: values[k] for k in AGENT_KEYS if k in values})
        fields.update({k: values[prefix + k] for k in AGENT_KEYS if prefix + k in values})
        try:
            agents.append(AgentConfig(**fields))
        except ConfigError as e:
            if prefix + e.key in values:
                raise ConfigError(prefix + e.key, e.constraint) from None
            raise
    return RunConfig(
        scenario=scenario,
        agent_kind=kind,
        agents=(agents[0], agents[1]),
        episodes=values.get("episodes", 50_000),
        eval_every=values.get("eval_every", 500),
        eval_episodes=values.get("eval_episodes", 5),
        seeds=values.get("seeds", (scenario.seed,)),
        output_dir=values.get("output_dir", "runs"),
        train_ratio=values.get("train_ratio", 1),
        audit_every=values.get("audit_every", 100),
    )


def load_run_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, str]] = None
) -> RunConfig:
    "Defaults, then the file at `path`, then `overrides`."
    raw: Dict[str, str] = {}
    if path is not None:
        raw.update(read_config_file(path))
    for key, text in (overrides or {}).items():
        check_key(key)
        raw[key] = text
    return build_run_config(raw)

