"""Experiment configuration and the observe/act/learn loop."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._alloc import tune_malloc
from ..agents import AgentConfig, make_agent
from ..env import default_env_config, env_from_config
from ..nets import DivergenceError, load_params, save_params

log = logging.getLogger(__name__)

METRICS_FIELDS = (
    "iteration", "utility_raw", "reward_clipped", "se", "ssr_volte", "ssr_video", "ssr_urllc",
    "epsilon", "loss_d", "loss_g", "action_index", "wallclock_ms",
)
CHECKPOINT_NAME = "checkpoint.gddq"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    env: dict = field(default_factory=default_env_config)
    agent: dict = field(default_factory=dict)
    iterations: int = 5000
    eval_window: int = 500
    seed: int = 0
    output_dir: str = "runs/default"
    record_wallclock: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 1 <= self.eval_window <= self.iterations:
            raise ConfigError("eval_window must lie in [1, iterations]")
        try:
            self.agent_config = AgentConfig.from_dict(self.agent)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"agent config: {exc}") from exc
        for key in ("total_bandwidth_hz", "resolution_hz", "alpha", "slot_ms", "slots_per_step", "slices"):
            if key not in self.env:
                raise ConfigError(f"env config lacks {key!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"env", "agent", "iterations", "eval_window", "seed", "output_dir", "record_wallclock"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        d = copy.deepcopy(d)
        if "env" not in d:
            d["env"] = default_env_config()
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc

    def resolved_env(self) -> dict:
        """Env document with the run seed applied."""
        env = copy.deepcopy(self.env)
        env["seed"] = int(self.seed)
        return env

    def to_dict(self) -> dict:
        return {
            "env": self.resolved_env(),
            "agent": self.agent_config.to_dict(),
            "iterations": self.iterations,
            "eval_window": self.eval_window,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "record_wallclock": self.record_wallclock,
        }


def env_fingerprint(env_doc: dict) -> str:
    """Hash of the environment document ignoring the seed."""
    doc = {k: v for k, v in env_doc.items() if k not in ("seed", "obs_scale")}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _summarize(rows: list[dict], window: int, meta: dict) -> dict:
    tail = rows[-window:]
    ssr_keys = [k for k in METRICS_FIELDS if k.startswith("ssr_")]
    return {
        **meta,
        "iterations": len(rows),
        "eval_window": window,
        "mean_utility": float(np.mean([r["utility_raw"] for r in tail])),
        "mean_se": float(np.mean([r["se"] for r in tail])),
        "mean_ssr": {k[4:]: float(np.mean([r[k] for r in tail])) for k in ssr_keys},
        "final_ssr": {k[4:]: float(rows[-1][k]) for k in ssr_keys},
    }


def run_experiment(config: ExperimentConfig, progress_every: int = 0) -> dict:
    """Train (or just roll out, for hard slicing) and write metrics, checkpoint and summary.

    Raises :class:`DivergenceError` after saving the last good parameters when
    a loss or gradient turns non-finite.
    """
    tune_malloc()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    env_doc = config.resolved_env()
    env = env_from_config(env_doc)
    if len(env.slices) != 3:
        raise ConfigError("the metrics schema expects exactly three slices")
    env_doc["obs_scale"] = [float(x) for x in env.obs_scale]
    acfg = config.agent_config
    agent = make_agent(acfg, env.n_slices, len(env.actions), config.seed, env.hard_action.index)
    beta = env.beta

    resolved = config.to_dict()
    resolved["env"] = env_doc
    with open(out / "config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)

    rows: list[dict] = []
    state = env.last_observation.normalized
    ckpt = out / CHECKPOINT_NAME
    t_start = time.perf_counter()
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_FIELDS)
        for i in range(config.iterations):
            t0 = time.perf_counter()
            eps = acfg.epsilon(i) if acfg.algo != "hard" else 0.0
            a = agent.select_action(state, eps)
            obs, m = env.step(a)
            reward = agent.shape_reward(m.utility)
            agent.observe(state, a, reward, obs.normalized)
            try:
                loss_d, loss_g = agent.train_step(i + 1)
                for v in (loss_d, loss_g):
                    if v is not None and not math.isfinite(v):
                        raise DivergenceError(f"non-finite loss at iteration {i}")
            except DivergenceError:
                fh.flush()
                save_params(ckpt, agent.param_groups())
                raise
            agent.target_sync(i + 1)
            # J recomputed from the logged row must agree with the simulator's value
            assert abs(m.utility - (env.alpha * m.se + float(np.dot(beta, m.ssr)))) <= 1e-9
            row = {
                "iteration": i,
                "utility_raw": m.utility,
                "reward_clipped": reward,
                "se": m.se,
                "ssr_volte": m.ssr[0],
                "ssr_video": m.ssr[1],
                "ssr_urllc": m.ssr[2],
                "epsilon": eps,
                "loss_d": loss_d,
                "loss_g": loss_g,
                "action_index": a,
                "wallclock_ms": (time.perf_counter() - t0) * 1e3 if config.record_wallclock else None,
            }
            writer.writerow([_fmt(row[k]) for k in METRICS_FIELDS])
            rows.append(row)
            state = obs.normalized
            if progress_every and (i + 1) % progress_every == 0:
                tail = rows[-progress_every:]
                log.info(
                    "%s it=%d mean J=%.3f eps=%.3f", acfg.algo, i + 1,
                    np.mean([r["utility_raw"] for r in tail]), eps,
                )

    save_params(ckpt, agent.param_groups())
    meta = {
        "name": out.name,
        "algo": acfg.algo,
        "seed": config.seed,
        "env_fingerprint": env_fingerprint(env_doc),
        "clipping": acfg.clip.enabled,
        "runtime_s": round(time.perf_counter() - t_start, 3) if config.record_wallclock else None,
    }
    summary = _summarize(rows, config.eval_window, meta)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def evaluate_checkpoint(
    checkpoint: str | Path, config: ExperimentConfig, iterations: int | None = None
) -> dict:
    """Greedy rollout (ε = 0) of saved parameters on a fresh environment."""
    env_doc = config.resolved_env()
    env = env_from_config(env_doc)
    acfg = config.agent_config
    agent = make_agent(acfg, env.n_slices, len(env.actions), config.seed, env.hard_action.index)
    if acfg.algo != "hard":
        agent.load_param_groups(load_params(checkpoint))
    n = iterations or config.eval_window
    state = env.last_observation.normalized
    util, se, ssr = [], [], []
    for _ in range(n):
        a = agent.select_action(state, 0.0)
        obs, m = env.step(a)
        util.append(m.utility)
        se.append(m.se)
        ssr.append(m.ssr)
        state = obs.normalized
    ssr = np.mean(ssr, axis=0)
    return {
        "algo": acfg.algo,
        "iterations": n,
        "mean_utility": float(np.mean(util)),
        "mean_se": float(np.mean(se)),
        "mean_ssr": {s.slice_id.value.lower(): float(x) for s, x in zip(env.slices, ssr)},
    }
