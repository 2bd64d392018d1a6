"""Experiment orchestration: configs, runners, sweeps, seeded CSV logging.

Every run is a pure function of (config, seed): the seed is split into named
substreams (environment, exploration, initialization, replay sampling, ...)
so repeated runs produce byte-identical CSVs.
"""

import csv
import itertools
import math
import os
from collections import deque
from dataclasses import dataclass, fields, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import envs, nn, planning, uncertainty

KINDS = ("control", "regression", "correlation")
AGENTS = ("dqn", "mve", "selective-mve")
WEIGHTINGS = planning.WEIGHT_MODES
VALUE_ARCHS = {
    "1x64": (64,),
    "1x128": (128,),
    "2x64": (64, 64),
    "2x128": (128, 128),
}
MODEL_HIDDEN_CHOICES = (4, 16, 64, 128)
REGRESSION_METHODS = (
    "hetero",
    "ensemble",
    "rpf",
    "rpf-bootstrap",
    "mc-dropout",
    "ensemble+hetero",
)
CAPACITY_ARCHS = {"large": (64, 64, 64), "medium": (2048,), "small": (64,)}
REGRESSION_VAR_HIDDEN = (64,)  # variance net stays small in every capacity regime
REGRESSION_ENSEMBLE = 10
CONTROL_ENSEMBLE = 5
CORRELATION_ENSEMBLE = 20


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to exit code 2."""


@dataclass
class ExperimentConfig:
    kind: str = "control"
    agent: str = "dqn"
    weighting: str = "uniform"
    value_hidden: str = "1x128"
    model_hidden: int = 128
    rollout_h: int = 4
    tau: float = 0.1
    value_lr: float = 0.001
    model_lr: float = 0.001
    batch_size: int = 32
    model_batch_size: int = 16
    replay_capacity: int = 10000
    total_steps: int = 400000
    seeds: int = 10
    winner_seeds: int = 30
    log_every: int = 2000
    epsilon: float = 0.1
    gamma: float = 1.0
    target_sync: int = 256
    warmup: int = 1000
    episode_cap: int = 1000
    ensemble_size: int = 0  # 0: derived from the weighting mode
    prior_scale: float = 1.0
    # regression study
    method: str = "hetero"
    capacity: str = "large"
    epochs: int = 300
    n_train: int = 5000
    train_lo: float = -1.0
    train_hi: float = 2.0
    eval_lo: float = -1.5
    eval_hi: float = 2.5
    eval_points: int = 1000
    dropout_p: float = 0.1
    mc_passes: int = 10

    def __post_init__(self):
        checks = [
            ("kind", self.kind in KINDS, f"one of {KINDS}"),
            ("agent", self.agent in AGENTS, f"one of {AGENTS}"),
            ("weighting", self.weighting in WEIGHTINGS, f"one of {WEIGHTINGS}"),
            ("value_hidden", self.value_hidden in VALUE_ARCHS, f"one of {tuple(VALUE_ARCHS)}"),
            (
                "model_hidden",
                self.model_hidden in MODEL_HIDDEN_CHOICES,
                f"one of {MODEL_HIDDEN_CHOICES}",
            ),
            ("method", self.method in REGRESSION_METHODS, f"one of {REGRESSION_METHODS}"),
            ("capacity", self.capacity in CAPACITY_ARCHS, f"one of {tuple(CAPACITY_ARCHS)}"),
            ("rollout_h", self.rollout_h >= 1, ">= 1"),
            ("tau", self.tau > 0, "> 0"),
            ("value_lr", self.value_lr > 0, "> 0"),
            ("model_lr", self.model_lr > 0, "> 0"),
            ("batch_size", self.batch_size >= 1, ">= 1"),
            ("model_batch_size", self.model_batch_size >= 1, ">= 1"),
            ("replay_capacity", self.replay_capacity >= 1, ">= 1"),
            ("total_steps", self.total_steps >= 1, ">= 1"),
            ("seeds", self.seeds >= 1, ">= 1"),
            ("winner_seeds", self.winner_seeds >= 1, ">= 1"),
            ("log_every", self.log_every >= 1, ">= 1"),
            ("epsilon", 0.0 <= self.epsilon <= 1.0, "in [0, 1]"),
            ("gamma", 0.0 <= self.gamma <= 1.0, "in [0, 1]"),
            ("target_sync", self.target_sync >= 1, ">= 1"),
            ("warmup", self.warmup >= 0, ">= 0"),
            ("episode_cap", self.episode_cap >= 1, ">= 1"),
            ("ensemble_size", self.ensemble_size >= 0, ">= 0"),
            ("epochs", self.epochs >= 1, ">= 1"),
            ("n_train", self.n_train >= 1, ">= 1"),
            ("eval_points", self.eval_points >= 2, ">= 2"),
            ("dropout_p", 0.0 <= self.dropout_p < 1.0, "in [0, 1)"),
            ("mc_passes", self.mc_passes >= 1, ">= 1"),
        ]
        for name, ok, requirement in checks:
            if not ok:
                raise ConfigError(
                    f"config field {name!r} = {getattr(self, name)!r} invalid: needs {requirement}"
                )
        if self.train_lo >= self.train_hi:
            raise ConfigError("config field 'train_lo' must be below 'train_hi'")
        if self.eval_lo >= self.eval_hi:
            raise ConfigError("config field 'eval_lo' must be below 'eval_hi'")
        if self.agent == "mve" and self.weighting not in ("uniform",):
            raise ConfigError("config field 'weighting': plain mve uses uniform weighting")
        if self.agent == "selective-mve" and self.weighting == "uniform":
            raise ConfigError(
                "config field 'weighting': selective-mve needs a non-uniform weighting"
            )
        if self.kind == "correlation" and self.weighting != "combined":
            raise ConfigError(
                "config field 'weighting': correlation runs need the combined "
                "(heteroscedastic ensemble) model"
            )

    @property
    def value_hidden_sizes(self):
        return VALUE_ARCHS[self.value_hidden]

    @property
    def n_members(self):
        if self.ensemble_size:
            return self.ensemble_size
        if self.weighting == "combined":
            return CORRELATION_ENSEMBLE
        if self.weighting == "ensemble-variance":
            return CONTROL_ENSEMBLE
        return 1

    def metadata(self, seed):
        meta = {f.name: getattr(self, f.name) for f in fields(self)}
        meta["seed"] = seed
        return meta


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name, raw):
    kind = _FIELD_TYPES[name]
    raw = raw.strip() if isinstance(raw, str) else raw
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field {name!r}: cannot parse {raw!r}") from exc


def config_from_mapping(mapping, base=None):
    """Build a config from string key/values; unknown keys are rejected."""
    values = {}
    for key, raw in mapping.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config field {key!r}")
        values[key] = _coerce(key, raw)
    if base is not None:
        return replace(base, **values)
    return ExperimentConfig(**values)


def parse_config_file(path):
    """Flat `key = value` text; `sweep.key = v1, v2, ...` defines grid axes."""
    base = {}
    grid = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("sweep."):
            field = key[len("sweep."):]
            if field not in _FIELD_TYPES:
                raise ConfigError(f"unknown sweep field {field!r}")
            grid[field] = [_coerce(field, v) for v in value.split(",")]
        else:
            base[key] = value
    return base, grid


# --- curve logs ---

CONTROL_COLUMNS = ["step", "avg_return", "expected_rollout_len", "model_loss"]
CORRELATION_COLUMNS = CONTROL_COLUMNS + ["r_learned", "r_ensemble", "r_combined"]


def columns_for_kind(kind):
    return list(CORRELATION_COLUMNS if kind == "correlation" else CONTROL_COLUMNS)


@dataclass
class CurveLog:
    columns: list
    rows: list
    metadata: dict

    def column(self, name):
        """One column as a float array; missing entries become nan."""
        i = self.columns.index(name)
        return np.array(
            [math.nan if row[i] is None else float(row[i]) for row in self.rows]
        )

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for key, value in self.metadata.items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow(["" if v is None else repr(v) for v in row])
        return path

    @classmethod
    def read_csv(cls, path):
        metadata = {}
        with open(path, newline="") as fh:
            data_lines = []
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    metadata[key.strip()] = value
                else:
                    data_lines.append(line)
        reader = csv.reader(data_lines)
        columns = next(reader)
        rows = []
        for rec in reader:
            rows.append([None if v == "" else float(v) for v in rec])
        return cls(columns=columns, rows=rows, metadata=metadata)


def _streams(seed, names):
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def _mean_or_none(total, count):
    return None if count == 0 else total / count


# --- control / correlation runner ---


def _make_model(config, rng):
    hidden = (config.model_hidden,)
    if config.agent == "dqn":
        if config.kind == "correlation":
            # a dqn-driven correlation run still trains the hetero ensemble
            return uncertainty.EnsembleModel.create(config.n_members, hidden, rng, hetero=True)
        return None
    if config.weighting == "uniform":
        return uncertainty.DeterministicModel.create(hidden, rng)
    if config.weighting in ("learned-variance", "oracle"):
        return uncertainty.HeteroModel.create(hidden, rng)
    if config.weighting == "ensemble-variance":
        return uncertainty.EnsembleModel.create(config.n_members, hidden, rng, hetero=False)
    if config.weighting == "combined":
        return uncertainty.EnsembleModel.create(config.n_members, hidden, rng, hetero=True)
    raise AssertionError(config.weighting)


def _model_update(config, model, buffer, rng):
    # one batch per environment step; ensembles share it (member diversity
    # comes from initialization, as in the regression study)
    batch = buffer.sample(config.model_batch_size, rng)
    if isinstance(model, uncertainty.EnsembleModel):
        return uncertainty.ensemble_update(model, [batch] * len(model.members), config.model_lr)
    if isinstance(model, uncertainty.HeteroModel):
        return uncertainty.hetero_update(model, batch, config.model_lr)
    return uncertainty.deterministic_update(model, batch, config.model_lr)


def run_control(config, seed, out_path=None):
    """One seeded agent-environment run; logs every `log_every` steps.

    Returns the CurveLog (and writes it as CSV when `out_path` is given).
    """
    if config.kind == "regression":
        raise ConfigError("config field 'kind' must be control or correlation here")
    streams = _streams(seed, ["env", "explore", "value_init", "model_init", "replay", "corr"])
    env = envs.AcrobotEnv()
    agent = planning.QAgent.create(
        config.value_hidden_sizes,
        streams["value_init"],
        epsilon=config.epsilon,
        gamma=config.gamma,
        batch_size=config.batch_size,
        lr=config.value_lr,
        target_sync=config.target_sync,
    )
    model = _make_model(config, streams["model_init"])
    oracle = envs.true_successor if config.weighting == "oracle" else None
    buffer = planning.ReplayBuffer(config.replay_capacity)
    columns = columns_for_kind(config.kind)
    returns = deque(maxlen=20)
    rows = []
    obs = env.reset(streams["env"])
    episode_return = 0.0
    episode_steps = 0
    window = {name: [0.0, 0] for name in ("exp_len", "model_loss", "r_l", "r_e", "r_c")}

    def accumulate(name, value):
        window[name][0] += value
        window[name][1] += 1

    for step in range(1, config.total_steps + 1):
        action = planning.epsilon_greedy(agent, obs, streams["explore"])
        nxt, reward, terminal = env.step(action)
        episode_steps += 1
        truncated = (not terminal) and episode_steps >= config.episode_cap
        buffer.push(planning.Transition(obs, action, reward, nxt, terminal, truncated))
        episode_return += reward
        if terminal or truncated:
            returns.append(episode_return)
            episode_return = 0.0
            episode_steps = 0
            obs = env.reset(streams["env"])
        else:
            obs = nxt

        if len(buffer) >= config.warmup:
            if model is not None:
                accumulate("model_loss", _model_update(config, model, buffer, streams["replay"]))
            batch = buffer.sample(config.batch_size, streams["replay"])
            if config.agent == "dqn":
                planning.dqn_update(agent, batch)
            else:
                _, exp_len = planning.mve_update_stats(
                    agent,
                    model,
                    batch,
                    config.rollout_h,
                    tau=config.tau,
                    mode=config.weighting,
                    oracle=oracle,
                )
                accumulate("exp_len", exp_len)
            if config.kind == "correlation":
                corr = planning.variance_error_correlation(
                    model, buffer, config.batch_size, streams["corr"]
                )
                accumulate("r_l", corr.r_learned)
                accumulate("r_e", corr.r_ensemble)
                accumulate("r_c", corr.r_combined)

        if step % config.target_sync == 0:
            agent.sync_target()

        if step % config.log_every == 0:
            row = [
                step,
                _mean_or_none(sum(returns), len(returns)),
                _mean_or_none(*window["exp_len"]),
                _mean_or_none(*window["model_loss"]),
            ]
            if config.kind == "correlation":
                row += [
                    _mean_or_none(*window["r_l"]),
                    _mean_or_none(*window["r_e"]),
                    _mean_or_none(*window["r_c"]),
                ]
            rows.append(row)
            window = {name: [0.0, 0] for name in window}

    log = CurveLog(columns=columns, rows=rows, metadata=config.metadata(seed))
    if out_path is not None:
        log.write_csv(out_path)
    return log


def run_correlation(config, seed, out_path=None):
    """Control run with per-step variance/error correlation columns."""
    if config.kind != "correlation":
        config = replace(config, kind="correlation")
    return run_control(config, seed, out_path)


# --- parameter sweeps ---


@dataclass
class SweepResult:
    configs: list
    scores: list
    best_index: int
    boundary_flag: bool
    boundary_fields: list
    winner_curves: list

    @property
    def best_config(self):
        return self.configs[self.best_index]


def expand_grid(base, grid):
    """Cartesian product of grid axes over a base config, in axis order."""
    if not grid:
        return [base]
    names = list(grid)
    combos = list(itertools.product(*(grid[name] for name in names)))
    if not combos:
        raise ConfigError("empty sweep grid")
    return [replace(base, **dict(zip(names, combo))) for combo in combos]


def score_curve(avg_returns):
    """Sum of the second half of a seed-averaged learning curve."""
    arr = np.asarray(avg_returns, dtype=np.float64)
    half = arr[len(arr) // 2 :]
    return float(np.nansum(half))


def average_curves(logs, column="avg_return"):
    """Pointwise seed average; missing entries are averaged over present seeds."""
    stack = np.stack([log.column(column) for log in logs])
    with np.errstate(invalid="ignore"):
        return np.nanmean(stack, axis=0)


def _run_job(args):
    config, seed, out_path = args
    return run_control(config, seed, out_path)


def _run_all(jobs, workers):
    if workers <= 1:
        return [_run_job(job) for job in jobs]
    with get_context("spawn").Pool(workers) as pool:
        return pool.map(_run_job, jobs)


def _named_job(args):
    runner, config, seed, out_path = args
    return runner(config, seed, out_path)


def run_jobs(runner, jobs, workers=1):
    """Run (config, seed, out_path) jobs, in a spawn pool when workers > 1.

    Results come back in job order regardless of scheduling."""
    tagged = [(runner, config, seed, path) for config, seed, path in jobs]
    if workers <= 1:
        return [_named_job(job) for job in tagged]
    with get_context("spawn").Pool(workers) as pool:
        return pool.map(_named_job, tagged)


def run_sweep(base, grid, out_dir=None, workers=1, base_seed=0):
    """Grid sweep: `seeds` runs per config, curves averaged pointwise and
    scored by the sum of their second half, boundary flagging on numeric
    axes, and a fresh-seed re-run of the winner."""
    configs = expand_grid(base, grid)
    out_dir = Path(out_dir) if out_dir is not None else None

    jobs = []
    owners = []
    for i, config in enumerate(configs):
        for s in range(config.seeds):
            path = out_dir / f"config_{i:03d}" / f"seed_{base_seed + s}.csv" if out_dir else None
            jobs.append((config, base_seed + s, path))
            owners.append(i)
    results = _run_all(jobs, workers)

    by_config = [[] for _ in configs]
    for i, log in zip(owners, results):
        by_config[i].append(log)
    scores = [score_curve(average_curves(logs)) for logs in by_config]

    best = int(np.argmax(scores))
    boundary_fields = []
    for name, values in grid.items():
        distinct = sorted(set(values))
        if len(distinct) < 2 or not isinstance(distinct[0], (int, float)):
            continue
        winner_value = getattr(configs[best], name)
        if winner_value in (distinct[0], distinct[-1]):
            boundary_fields.append(name)

    winner_jobs = []
    for j in range(configs[best].winner_seeds):
        seed = base_seed + configs[best].seeds + j
        path = out_dir / "winner" / f"seed_{seed}.csv" if out_dir else None
        winner_jobs.append((configs[best], seed, path))
    winner_curves = _run_all(winner_jobs, workers)

    result = SweepResult(
        configs=configs,
        scores=scores,
        best_index=best,
        boundary_flag=bool(boundary_fields),
        boundary_fields=boundary_fields,
        winner_curves=winner_curves,
    )
    if out_dir is not None:
        _write_sweep_summary(result, grid, out_dir / "sweep_summary.csv")
    return result


def _write_sweep_summary(result, grid, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        names = list(grid)
        writer.writerow(["config_index", *names, "score", "is_best", "boundary_fields"])
        for i, (config, score) in enumerate(zip(result.configs, result.scores)):
            writer.writerow(
                [
                    i,
                    *(getattr(config, n) for n in names),
                    repr(score),
                    int(i == result.best_index),
                    ";".join(result.boundary_fields) if i == result.best_index else "",
                ]
            )


# --- regression study ---


@dataclass
class RegressionResult:
    x: np.ndarray
    y_true: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    metadata: dict

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for key, value in self.metadata.items():
                fh.write(f"# {key}={value}\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "y_true", "mean", "std"])
            for row in zip(self.x, self.y_true, self.mean, self.std):
                writer.writerow([repr(float(v)) for v in row])
        return path


def _train_epochs(step_fn, n, batch_size, epochs, rng):
    """Shuffled minibatch sweeps; step_fn(idx) performs one update."""
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            step_fn(order[start : start + batch_size])


def run_regression(config, seed, out_path=None):
    """Train one uncertainty method on the benchmark and dump its grid fit."""
    if config.kind != "regression":
        config = replace(config, kind="regression")
    streams = _streams(seed, ["data", "init", "train", "dropout", "bootstrap"])
    data = envs.make_regression_dataset(
        config.n_train, config.train_lo, config.train_hi, streams["data"]
    )
    x, y = envs.dataset_arrays(data)
    n = len(data)
    hidden = CAPACITY_ARCHS[config.capacity]
    lr = config.model_lr
    method = config.method
    k = config.ensemble_size or REGRESSION_ENSEMBLE
    init = streams["init"]

    if method == "hetero":
        model = uncertainty.HeteroModel.create(
            hidden, init, var_hidden=REGRESSION_VAR_HIDDEN, in_dim=1, out_dim=1, loss="half"
        )
        _train_epochs(
            lambda idx: model.update_arrays(x[idx], y[idx], lr),
            n, config.batch_size, config.epochs, streams["train"],
        )
    elif method == "mc-dropout":
        model = uncertainty.DropoutModel.create(
            hidden, init, p=config.dropout_p, passes=config.mc_passes, in_dim=1, out_dim=1
        )
        _train_epochs(
            lambda idx: uncertainty.update_dropout_arrays(
                model, x[idx], y[idx], lr, streams["dropout"]
            ),
            n, config.batch_size, config.epochs, streams["train"],
        )
    else:
        hetero = method == "ensemble+hetero"
        with_priors = method in ("rpf", "rpf-bootstrap")
        model = uncertainty.EnsembleModel.create(
            k,
            hidden,
            init,
            hetero=hetero,
            var_hidden=REGRESSION_VAR_HIDDEN if hetero else None,
            with_priors=with_priors,
            prior_scale=config.prior_scale,
            in_dim=1,
            out_dim=1,
            loss="half",
        )
        if method == "rpf-bootstrap":
            indices = uncertainty.bootstrap_datasets(list(range(n)), k, streams["bootstrap"])
            datasets = [(x[idx], y[idx]) for idx in map(np.asarray, indices)]
        else:
            datasets = [(x, y)] * k
        member_rngs = streams["train"].spawn(k)
        for m, ((mx, my), mrng) in enumerate(zip(datasets, member_rngs)):
            _train_epochs(
                lambda idx, m=m, mx=mx, my=my: uncertainty.update_ensemble_member_arrays(
                    model, m, mx[idx], my[idx], lr
                ),
                n, config.batch_size, config.epochs, mrng,
            )

    grid = np.linspace(config.eval_lo, config.eval_hi, config.eval_points).reshape(-1, 1)
    if method == "hetero":
        mean, var, _ = model.predict(grid)
    elif method == "mc-dropout":
        mean, var, _ = model.predict_mc(grid, streams["dropout"])
    elif method == "ensemble+hetero":
        mean, var, _ = model.predict_mixture(grid)
    else:
        mean, var, _ = model.predict(grid)
    y_true = np.array([envs.regression_target(float(v)) for v in grid[:, 0]])
    result = RegressionResult(
        x=grid[:, 0],
        y_true=y_true,
        mean=mean[:, 0],
        std=np.sqrt(var[:, 0]),
        metadata=config.metadata(seed),
    )
    if out_path is not None:
        result.write_csv(out_path)
    return result


def regression_csv_name(config, seed):
    return f"regression_{config.method}_{config.capacity}_lr{config.model_lr}_seed{seed}.csv"


def control_csv_name(config, seed):
    return f"{config.kind}_{config.agent}_{config.weighting}_seed{seed}.csv"
