"""Scenario orchestration: run agents on shared traces, emit logs and metrics.

Every scenario first leaves the building uncontrolled for a warm-up
period, then hands control to the chosen agent; the rule-based
controller is always run on the identical ambient/tariff traces as the
metric denominator.  All randomness derives from the scenario seed, so
a (scenario, seed) pair determines every output byte.
"""

from __future__ import annotations

import configparser
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import MpcConfig, MpcController, RbcConfig, rbc_action
from .emulator import (AmbientGenParams, AmbientTrace, BackupConfig, BuildingParams,
                       BuildingState, load_ambient_csv, make_synthetic_ambient, step)
from .mdp import (ActionGrid, BandSchedule, ComfortBand, EpisodeLog, ObservedState,
                  RewardComponents, StepRecord, TariffConfig, TariffSignal,
                  TransitionSample, comfort_reward, consumption_reward, encode_state,
                  log_metrics, make_tariff)
from .model_based import MbrlConfig, ModelBasedAgent
from .model_free import MfrlConfig, ModelFreeAgent
from .planners import CemConfig, GaConfig

__all__ = [
    "Scenario",
    "SuiteConfig",
    "RunReport",
    "ConvergenceEstimate",
    "run_scenario",
    "run_suite",
    "emit_plot_data",
    "estimate_convergence",
    "scenario_from_ini",
    "suite_from_ini",
]

AGENT_KINDS = ("rbc", "mpc", "mbrl", "mfrl")
PLOT_KINDS = ("temperature_trace", "action_histogram", "hourly_action_heatmap",
              "model_mae")


@dataclass(frozen=True)
class Scenario:
    """Everything one run needs; every field has an overridable default."""

    name: str = "run"
    days: int = 30
    agent: str = "rbc"
    seed: int = 0
    tariff_kind: str = "flat"
    tariff: TariffConfig = field(default_factory=TariffConfig)
    band_schedule: BandSchedule = field(default_factory=BandSchedule.constant)
    backup_enabled: bool = False
    backup_low_trip: float | None = None
    backup_high_trip: float | None = None
    warmup_hours: int = 24
    initial_temp_c: float = 21.0
    building: BuildingParams = field(default_factory=BuildingParams)
    ambient: AmbientGenParams = field(default_factory=AmbientGenParams)
    ambient_csv: str | None = None
    grid: ActionGrid = field(default_factory=ActionGrid)
    history_length: int = 3
    rbc: RbcConfig = field(default_factory=RbcConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    mbrl: MbrlConfig = field(default_factory=MbrlConfig)
    mfrl: MfrlConfig = field(default_factory=MfrlConfig)

    def horizon_hours(self) -> int:
        return self.days * 24

    def validate(self) -> None:
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.agent not in AGENT_KINDS:
            raise ValueError(f"agent must be one of {AGENT_KINDS}")
        if self.tariff_kind not in ("flat", "dual", "real_time"):
            raise ValueError(f"unknown tariff kind {self.tariff_kind!r}")
        if not 0 <= self.warmup_hours <= self.horizon_hours():
            raise ValueError("warmup_hours must lie within the run")
        if self.grid.levels_w[-1] > self.building.max_power_w:
            raise ValueError("action grid exceeds the heat pump's max power")
        if self.mbrl.history_length != self.history_length \
                or self.mfrl.history_length != self.history_length:
            raise ValueError("agent history lengths must match the scenario")
        self.backup_config()  # trips must be ordered

    def backup_config(self) -> BackupConfig:
        band0 = self.band_schedule.band_at(0)
        low = self.backup_low_trip if self.backup_low_trip is not None else band0.t_min
        high = self.backup_high_trip if self.backup_high_trip is not None else band0.t_max
        return BackupConfig(self.backup_enabled, low, high)


@dataclass(frozen=True)
class ConvergenceEstimate:
    converged: bool
    day: int  # 1-based first day of the all-clean tail; -1 when never
    hours_of_experience: int


@dataclass
class RunReport:
    scenario_name: str
    agent: str
    agent_log_path: str
    baseline_log_path: str
    consumption_change_pct: float
    cost_change_pct: float
    comfort_loss_eur: float
    wall_seconds: float
    convergence: ConvergenceEstimate | None
    extra_paths: dict = field(default_factory=dict)


def _build_traces(scenario: Scenario) -> tuple[AmbientTrace, TariffSignal]:
    horizon = scenario.horizon_hours()
    ss = np.random.SeedSequence(scenario.seed)
    ambient_seed, tariff_seed, _ = (int(c.generate_state(1)[0]) for c in ss.spawn(3))
    if scenario.ambient_csv is not None:
        trace = load_ambient_csv(scenario.ambient_csv)
        if len(trace) < horizon + 1:
            raise ValueError(f"ambient CSV provides {len(trace)} hours; "
                             f"need {horizon + 1} (one beyond the run)")
    else:
        # one extra day so the final observation still has an ambient value
        trace = make_synthetic_ambient(ambient_seed, scenario.days + 1, scenario.ambient)
    tariff_cfg = scenario.tariff
    if scenario.tariff_kind == "real_time":
        tariff_cfg = replace(tariff_cfg, rtp_seed=tariff_seed)
    tariff = make_tariff(scenario.tariff_kind, horizon, tariff_cfg)
    return trace, tariff


def _agent_rng(scenario: Scenario) -> np.random.Generator:
    ss = np.random.SeedSequence(scenario.seed)
    return np.random.default_rng(ss.spawn(3)[2])


def _simulate(scenario: Scenario, agent_kind: str, trace: AmbientTrace,
              tariff: TariffSignal) -> tuple[EpisodeLog, object]:
    horizon = scenario.horizon_hours()
    n = scenario.history_length
    backup = scenario.backup_config()
    schedule = scenario.band_schedule
    grid = scenario.grid
    rng = _agent_rng(scenario)

    agent: object = None
    if agent_kind == "mpc":
        agent = MpcController(scenario.building, grid, scenario.mpc, rng)
    elif agent_kind == "mbrl":
        agent = ModelBasedAgent(scenario.mbrl, grid, rng, seed=scenario.seed)
    elif agent_kind == "mfrl":
        agent = ModelFreeAgent(scenario.mfrl, grid, rng, seed=scenario.seed)
    elif agent_kind != "rbc":
        raise ValueError(f"unknown agent kind {agent_kind!r}")

    state = BuildingState(scenario.initial_temp_c, scenario.initial_temp_c, 0)
    history = deque([scenario.initial_temp_c] * (n + 1), maxlen=n + 1)
    log = EpisodeLog()

    for t in range(horizon):
        controlled = t >= scenario.warmup_hours
        obs = encode_state(list(history), trace[t], n)
        band_now = schedule.band_at(t)

        if controlled and t % 24 == 0:
            if agent_kind == "mbrl":
                window = min(24, horizon - t)
                agent.daily_update(obs, tariff.window(t, window),
                                   trace.as_array()[t:t + window], band_now)
            elif agent_kind == "mfrl":
                agent.daily_update()

        if not controlled:
            action = 0
        elif agent_kind == "rbc":
            action = rbc_action(state.indoor_temp, band_now, scenario.rbc, grid)
        elif agent_kind == "mpc":
            window = min(scenario.mpc.horizon, horizon - t)
            action = agent.decide(state, obs, tariff.window(t, window),
                                  trace.as_array()[t:t + window], band_now)
        elif agent_kind == "mbrl":
            action = agent.act(obs, t % 24)
        else:
            action = agent.act(obs, t)

        state, applied = step(state, scenario.building, trace[t],
                              grid.levels_w[action], backup)
        history.appendleft(state.indoor_temp)

        band_arrival = schedule.band_at(t + 1)
        r_cons = consumption_reward(applied, tariff[t])
        r_comfort = comfort_reward(state.indoor_temp, band_arrival)
        log.append(StepRecord(t, trace[t], state.indoor_temp, state.envelope_temp,
                              applied, tariff[t], r_cons, r_comfort))

        if controlled and agent_kind in ("mbrl", "mfrl"):
            obs_next = encode_state(list(history), trace[t + 1], n)
            agent.observe(TransitionSample(obs, action, obs_next,
                                           RewardComponents(r_cons, r_comfort)))
    return log, agent


def run_scenario(scenario: Scenario, out_dir) -> RunReport:
    """Run the scenario's agent plus the RBC denominator; write CSVs."""
    scenario.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace, tariff = _build_traces(scenario)

    t0 = time.perf_counter()
    agent_log, agent = _simulate(scenario, scenario.agent, trace, tariff)
    wall = time.perf_counter() - t0
    if scenario.agent == "rbc":
        baseline_log = agent_log
    else:
        baseline_log, _ = _simulate(scenario, "rbc", trace, tariff)

    controlled_agent = agent_log.slice_hours(scenario.warmup_hours)
    controlled_base = baseline_log.slice_hours(scenario.warmup_hours)
    metrics = log_metrics(controlled_agent, controlled_base)

    agent_path = out / f"{scenario.name}_{scenario.agent}.csv"
    base_path = out / f"{scenario.name}_rbc_baseline.csv"
    agent_log.write_csv(agent_path)
    baseline_log.write_csv(base_path)

    extra = {}
    if scenario.agent == "mbrl":
        mae_path = out / f"{scenario.name}_model_mae.csv"
        _write_mae_csv(mae_path, agent.mae_history)
        extra["model_mae"] = str(mae_path)
    elif scenario.agent == "mfrl":
        q_path = out / f"{scenario.name}_qtrace.csv"
        _write_qtrace_csv(q_path, agent.q_trace, len(scenario.grid))
        extra["qtrace"] = str(q_path)

    metrics_path = out / f"{scenario.name}_metrics.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("agent,consumption_change_pct,cost_change_pct,comfort_loss_eur\n")
        fh.write(f"{scenario.agent},{metrics[0]!r},{metrics[1]!r},{metrics[2]!r}\n")
    extra["metrics"] = str(metrics_path)

    convergence = None
    if len(controlled_agent) >= 7 * 24:
        convergence = estimate_convergence(controlled_agent)

    return RunReport(scenario.name, scenario.agent, str(agent_path), str(base_path),
                     metrics[0], metrics[1], metrics[2], wall, convergence, extra)


def _write_mae_csv(path, mae_history) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("day,holdout_mae_c\n")
        for day, mae in mae_history:
            fh.write(f"{day},{mae!r}\n")


def _write_qtrace_csv(path, q_trace, n_actions: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("hour," + ",".join(f"q{i}" for i in range(n_actions)) + ",chosen\n")
        for hour, q, chosen in q_trace:
            fh.write(f"{hour}," + ",".join(repr(v) for v in q) + f",{chosen}\n")


@dataclass(frozen=True)
class SuiteConfig:
    name: str = "suite"
    days: int = 30
    seed: int = 0
    tariff_kind: str = "flat"
    agents: tuple[str, ...] = AGENT_KINDS
    base: Scenario = field(default_factory=Scenario)


def run_suite(cfg: SuiteConfig, out_dir) -> list[dict]:
    """Run each agent on bit-identical traces; write one comparison table.

    A failing agent contributes an error row; the suite continues.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    for agent in cfg.agents:
        scenario = replace(cfg.base, name=f"{cfg.name}_{agent}", agent=agent,
                           days=cfg.days, seed=cfg.seed, tariff_kind=cfg.tariff_kind)
        row = {"agent": agent}
        try:
            report = run_scenario(scenario, out)
            row.update(
                consumption_change_pct=report.consumption_change_pct,
                cost_change_pct=report.cost_change_pct,
                comfort_loss_eur=report.comfort_loss_eur,
                wall_clock_s=report.wall_seconds,
                convergence_hours=(report.convergence.hours_of_experience
                                   if report.convergence and report.convergence.converged
                                   else ""),
                status="ok",
            )
        except Exception as exc:  # record and continue with the other agents
            row.update(consumption_change_pct="", cost_change_pct="",
                       comfort_loss_eur="", wall_clock_s="", convergence_hours="",
                       status=f"error: {exc}")
        rows.append(row)

    table_path = out / f"{cfg.name}_table.csv"
    cols = ["agent", "consumption_change_pct", "cost_change_pct", "comfort_loss_eur",
            "wall_clock_s", "convergence_hours", "status"]
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    return rows


def estimate_convergence(log: EpisodeLog, threshold_eur: float = 0.05,
                         window_days: int = 3) -> ConvergenceEstimate:
    """First day whose every following 3-day comfort-penalty window is clean.

    Days are 1-based within the log.  Returns the sentinel day -1 when no
    all-clean tail exists.
    """
    n_days = len(log) // 24
    if n_days < 7:
        raise ValueError("need at least 7 days of log to estimate convergence")
    daily = np.array([
        -sum(r.r_comfort for r in log.steps[d * 24:(d + 1) * 24])
        for d in range(n_days)
    ])
    windows = np.array([daily[d:d + window_days].sum()
                        for d in range(n_days - window_days + 1)])
    dirty = np.nonzero(windows >= threshold_eur)[0]
    if len(dirty) == 0:
        return ConvergenceEstimate(True, 1, 0)
    first_clean = int(dirty[-1]) + 1  # 0-based window start of the clean tail
    if first_clean >= len(windows):
        return ConvergenceEstimate(False, -1, n_days * 24)
    day = first_clean + 1  # 1-based day index
    return ConvergenceEstimate(True, day, (day - 1) * 24)


def emit_plot_data(log_path, kind: str, out_dir, band: ComfortBand = ComfortBand(),
                   levels_w=None) -> str:
    """Write a plot-ready CSV derived from an episode (or MAE) log."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(log_path).stem
    dest = out / f"{stem}_{kind}.csv"

    if kind == "model_mae":
        with open(log_path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "day,holdout_mae_c":
                raise ValueError(f"{log_path}: not a model-MAE log")
            body = fh.read()
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(header + "\n" + body)
        return str(dest)

    log = EpisodeLog.read_csv(log_path)
    if kind == "temperature_trace":
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write("hour,t_i,t_a,band_low,band_high\n")
            for r in log.steps:
                fh.write(f"{r.hour},{r.t_i!r},{r.t_a!r},{band.t_min!r},{band.t_max!r}\n")
    elif kind == "action_histogram":
        counts: dict[float, int] = {}
        for r in log.steps:
            counts[r.power_w] = counts.get(r.power_w, 0) + 1
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write("level_w,count\n")
            for level in sorted(counts):
                fh.write(f"{level!r},{counts[level]}\n")
    else:  # hourly_action_heatmap
        levels = tuple(levels_w) if levels_w is not None else ActionGrid().levels_w
        matrix = np.zeros((24, len(levels)), dtype=int)
        for r in log.steps:
            try:
                col = levels.index(r.power_w)
            except ValueError:
                raise ValueError(f"power {r.power_w} W not on the action grid") from None
            matrix[r.hour % 24, col] += 1
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write("hour_of_day," + ",".join(f"n_{int(l)}w" for l in levels) + "\n")
            for h in range(24):
                fh.write(f"{h}," + ",".join(str(c) for c in matrix[h]) + "\n")
    return str(dest)


# ---------------------------------------------------------------------------
# Plain key-value (INI) configuration files
# ---------------------------------------------------------------------------

def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return parser


def _section_kwargs(parser, section, casts) -> dict:
    if not parser.has_section(section):
        return {}
    out = {}
    for key, raw in parser.items(section):
        if key not in casts:
            raise ValueError(f"[{section}] has unknown key {key!r}")
        out[key] = casts[key](raw)
    return out


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _bool(raw: str) -> bool:
    try:
        return _BOOL[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {raw!r}") from None


def _int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.replace(",", " ").split())


def _parse_band_phases(raw: str) -> BandSchedule:
    phases = []
    for part in raw.split(","):
        start, t_min, t_max = part.strip().split(":")
        phases.append((int(start), ComfortBand(float(t_min), float(t_max))))
    return BandSchedule(tuple(phases))


def scenario_from_ini(path, overrides: dict | None = None) -> Scenario:
    """Build a Scenario from an INI file; `overrides` wins over file values."""
    parser = _read_ini(path)
    overrides = dict(overrides or {})

    main = _section_kwargs(parser, "scenario", {
        "name": str, "days": int, "agent": str, "seed": int,
        "price": str, "backup": _bool, "warmup_hours": int,
        "initial_temp_c": float, "history_length": int,
        "backup_low_trip": float, "backup_high_trip": float,
        "ambient_csv": str,
    })
    if "price" in main:
        main["tariff_kind"] = {"flat": "flat", "dual": "dual",
                               "rtp": "real_time"}.get(main.pop("price"))
        if main["tariff_kind"] is None:
            raise ValueError("price must be flat, dual or rtp")
    if "backup" in main:
        main["backup_enabled"] = main.pop("backup")

    building = _section_kwargs(parser, "building", {
        "indoor_capacitance": float, "envelope_capacitance": float,
        "ambient_conductance": float, "envelope_conductance": float,
        "cop": float, "max_power_w": float, "substep_seconds": int})
    ambient = _section_kwargs(parser, "ambient", {
        "mean_c": float, "drift_start_c": float, "drift_end_c": float,
        "daily_amplitude_c": float, "ar1_coeff": float, "noise_sigma_c": float})
    tariff = _section_kwargs(parser, "tariff", {
        "flat_price": float, "day_price": float, "night_price": float,
        "day_start_hour": int, "day_end_hour": int, "rtp_base": float,
        "rtp_step": float, "rtp_min": float, "rtp_max": float, "rtp_seed": int})
    rbc = _section_kwargs(parser, "rbc", {"hysteresis_c": float})
    cem = _section_kwargs(parser, "cem", {
        "population": int, "elite_fraction": float, "iterations": int,
        "smoothing": float})
    ga = _section_kwargs(parser, "ga", {
        "population": int, "generations": int, "tournament_size": int,
        "crossover_rate": float, "mutation_rate": float})
    mpc = _section_kwargs(parser, "mpc", {
        "planner": str, "horizon": int, "warm_start": _bool})
    mbrl = _section_kwargs(parser, "mbrl", {
        "history_length": int, "memory_capacity": int, "epsilon_initial": float,
        "epsilon_exponent": float, "hidden": _int_tuple, "activation": str,
        "learning_rate": float, "epochs_per_update": int, "batch_size": int,
        "min_train_samples": int, "holdout_fraction": float, "planner": str})
    mfrl = _section_kwargs(parser, "mfrl", {
        "history_length": int, "hidden": _int_tuple, "activation": str,
        "learning_rate": float, "gamma": float, "tau": float, "batch_size": int,
        "capacity": int, "warmup_samples": int, "priority_alpha": float,
        "priority_offset": float, "epsilon_initial": float,
        "epsilon_exponent": float, "train_cycles_per_update": int,
        "selection_by_target": _bool, "random_until_warmup": _bool})

    band_schedule = None
    if parser.has_section("band"):
        if parser.has_option("band", "phases"):
            band_schedule = _parse_band_phases(parser.get("band", "phases"))
        else:
            band = ComfortBand(parser.getfloat("band", "t_min", fallback=19.0),
                               parser.getfloat("band", "t_max", fallback=23.0))
            band_schedule = BandSchedule.constant(band)

    main.update(overrides)
    history = main.get("history_length", Scenario().history_length)
    cem_cfg = CemConfig(**cem)
    ga_cfg = GaConfig(**ga)
    scenario = Scenario(
        **main,
        building=BuildingParams(**building),
        ambient=AmbientGenParams(**ambient),
        tariff=TariffConfig(**tariff),
        rbc=RbcConfig(**rbc),
        mpc=MpcConfig(cem=cem_cfg, ga=ga_cfg, **mpc),
        mbrl=MbrlConfig(cem=cem_cfg, ga=ga_cfg,
                        **{"history_length": history, **mbrl}),
        mfrl=MfrlConfig(**{"history_length": history, **mfrl}),
        **({"band_schedule": band_schedule} if band_schedule else {}),
    )
    scenario.validate()
    return scenario


def suite_from_ini(path, overrides: dict | None = None) -> SuiteConfig:
    parser = _read_ini(path)
    head = _section_kwargs(parser, "suite", {
        "name": str, "days": int, "seed": int, "price": str, "agents": str})
    head.update(overrides or {})
    tariff_kind = {"flat": "flat", "dual": "dual", "rtp": "real_time"}.get(
        head.pop("price", "flat"))
    if tariff_kind is None:
        raise ValueError("price must be flat, dual or rtp")
    agents = tuple(a.strip() for a in head.pop("agents", "rbc,mpc,mbrl,mfrl").split(","))
    for a in agents:
        if a not in AGENT_KINDS:
            raise ValueError(f"unknown agent {a!r} in suite config")
    base = scenario_from_ini(path, {"days": head.get("days", 30),
                                    "seed": head.get("seed", 0)}) \
        if parser.has_section("scenario") else Scenario()
    return SuiteConfig(name=head.get("name", "suite"), days=head.get("days", 30),
                       seed=head.get("seed", 0), tariff_kind=tariff_kind,
                       agents=agents, base=base)
