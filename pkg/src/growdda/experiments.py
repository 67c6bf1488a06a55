"""Configuration, seeding and experiment drivers.

Seeding: the sensor graph and the design solver use ``seed`` directly; the
data of trial ``j`` is drawn from ``SeedSequence(seed, spawn_key=(1, j))``,
so adding trials never changes earlier ones.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .dda import (ProblemInstance, ScheduleSpec, checkpoint_times, convergence_time, run_dda, step_constant,
                  version_spectrum)
from .design import (
    SelectionProblem,
    SelectionResult,
    connectivity_distance,
    greedy_result,
    projected_subgradient_solve,
)
from .graph import CostModel, DynamicNetwork, Graph, edge_costs, random_sensor_graph
from .theory import DegenerateWarning, bound_report, thm2_bound

AXES = ("gamma", "budget", "delta")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GraphConfig:
    n: int = 50
    radius: float = 0.2


@dataclass(frozen=True)
class CostConfig:
    tau1: float = 10.0
    tau2: float = 0.5
    d0: float = 0.7


@dataclass(frozen=True)
class DesignConfig:
    method: str = "subgradient"
    mode: str = "C2"
    gamma: float = 0.01
    k: Optional[int] = 300
    iters: int = 2000
    step_scale: float = 0.2


@dataclass(frozen=True)
class ScheduleConfig:
    Delta: int = 1
    ordering: str = "greedy"


@dataclass(frozen=True)
class DdaConfig:
    T: int = 5000
    p: int = 5
    R: float = 5.0
    trials: int = 20
    checkpoint_every: Optional[int] = None


@dataclass(frozen=True)
class TheoryConfig:
    enabled: bool = True
    epsilon: float = 0.1


@dataclass(frozen=True)
class DecentralizedConfig:
    N1: int = 300
    N2: int = 1000
    enabled: bool = False


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "gamma"
    values: tuple = ()


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    graph: GraphConfig = field(default_factory=GraphConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    design: DesignConfig = field(default_factory=DesignConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    dda: DdaConfig = field(default_factory=DdaConfig)
    theory: TheoryConfig = field(default_factory=TheoryConfig)
    decentralized: DecentralizedConfig = field(default_factory=DecentralizedConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def validate(self) -> "ExperimentConfig":
        g, d, s, r = self.graph, self.design, self.schedule, self.dda
        if g.n < 2:
            raise ConfigError("graph.n must be >= 2")
        if not g.radius > 0:
            raise ConfigError("graph.radius must be positive")
        if d.method not in ("subgradient", "greedy"):
            raise ConfigError("design.method must be subgradient or greedy")
        if d.mode not in ("C1", "C2"):
            raise ConfigError("design.mode must be C1 or C2")
        if d.gamma < 0:
            raise ConfigError("design.gamma must be >= 0")
        if (d.mode == "C2" or d.method == "greedy") and (d.k is None or d.k < 0):
            raise ConfigError("design.k is required (>= 0) for C2 or greedy designs")
        if d.iters < 1 or d.step_scale <= 0:
            raise ConfigError("design.iters and design.step_scale must be positive")
        if r.T < 1 or r.p < 1 or r.R <= 0 or r.trials < 1:
            raise ConfigError("dda.T, dda.p, dda.R and dda.trials must be positive")
        if r.checkpoint_every is not None and r.checkpoint_every < 1:
            raise ConfigError("dda.checkpoint_every must be >= 1")
        if not 1 <= s.Delta <= r.T:
            raise ConfigError("schedule.Delta must lie in [1, T]")
        if s.ordering not in ("greedy", "given"):
            raise ConfigError("schedule.ordering must be greedy or given")
        if self.decentralized.N1 < 1 or self.decentralized.N2 < 1:
            raise ConfigError("decentralized.N1 and N2 must be positive")
        if not self.theory.epsilon > 0:
            raise ConfigError("theory.epsilon must be positive")
        if self.sweep.axis not in AXES:
            raise ConfigError(f"sweep.axis must be one of {AXES}")
        return self


def desk_config() -> ExperimentConfig:
    return ExperimentConfig()


def paper_config() -> ExperimentConfig:
    return ExperimentConfig(
        graph=GraphConfig(n=100, radius=0.15),
        design=DesignConfig(k=1000),
        dda=DdaConfig(T=20000),
    )


SCALES = {"desk": desk_config, "paper": paper_config}


def _merge(obj, updates: dict, where: str):
    if not isinstance(updates, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(obj)}
    changes = {}
    for key, val in updates.items():
        if key not in names:
            raise ConfigError(f"unknown key {where + '.' if where else ''}{key}")
        cur = getattr(obj, key)
        if dataclasses.is_dataclass(cur):
            changes[key] = _merge(cur, val, f"{where}.{key}" if where else key)
        elif key == "values":
            changes[key] = tuple(val)
        else:
            changes[key] = val
    return replace(obj, **changes)


def config_from_dict(data: Optional[dict], scale: str = "desk") -> ExperimentConfig:
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}")
    cfg = SCALES[scale]()
    if data:
        cfg = _merge(cfg, data, "")
    return cfg.validate()


def load_config(path=None, scale: str = "desk") -> ExperimentConfig:
    data = None
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data, scale)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["sweep"]["values"] = list(d["sweep"]["values"])
    return d


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, trial)))


# pipeline pieces


def build_graph(cfg: ExperimentConfig) -> Graph:
    return random_sensor_graph(cfg.graph.n, cfg.graph.radius, seed=cfg.seed)


def cost_model(cfg: ExperimentConfig) -> CostModel:
    return CostModel(cfg.cost.tau1, cfg.cost.tau2, cfg.cost.d0)


def build_problem(cfg: ExperimentConfig, graph: Graph, gamma=None, budget=None) -> SelectionProblem:
    d = cfg.design
    k = d.k if budget is None else budget
    gamma = d.gamma if gamma is None else gamma
    return SelectionProblem.from_graph(graph, gamma=gamma, mode=d.mode, k=k if d.mode == "C2" else None,
                                       cost_model=cost_model(cfg))


def design(cfg: ExperimentConfig, graph: Graph, gamma=None, budget=None) -> tuple[SelectionProblem, SelectionResult]:
    d = cfg.design
    problem = build_problem(cfg, graph, gamma, budget)
    k = d.k if budget is None else budget
    if k is not None and k > problem.K:
        raise ConfigError(f"budget {k} exceeds the {problem.K} candidate edges")
    if d.method == "greedy":
        return problem, greedy_result(problem, k, seed=cfg.seed)
    if d.mode == "C2" and k in (0, problem.K):
        # the feasible set is a single point
        w = np.full(problem.K, float(k > 0))
        sel = [(c.i, c.j) for c in problem.candidates] if k else []
        return problem, SelectionResult(w, w.astype(int), np.zeros(0), sel)
    res = projected_subgradient_solve(problem, step_scale=d.step_scale, iters=d.iters, seed=cfg.seed)
    return problem, res


def schedule(cfg: ExperimentConfig, graph: Graph, selected, Delta=None) -> DynamicNetwork:
    spec = ScheduleSpec(tuple(selected), Delta=cfg.schedule.Delta if Delta is None else Delta,
                        T=cfg.dda.T, ordering=cfg.schedule.ordering)
    return spec.network(graph, seed=cfg.seed)


def trial_instance(cfg: ExperimentConfig, trial: int) -> ProblemInstance:
    return ProblemInstance.random(cfg.graph.n, p=cfg.dda.p, R=cfg.dda.R, rng=trial_rng(cfg.seed, trial))


def run_trials(cfg: ExperimentConfig, network: DynamicNetwork, trials: Optional[int] = None) -> list:
    trials = cfg.dda.trials if trials is None else trials
    out = []
    for j in range(trials):
        inst = trial_instance(cfg, j)
        out.append(run_dda(inst, network, cfg.dda.T, checkpoint_every=cfg.dda.checkpoint_every))
    return out


@dataclass(eq=False)
class TheoryOverlay:
    """Per-checkpoint mixing times and, per trial, the bound series at those checkpoints."""

    report: object
    bounds: np.ndarray  # (trials, checkpoints)
    regrets: np.ndarray  # (trials, checkpoints)

    @property
    def dominated(self) -> bool:
        return bool(np.all(self.bounds >= self.regrets))


def theory_overlay(cfg: ExperimentConfig, network: DynamicNetwork, trajectories, checkpoints=None) -> TheoryOverlay:
    """Regret bounds for every trial, using that trial's own Lipschitz constant."""
    T, R = cfg.dda.T, cfg.dda.R
    cps = trajectories[0].t if checkpoints is None else np.asarray(checkpoints)
    L_ref = trial_instance(cfg, 0).L
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        rep = bound_report(network, R, L_ref, T, checkpoints=cps, epsilon=cfg.theory.epsilon)
    sig0 = version_spectrum(network, 0).sigma2_P
    bounds, regrets = [], []
    for j, tr in enumerate(trajectories):
        Lj = trial_instance(cfg, j).L
        idx = np.searchsorted(tr.t, cps)
        bounds.append([thm2_bound(R, Lj, sig0, int(d), int(t)) for d, t in zip(rep.delta_star_series, cps)])
        regrets.append(tr.max_regret[idx])
    return TheoryOverlay(rep, np.asarray(bounds), np.asarray(regrets))


SWEEP_FIELDS = (
    "axis", "regret_mean", "regret_stderr", "thm2_bound", "delta_star", "edges_added", "cost_total",
    "connectivity_distance", "conv_time_mean", "prop3_scale",
)


@dataclass(eq=False)
class SweepResult:
    axis_name: str
    rows: list  # dicts keyed by SWEEP_FIELDS

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def table(self):
        return [[r[c] for c in SWEEP_FIELDS] for r in self.rows]


def _stderr(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def evaluate_row(cfg: ExperimentConfig, axis_value, graph, problem, result, Delta=None, run=True) -> dict:
    network = schedule(cfg, graph, result.selected_edges, Delta=Delta)
    added = len(network.additions)
    sel_costs = edge_costs(graph, result.selected_edges, cost_model(cfg)) if result.selected_edges else np.zeros(0)
    row = {
        "axis": axis_value,
        "regret_mean": math.nan,
        "regret_stderr": math.nan,
        "thm2_bound": math.nan,
        "delta_star": math.nan,
        "edges_added": added,
        "cost_total": float(np.sum(sel_costs)),
        "connectivity_distance": connectivity_distance(problem, result.w_binary),
        "conv_time_mean": math.nan,
        "prop3_scale": math.nan,
    }
    if not run:
        return row
    trajs = run_trials(cfg, network)
    final = np.array([tr.max_regret[-1] for tr in trajs])
    row["regret_mean"] = float(final.mean())
    row["regret_stderr"] = _stderr(final)
    row["conv_time_mean"] = float(np.mean([convergence_time(tr, cfg.theory.epsilon) for tr in trajs]))
    if cfg.theory.enabled:
        ov = theory_overlay(cfg, network, trajs, checkpoints=[cfg.dda.T])
        row["thm2_bound"] = float(ov.bounds[:, -1].min())
        row["delta_star"] = int(ov.report.delta_star)
        row["prop3_scale"] = float(ov.report.prop3_scale)
        row["_dominated"] = ov.dominated
    row["_final"] = final
    return row


def sweep_gamma(cfg: ExperimentConfig, gammas: Sequence[float], run: bool = True) -> SweepResult:
    if len(gammas) == 0:
        raise ConfigError("gamma list is empty")
    graph = build_graph(cfg)
    rows = []
    for g in sorted(float(x) for x in gammas):
        problem, res = design(cfg, graph, gamma=g)
        rows.append(evaluate_row(cfg, g, graph, problem, res, run=run))
    return SweepResult("gamma", rows)


def default_budgets(K: int) -> list[int]:
    return sorted({0, min(100, K), min(300, K), K // 2, K})


def sweep_edges_vs_regret(cfg: ExperimentConfig, budgets: Optional[Sequence[int]] = None, run: bool = True) -> SweepResult:
    graph = build_graph(cfg)
    cfg = replace(cfg, design=replace(cfg.design, mode="C2"))
    if budgets is None:
        budgets = default_budgets(build_problem(cfg, graph, budget=0).K)
    budgets = [int(b) for b in budgets]
    if budgets != sorted(budgets):
        raise ConfigError("budgets must be ascending")
    rows = []
    for b in budgets:
        problem, res = design(cfg, graph, budget=b)
        rows.append(evaluate_row(cfg, b, graph, problem, res, run=run))
    return SweepResult("budget", rows)


def sweep_delta(cfg: ExperimentConfig, deltas: Optional[Sequence[int]] = None, run: bool = True) -> SweepResult:
    T = cfg.dda.T
    deltas = [1, 50, 500, T] if deltas is None else [int(d) for d in deltas]
    for d in deltas:
        if not 1 <= d <= T:
            raise ConfigError("every Delta must lie in [1, T]")
    graph = build_graph(cfg)
    problem, res = design(cfg, graph)
    rows = [evaluate_row(cfg, d, graph, problem, res, Delta=d, run=run) for d in sorted(set(deltas))]
    return SweepResult("delta", rows)


def run_sweep(cfg: ExperimentConfig, axis: Optional[str] = None, values=None) -> SweepResult:
    axis = cfg.sweep.axis if axis is None else axis
    values = (list(cfg.sweep.values) or None) if values is None else list(values)
    if axis == "gamma":
        return sweep_gamma(cfg, values if values is not None else [0.0, 0.001, 0.01, 0.1, 1.0])
    if axis == "budget":
        return sweep_edges_vs_regret(cfg, values)
    if axis == "delta":
        return sweep_delta(cfg, values)
    raise ConfigError(f"unknown sweep axis {axis!r}")


def checkpoints_for(cfg: ExperimentConfig) -> np.ndarray:
    return checkpoint_times(cfg.dda.T, cfg.dda.checkpoint_every)


def prescribed_step(cfg: ExperimentConfig, network: DynamicNetwork, trial: int = 0) -> float:
    inst = trial_instance(cfg, trial)
    return step_constant(inst.R, inst.L, version_spectrum(network, 0).sigma2_P)
