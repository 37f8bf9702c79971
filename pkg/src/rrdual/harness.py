"""Monte Carlo experiment driver, table reproduction and report output."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .auxiliary import (AuxSpec, GordonCheckSpec, GordonReport, UnboundedAuxError,
                        eval_aux_bp, eval_aux_lp, gordon_check)
from .numerics import RngStream, gaussian_vector
from .primal import NonConvergedError, SolverConfig, solve_primal
from .problem import ConfigurationError, ObjectiveKind, ObjectiveSpec, ShapeConfig, sample_instance
from .theory import EpsilonConfig, Side, TheoryResult, xi_bp, xi_gl, xi_lp

CSV_COLUMNS = ("param", "n", "trials", "sim_mean", "sim_std", "ci95",
               "theory_lower", "theory_upper", "excluded")
UNRELIABLE_FRACTION = 0.2
TABLE1_ALPHA2 = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
TABLE2_BETA = (0.42, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class Mode(enum.Enum):
    PRIMAL_SIM = "primal"
    AUX_SIM = "aux"
    THEORY_ONLY = "theory"
    GORDON_CHECK = "gordon"


@dataclass(frozen=True)
class ExperimentSpec:
    mode: Mode
    shape: ShapeConfig
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec.purely_linear)
    trials: int = 200
    master_seed: int = 0
    eps: EpsilonConfig = EpsilonConfig()
    solver: SolverConfig = SolverConfig()
    # gordon mode only; defaults to the lower theory value times sqrt(n)
    offset_level: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must fit in 64 bits")
        self.objective.check_dim(self.shape.n)


@dataclass(frozen=True)
class ExperimentReport:
    param: float
    n: int
    trials: int
    mean_over_sqrt_n: float
    std_over_sqrt_n: float
    ci95_halfwidth: float
    trials_used: int
    trials_excluded: int
    theory_lower: float
    theory_upper: float
    unreliable: bool = False
    config: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {"param": self.param, "n": self.n, "trials": self.trials,
                "sim_mean": self.mean_over_sqrt_n, "sim_std": self.std_over_sqrt_n,
                "ci95": self.ci95_halfwidth, "theory_lower": self.theory_lower,
                "theory_upper": self.theory_upper, "excluded": self.trials_excluded}


def thread_count() -> int:
    raw = os.environ.get("RRD_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"RRD_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigurationError("RRD_THREADS must be at least 1")
    return value


def theory_value(shape: ShapeConfig, objective: ObjectiveSpec,
                 eps: EpsilonConfig = EpsilonConfig(), side: Side = Side.LOWER) -> TheoryResult:
    if objective.kind is ObjectiveKind.PURELY_LINEAR:
        return xi_lp(shape.alpha1, shape.alpha2, eps, side)
    if objective.kind is ObjectiveKind.GENERAL_LINEAR:
        return xi_gl(objective.c, shape.alpha1, shape.alpha2, eps, side)
    beta = shape.beta if objective.k == shape.k else objective.k / shape.n
    with warnings.catch_warnings():
        # the results tables sweep beta past alpha1 on purpose
        warnings.filterwarnings("ignore", message="beta = .* exceeds alpha1")
        return xi_bp(beta, shape.alpha1, shape.alpha2, eps, side)


def _swept_param(spec: ExperimentSpec) -> float:
    if spec.objective.kind is ObjectiveKind.BP_SPLIT:
        return spec.shape.beta
    return spec.shape.alpha2


def _primal_trial(spec: ExperimentSpec, t: int) -> float | None:
    stream = RngStream(spec.master_seed, t)
    inst = sample_instance(spec.shape, spec.objective, stream, allow_beta_above_alpha1=True)
    try:
        sol = solve_primal(inst, spec.solver, strict=True)
    except (NonConvergedError, np.linalg.LinAlgError):
        return None
    return sol.objective / math.sqrt(spec.shape.n)


def _aux_trial(spec: ExperimentSpec, t: int) -> float | None:
    stream = RngStream(spec.master_seed, t)
    g = gaussian_vector(stream, spec.shape.n)
    aux = AuxSpec(Side.LOWER, spec.shape, spec.eps, spec.objective)
    evaluate = eval_aux_bp if spec.objective.kind is ObjectiveKind.BP_SPLIT else eval_aux_lp
    try:
        return evaluate(g, aux, stream_id=t).value / math.sqrt(spec.shape.n)
    except UnboundedAuxError:
        return None


def run_trials(spec: ExperimentSpec) -> list[float | None]:
    """Per-trial value/sqrt(n) (None when excluded), ordered by trial index."""
    work = _primal_trial if spec.mode is Mode.PRIMAL_SIM else _aux_trial
    threads = min(thread_count(), spec.trials)
    if threads == 1:
        return [work(spec, t) for t in range(spec.trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: work(spec, t), range(spec.trials)))


def summarize(values: list[float | None]) -> tuple[float, float, int]:
    """(mean, sample std, used) with a fixed-order compensated sum."""
    used = [v for v in values if v is not None]
    if not used:
        return math.nan, math.nan, 0
    mean = math.fsum(used) / len(used)
    if len(used) == 1:
        return mean, 0.0, 1
    var = math.fsum((v - mean) ** 2 for v in used) / (len(used) - 1)
    return mean, math.sqrt(var), len(used)


def _config_echo(spec: ExperimentSpec) -> dict:
    obj = spec.objective
    return {"mode": spec.mode.value, "n": spec.shape.n, "alpha1": spec.shape.alpha1,
            "alpha2": spec.shape.alpha2, "beta": spec.shape.beta,
            "objective": obj.kind.value, "k": obj.k, "master_seed": spec.master_seed,
            "eps1": spec.eps.eps1_m, "eps5": spec.eps.eps5_g,
            "solver": asdict(spec.solver)}


def run_experiment(spec: ExperimentSpec) -> ExperimentReport | GordonReport:
    lower = theory_value(spec.shape, spec.objective, spec.eps, Side.LOWER).xi_over_sqrt_n
    upper = theory_value(spec.shape, spec.objective, spec.eps, Side.UPPER).xi_over_sqrt_n
    if spec.mode is Mode.GORDON_CHECK:
        offset = (lower * math.sqrt(spec.shape.n) if spec.offset_level is None
                  else spec.offset_level)
        return gordon_check(GordonCheckSpec(spec.shape, spec.objective, offset,
                                            spec.trials, spec.master_seed, spec.eps,
                                            spec.solver))
    param = _swept_param(spec)
    echo = _config_echo(spec)
    if spec.mode is Mode.THEORY_ONLY:
        return ExperimentReport(param, spec.shape.n, spec.trials, lower, 0.0, 0.0,
                                spec.trials, 0, lower, upper, False, echo)
    values = run_trials(spec)
    mean, std, used = summarize(values)
    excluded = spec.trials - used
    ci = 1.96 * std / math.sqrt(used) if used else math.nan
    return ExperimentReport(param, spec.shape.n, spec.trials, mean, std, ci, used,
                            excluded, lower, upper,
                            excluded > UNRELIABLE_FRACTION * spec.trials, echo)


def table_specs(which: int, n: int = 200, trials: int = 200, seed: int = 0,
                aux: bool = False, solver: SolverConfig = SolverConfig()) -> list[ExperimentSpec]:
    """One spec per column; every column reuses the same seed."""
    mode = Mode.AUX_SIM if aux else Mode.PRIMAL_SIM
    specs = []
    if which == 1:
        for a2 in TABLE1_ALPHA2:
            shape = ShapeConfig(n, 0.5, a2, 0.0)
            specs.append(ExperimentSpec(mode, shape, ObjectiveSpec.purely_linear(),
                                        trials, seed, solver=solver))
    elif which == 2:
        for beta in TABLE2_BETA:
            shape = ShapeConfig(n, 0.5, 0.5, beta)
            specs.append(ExperimentSpec(mode, shape, shape.objective("bp"),
                                        trials, seed, solver=solver))
    else:
        raise ConfigurationError(f"unknown table {which!r}; expected 1 or 2")
    return specs


def reproduce_table(which: int, n: int = 200, trials: int = 200, seed: int = 0,
                    aux: bool = False) -> list[ExperimentReport]:
    return [run_experiment(s) for s in table_specs(which, n, trials, seed, aux)]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def _round6(value):
    if isinstance(value, (bool, int, np.integer, np.bool_)):
        return value if not isinstance(value, np.generic) else value.item()
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.6g}")


def render_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        row = rep.row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def render_json(reports) -> str:
    rows = []
    for rep in reports:
        row = {k: _round6(v) for k, v in rep.row().items()}
        row["trials_used"] = rep.trials_used
        row["unreliable"] = bool(rep.unreliable)
        row["config"] = rep.config
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def emit_report(reports, fmt: str = "csv", path=None) -> str:
    """Write one report or a list of them as csv or json; returns the text.

    ``path`` of None (or "-") leaves writing to the caller.
    """
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    if fmt == "csv":
        text = render_csv(reports)
    elif fmt == "json":
        text = render_json(reports)
    else:
        raise ConfigurationError(f"unknown format {fmt!r}")
    if path is not None and str(path) != "-":
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text


GORDON_COLUMNS = ("offset", "n", "trials", "p_left", "p_left_upper", "p_right",
                  "left_lo", "left_hi", "right_lo", "right_hi", "consistent", "failures")


def render_gordon(reports: list[GordonReport], n: int, fmt: str = "csv") -> str:
    rows = []
    for rep in reports:
        rows.append({"offset": rep.offset_level / math.sqrt(n), "n": n,
                     "trials": rep.trials_used + rep.failures, "p_left": rep.p_left,
                     "p_left_upper": rep.p_left_upper, "p_right": rep.p_right,
                     "left_lo": rep.ci_left[0], "left_hi": rep.ci_left[1],
                     "right_lo": rep.ci_right[0], "right_hi": rep.ci_right[1],
                     "consistent": rep.consistent, "failures": rep.failures})
    if fmt == "json":
        return json.dumps([{k: _round6(v) for k, v in r.items()} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GORDON_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in GORDON_COLUMNS])
    return buf.getvalue()
