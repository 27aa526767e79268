"""Experiment configuration, Monte-Carlo trade-off runs, single-draw reports and the self-test."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .allocator import (
    SCHEME_ORDER,
    AllocationError,
    ProblemKind,
    Scheme,
    check_rank_one,
    compute_utopia,
    pareto_sweep,
    scalarized,
    solve_schemes,
    solve_single_objective,
    validate_weights,
    weight_grid,
)
from .channel import SystemConfig, gram_matrices, sample_channels
from .metrics import QosTargets, secrecy_floor
from .oracle import InfeasibleAtResolution, feasibility_residuals, grid_oracle
from .sdp import SolverOptions
from .sdp.conformance import analytic_cases, run_case
from .units import db_to_linear, dbm_to_watt, watt_to_dbm

log = logging.getLogger(__name__)

CSV_HEADER = (
    "lambda1",
    "lambda2",
    "scheme",
    "avg_tp_dbm",
    "avg_tp_w",
    "avg_eff_pct",
    "avg_csec_bps_hz",
    "rank1_rate",
    "prop2_rate",
    "n_feasible",
    "n_infeasible",
)
SWEEP_HEADER = (
    "lambda1",
    "lambda2",
    "scheme",
    "feasible",
    "tp_dbm",
    "tp_w",
    "eff_pct",
    "csec_bps_hz",
    "tau",
    "achieved_tau",
    "rank_one",
    "eigen_ratio",
    "prop2_holds",
)
BOUND_CAVEAT = (
    "F1* and F2* come from SDP relaxations and are bounds rather than attained values; "
    "the reported trade-off region is therefore an approximation of the true Pareto front."
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on. Physical values in the units named by the field."""

    num_antennas: int = 6
    num_receivers: int = 3
    carrier_freq_hz: float = 470e6
    reference_distance_m: float = 2.0
    max_distance_m: float = 10.0
    rician_factor_db: float = 3.0
    antenna_gain_db: float = 10.0
    breakpoint_distance_m: float = 5.0
    pathloss_exponent: float = 3.5
    noise_power_dbm: float = -23.0
    conversion_efficiency: float = 0.5
    gamma_req_db: float = 10.0
    gamma_tol_db: float = -10.0
    p_max_dbm: float = 20.0
    bandwidth_hz: float = 200e3  # carried into metadata only; all rates are per Hz
    lambda_points: int = 11
    lambda_grid: tuple | None = None
    realizations: int = 1000
    seed: int = 0
    schemes: tuple = tuple(s.value for s in SCHEME_ORDER)
    out: str = "tradeoff.csv"

    def __post_init__(self):
        schemes = tuple(Scheme(s).value for s in self.schemes)
        if not schemes:
            raise ValueError("schemes must be non-empty")
        object.__setattr__(self, "schemes", schemes)
        if self.lambda_grid is not None:
            grid = tuple(validate_weights(lam) for lam in self.lambda_grid)
            if not grid:
                raise ValueError("lambda_grid must be non-empty")
            object.__setattr__(self, "lambda_grid", grid)
        elif self.lambda_points < 1:
            raise ValueError("lambda_points must be at least 1")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        # constructing these validates the physical parameters
        self.system()
        self.qos()

    def system(self) -> SystemConfig:
        return SystemConfig(
            num_antennas=self.num_antennas,
            num_receivers=self.num_receivers,
            carrier_freq=self.carrier_freq_hz,
            reference_distance=self.reference_distance_m,
            max_distance=self.max_distance_m,
            rician_factor=float(db_to_linear(self.rician_factor_db)),
            antenna_gain=float(db_to_linear(self.antenna_gain_db)),
            noise_power=float(dbm_to_watt(self.noise_power_dbm)),
            conversion_efficiency=self.conversion_efficiency,
            breakpoint_distance=self.breakpoint_distance_m,
            pathloss_exponent=self.pathloss_exponent,
        )

    def qos(self) -> QosTargets:
        return QosTargets(
            gamma_req=float(db_to_linear(self.gamma_req_db)),
            gamma_tol=(float(db_to_linear(self.gamma_tol_db)),) * (self.num_receivers - 1),
            p_max=float(dbm_to_watt(self.p_max_dbm)),
            sigma_s2=float(dbm_to_watt(self.noise_power_dbm)),
        )

    def grid(self) -> list:
        return list(self.lambda_grid) if self.lambda_grid is not None else weight_grid(self.lambda_points)

    def scheme_list(self) -> list:
        return [Scheme(s) for s in self.schemes]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schemes"] = list(self.schemes)
        if self.lambda_grid is not None:
            d["lambda_grid"] = [list(lam) for lam in self.lambda_grid]
        return d

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every field except the output path."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        if data.get("lambda_grid") is not None:
            data["lambda_grid"] = tuple(tuple(lam) for lam in data["lambda_grid"])
        if "schemes" in data:
            data["schemes"] = tuple(data["schemes"])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls.from_dict(data)


# --------------------------------------------------------------------------
# Monte-Carlo trade-off


@dataclass(frozen=True)
class DrawRecord:
    """Per-draw summary of one scheme at one weight, kept for auditing a run."""

    index: int
    lam: tuple
    scheme: Scheme
    tp: float
    eta: float
    csec: float
    rank_one: bool
    eigen_ratio: float
    prop2_holds: bool
    tau: float
    achieved_tau: float
    trace_sum: float
    xi: float
    recovered: bool


@dataclass(frozen=True)
class TableRow:
    lam: tuple
    scheme: Scheme
    avg_tp_w: float
    avg_eff_pct: float
    avg_csec: float
    rank1_rate: float
    prop2_rate: float
    n_feasible: int
    n_infeasible: int

    @property
    def avg_tp_dbm(self) -> float:
        return float(watt_to_dbm(self.avg_tp_w)) if self.avg_tp_w > 0 else float("nan")

    @property
    def all_infeasible(self) -> bool:
        return not np.isfinite(self.avg_tp_w)


@dataclass
class MonteCarloResult:
    config: ExperimentConfig
    rows: list
    records: list = field(default_factory=list)
    infeasible_draws: int = 0
    elapsed_s: float = 0.0

    def row(self, lam, scheme) -> TableRow:
        lam = validate_weights(lam)
        for r in self.rows:
            if r.scheme is Scheme(scheme) and np.allclose(r.lam, lam, atol=1e-12):
                return r
        raise KeyError((lam, scheme))


def _fmt(x) -> str:
    # shortest round-trip repr keeps CSV output byte-stable across runs
    return repr(float(x))


def _record(index, lam, scheme, rep) -> DrawRecord:
    m = rep.metrics
    return DrawRecord(
        index=index,
        lam=lam,
        scheme=scheme,
        tp=m.tp,
        eta=m.eta,
        csec=m.csec,
        rank_one=rep.rank_one,
        eigen_ratio=rep.eigen_ratio,
        prop2_holds=rep.prop2_holds,
        tau=rep.tau,
        achieved_tau=rep.achieved_tau,
        trace_sum=rep.transformed.trace_sum,
        xi=rep.transformed.xi,
        recovered=rep.recovered is not None,
    )


def _draw(config: ExperimentConfig, grid: list, index: int, options):
    """Solve every weight and scheme for realization ``index``; ``None`` when the draw is infeasible."""
    system, qos = config.system(), config.qos()
    grams = gram_matrices(sample_channels(config.seed + index, system))
    try:
        utopia = compute_utopia(grams, qos, system.eps, options)
    except AllocationError:
        return None
    out = []
    infeasible: set = set()
    for lam in grid:
        reports = solve_schemes(grams, qos, system.eps, lam, utopia, config.scheme_list(), options, infeasible)
        out.append((lam, reports))
    return out


def _aggregate(lam, scheme, records: list, common: set, n_total: int) -> TableRow:
    own = [r for r in records if r.scheme is scheme and r.lam == lam]
    shared = sorted((r for r in own if r.index in common), key=lambda r: r.index)
    n_feas = len(own)
    if shared:
        tp = float(np.mean(np.array([r.tp for r in shared])))
        eff = float(np.mean(np.array([r.eta for r in shared]))) * 100.0
        csec = float(np.mean(np.array([r.csec for r in shared])))
    else:
        tp = eff = csec = float("nan")
    rank1 = float(np.mean([r.rank_one for r in own])) if own else float("nan")
    prop2 = float(np.mean([r.prop2_holds for r in own])) if own else float("nan")
    return TableRow(lam, scheme, tp, eff, csec, rank1, prop2, n_feas, n_total - n_feas)


def run_montecarlo(config: ExperimentConfig, options: SolverOptions | None = None, keep_records: bool = True):
    """Average trade-off table over ``config.realizations`` draws.

    Draw ``i`` uses seed ``config.seed + i``. Averages at each weight are
    taken over draws feasible for every selected scheme; rates and counts are
    per scheme. A weight where no draw is feasible for all schemes keeps its
    rows with NaN averages.
    """
    t0 = time.perf_counter()
    grid = [validate_weights(lam) for lam in config.grid()]
    schemes = config.scheme_list()
    records: list = []
    infeasible = 0
    for i in range(config.realizations):
        res = _draw(config, grid, i, options)
        if res is None:
            infeasible += 1
            continue
        for lam, reports in res:
            for s in schemes:
                if reports[s] is not None:
                    records.append(_record(i, lam, s, reports[s]))
    rows = []
    for lam in grid:
        feasible_sets = [{r.index for r in records if r.scheme is s and r.lam == lam} for s in schemes]
        common = set.intersection(*feasible_sets)
        if not common:
            log.warning("no draw feasible for all schemes at lambda=%s", lam)
        for s in schemes:
            rows.append(_aggregate(lam, s, records, common, config.realizations))
    return MonteCarloResult(
        config=config,
        rows=rows,
        records=records if keep_records else [],
        infeasible_draws=infeasible,
        elapsed_s=time.perf_counter() - t0,
    )


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [
                _fmt(r.lam[0]),
                _fmt(r.lam[1]),
                r.scheme.value,
                _fmt(r.avg_tp_dbm),
                _fmt(r.avg_tp_w),
                _fmt(r.avg_eff_pct),
                _fmt(r.avg_csec),
                _fmt(r.rank1_rate),
                _fmt(r.prop2_rate),
                r.n_feasible,
                r.n_infeasible,
            ]
        )
    return buf.getvalue()


def metadata(config: ExperimentConfig, result: MonteCarloResult | None = None) -> dict:
    meta = {
        "package": "swiptsec",
        "version": __version__,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "realization_seeds": f"{config.seed} + index, index in [0, {config.realizations})",
        "bandwidth_hz": config.bandwidth_hz,
        "utopia_caveat": BOUND_CAVEAT,
        "averaging": "over draws feasible for every selected scheme at each weight",
        "config": config.to_dict(),
    }
    if result is not None:
        meta["draws_infeasible_for_utopia"] = result.infeasible_draws
        meta["rows"] = len(result.rows)
    return meta


def write_outputs(result: MonteCarloResult, out=None) -> tuple:
    """Write the CSV and its ``.meta.json`` sidecar; returns both paths."""
    path = Path(out or result.config.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_csv(result.rows))
    meta_path = path.with_name(path.name + ".meta.json")
    meta_path.write_text(json.dumps(metadata(result.config, result), indent=2, sort_keys=True) + "\n")
    return path, meta_path


# --------------------------------------------------------------------------
# single realization and sweep


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"re": _jsonable(x.real.tolist()), "im": _jsonable(x.imag.tolist())}
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Scheme):
        return x.value
    return x


def run_single(config: ExperimentConfig, seed: int, lam, options: SolverOptions | None = None) -> dict:
    """Full per-scheme report for the draw with seed ``seed`` at weight ``lam``."""
    lam = validate_weights(lam)
    system, qos = config.system(), config.qos()
    grams = gram_matrices(sample_channels(seed, system))
    report: dict = {"seed": seed, "lambda": list(lam), "secrecy_floor": secrecy_floor(qos)}
    try:
        utopia = compute_utopia(grams, qos, system.eps, options)
    except AllocationError as exc:
        report["status"] = "infeasible"
        report["reason"] = str(exc)
        return report
    report["status"] = "ok"
    report["utopia"] = {"F1_star": utopia.F1_star, "F2_star": utopia.F2_star}
    reports = solve_schemes(grams, qos, system.eps, lam, utopia, config.scheme_list(), options)
    schemes = {}
    for s, rep in reports.items():
        if rep is None:
            schemes[s.value] = {"feasible": False}
            continue
        ts = rep.transformed
        cert = ts.dual_certificate
        m = rep.metrics
        entry = {
            "feasible": True,
            "tau": rep.tau,
            "achieved_tau": rep.achieved_tau,
            "xi": ts.xi,
            "trace_sum": ts.trace_sum,
            "rank_one": rep.rank_one,
            "eigen_ratio": rep.eigen_ratio,
            "W_bar_eigenvalues": np.linalg.eigvalsh(ts.W_bar)[::-1],
            "V_bar_eigenvalues": np.linalg.eigvalsh(ts.V_bar)[::-1],
            "prop2_holds": rep.prop2_holds,
            "branch": rep.branch.value if rep.branch else None,
            "metrics": {
                "tp_w": m.tp,
                "tp_dbm": float(watt_to_dbm(m.tp)),
                "tp_inverse_xi": 1.0 / ts.xi,
                "hp_w": m.hp,
                "eff_pct": m.eta * 100.0,
                "csec_bps_hz": m.csec,
                "sinr": m.sinr,
                "sinr_idle": m.sinr_idle,
            },
            "duals": {
                "alpha": cert.alpha,
                "beta": cert.beta,
                "theta": cert.theta,
                "mu": cert.mu,
                "nu": cert.nu,
                "kappa": cert.kappa,
            },
            "solver": {
                "status": ts.cone_solution.status.value,
                "iterations": ts.cone_solution.iterations,
                "duality_gap": ts.cone_solution.duality_gap,
                "primal_infeas": ts.cone_solution.primal_infeas,
                "dual_infeas": ts.cone_solution.dual_infeas,
            },
        }
        if rep.recovered is not None:
            fr = feasibility_residuals(rep.recovered, grams, qos)
            entry["feasibility"] = dataclasses.asdict(fr)
        schemes[s.value] = entry
    report["schemes"] = schemes
    return _jsonable(report)


def format_single(report: dict) -> str:
    lines = [f"seed {report['seed']}  lambda=({report['lambda'][0]:.4g}, {report['lambda'][1]:.4g})"]
    if report["status"] != "ok":
        lines.append(f"infeasible draw: {report.get('reason', '')}")
        return "\n".join(lines) + "\n"
    u = report["utopia"]
    lines.append(f"utopia F1*={u['F1_star']:.6g} F2*={u['F2_star']:.6g} W; secrecy floor {report['secrecy_floor']:.6f}")
    for name, e in report["schemes"].items():
        if not e["feasible"]:
            lines.append(f"{name:12s} infeasible")
            continue
        m = e["metrics"]
        lines.append(
            f"{name:12s} tau={e['tau']:.6e} TP={m['tp_dbm']:.4f} dBm eff={m['eff_pct']:.4f}% "
            f"Csec={m['csec_bps_hz']:.4f} rank1={e['rank_one']} ratio={e['eigen_ratio']:.2e} "
            f"prop2={e['prop2_holds']}"
        )
    return "\n".join(lines) + "\n"


def run_sweep(config: ExperimentConfig, seed: int, options: SolverOptions | None = None) -> str:
    """Per-weight, per-scheme CSV for one draw (no averaging)."""
    system, qos = config.system(), config.qos()
    grams = gram_matrices(sample_channels(seed, system))
    points = pareto_sweep(grams, qos, system.eps, config.grid(), config.scheme_list(), options=options)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in points:
        r = p.report
        if r is None:
            w.writerow([_fmt(p.lam[0]), _fmt(p.lam[1]), p.scheme.value, 0] + ["nan"] * 6 + [0, "nan", 0])
            continue
        m = r.metrics
        w.writerow(
            [
                _fmt(p.lam[0]),
                _fmt(p.lam[1]),
                p.scheme.value,
                1,
                _fmt(watt_to_dbm(m.tp)),
                _fmt(m.tp),
                _fmt(m.eta * 100.0),
                _fmt(m.csec),
                _fmt(r.tau),
                _fmt(r.achieved_tau),
                int(r.rank_one),
                _fmt(r.eigen_ratio),
                int(r.prop2_holds),
            ]
        )
    return buf.getvalue()


# --------------------------------------------------------------------------
# self-test


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def selftest(options: SolverOptions | None = None, allocator_options: SolverOptions | None = None) -> list:
    """Solver conformance, rank-one property checks and tiny oracle comparisons.

    ``options`` is the hook for corrupting the solver tolerance of the
    conformance suite; ``allocator_options`` does the same for the pipeline.
    """
    checks = []
    for case in analytic_cases():
        r = run_case(case, options)
        checks.append(
            Check(
                f"solver conformance {case.name}: objective error <= 1e-7, gap and residuals <= 1e-8",
                r.passed(),
                f"status={r.status.value} err={r.objective_error:.2e} gap={r.gap:.2e} "
                f"res={max(r.primal_infeas, r.dual_infeas):.2e}",
            )
        )

    cfg = ExperimentConfig(realizations=1)
    system, qos = cfg.system(), cfg.qos()
    floor = secrecy_floor(qos)
    checks.append(Check("secrecy floor = log2(11) - log2(1.1)", abs(floor - 3.321928094887362) <= 1e-6, f"{floor:.9f}"))
    worst = {"trace": 0.0, "tp": 0.0, "p2_ratio": 0.0, "prop2_ratio": 0.0, "csec": np.inf}
    solved = 0
    seed = 0
    while solved < 3:
        grams = gram_matrices(sample_channels(seed, system))
        seed += 1
        try:
            utopia = compute_utopia(grams, qos, system.eps, allocator_options)
        except AllocationError:
            continue
        solved += 1
        _, p2 = solve_single_objective(grams, qos, system.eps, ProblemKind.P2, allocator_options)
        worst["p2_ratio"] = max(worst["p2_ratio"], check_rank_one(p2.W_bar)[1])
        for lam in ((0.9, 0.1), (0.5, 0.5), (0.1, 0.9)):
            reps = solve_schemes(grams, qos, system.eps, lam, utopia, [Scheme.RELAXED_P3], allocator_options)
            r = reps[Scheme.RELAXED_P3]
            if r is None:
                continue
            worst["trace"] = max(worst["trace"], abs(r.transformed.trace_sum - 1.0))
            if r.prop2_holds:
                worst["prop2_ratio"] = max(worst["prop2_ratio"], r.eigen_ratio)
            if r.rank_one:
                worst["tp"] = max(worst["tp"], abs(r.metrics.tp * r.transformed.xi - 1.0))
                worst["csec"] = min(worst["csec"], r.metrics.csec)
    checks.append(Check("P2 endpoint is rank-one", worst["p2_ratio"] <= 1e-6, f"max ratio {worst['p2_ratio']:.2e}"))
    checks.append(
        Check("prop2 certificate implies rank-one", worst["prop2_ratio"] <= 1e-6, f"max ratio {worst['prop2_ratio']:.2e}")
    )
    checks.append(Check("Tr(W) + Tr(V) = 1", worst["trace"] <= 1e-6, f"max deviation {worst['trace']:.2e}"))
    checks.append(Check("TP = 1/xi", worst["tp"] <= 1e-6, f"max relative error {worst['tp']:.2e}"))
    checks.append(Check("secrecy floor met", worst["csec"] >= floor - 1e-6, f"min Csec {worst['csec']:.6f}"))

    tiny = ExperimentConfig(num_antennas=2, num_receivers=2, realizations=1)
    system, qos = tiny.system(), tiny.qos()
    done, seed, worst_rel, worst_bracket = 0, 0, 0.0, -np.inf
    while done < 2:
        grams = gram_matrices(sample_channels(seed, system))
        seed += 1
        try:
            utopia = compute_utopia(grams, qos, system.eps, allocator_options)
            reps = solve_schemes(grams, qos, system.eps, (0.5, 0.5), utopia, [Scheme.RELAXED_P3, Scheme.SUBOPTIMAL2])
            orc = grid_oracle(grams, qos, system.eps, (0.5, 0.5), utopia, resolution=64)
        except (AllocationError, InfeasibleAtResolution):
            continue
        relaxed, sub2 = reps[Scheme.RELAXED_P3], reps[Scheme.SUBOPTIMAL2]
        if relaxed is None or sub2 is None:
            continue
        done += 1
        ach = scalarized((0.5, 0.5), utopia, sub2.metrics.eta, sub2.metrics.tp)
        worst_rel = max(worst_rel, abs(ach - orc.value) / abs(orc.value))
        worst_bracket = max(worst_bracket, relaxed.tau - orc.value)
    checks.append(Check("oracle agrees with suboptimal scheme 2", worst_rel <= 1e-3, f"max relative error {worst_rel:.2e}"))
    checks.append(Check("relaxed tau <= oracle tau", worst_bracket <= 1e-9, f"max excess {worst_bracket:.2e}"))
    return checks
