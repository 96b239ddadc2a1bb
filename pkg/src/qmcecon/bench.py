"""Benchmark harness: error sweeps, log-log fits, resources, crossovers.

Everything here emits plain rows of numbers (list-of-dict records with fixed
column order) so the CLI can serialize them as CSV or JSON without any
plotting dependency.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuits import GateTimeModel, ResourceReport, count_stream, lower_gates
from .distributions import (
    APPENDIX_SCHEDULE,
    TrainingSchedule,
    VariationalAnsatz,
    discretize_normal,
    train_ansatz,
)
from .engine import LinearRParams, QMCConfig, assemble_f, normalize_rv, phase_estimation
from . import econ

GATE_TIMES = (1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
SPEEDUP_FACTORS = (1e3, 1e6)
CROSSOVER_TARGET_ERROR = 1e-8


# ---------------------------------------------------------------------------
# Error sweeps
# ---------------------------------------------------------------------------


def default_m(app: str) -> int:
    return econ.BENCH_M if app == "neoclassical" else 5


@dataclass
class SweepSpec:
    app: str                      # "simple" | "stress" | "neoclassical"
    estimator: str                # "qmc_exact" | "qmc_linear" | "classical"
    range: list[int]              # n values (quantum) or N values (classical)
    repeats: int = 1              # classical only
    seed: int = 0
    m: int | None = None          # None: per-app default register size

    def __post_init__(self):
        if self.app not in ("simple", "stress", "neoclassical"):
            raise ValueError(f"unknown app {self.app!r}")
        if self.estimator not in ("qmc_exact", "qmc_linear", "classical"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if not self.range or any(b <= a for a, b in zip(self.range, self.range[1:])):
            raise ValueError("range must be non-empty and increasing")
        if self.estimator == "classical" and self.repeats < 1:
            raise ValueError("classical sweeps need repeats >= 1")
        if self.estimator == "qmc_linear" and self.app == "stress":
            raise ValueError("the stress problem uses the exact encoding")
        if self.m is None:
            self.m = default_m(self.app)


def _simple_quantum_point(m, n):
    dist = discretize_normal(m, 0.0, 1.0, -math.pi, math.pi)
    rv = normalize_rv(np.sin(dist.grid) ** 2)
    config = QMCConfig(dims=1, m=m, n=n, r_mode="exact", method="auto")
    from .engine import run_qmc

    res = run_qmc(config, [dist], rv)
    oracle = float(np.dot(dist.masses, np.sin(dist.grid) ** 2))
    return abs(res.mu - oracle)


def _quantum_point(app, m, n, r_mode):
    if app == "simple":
        return _simple_quantum_point(m, n)
    if app == "stress":
        r = econ.stress_qmc(econ.DEFAULT_STRESS, m, n, method="auto")
        return abs(r.estimate.mu - r.mu_continuous)
    r = econ.neoclassical_qmc(econ.BENCH_C1, econ.BENCH_C2, econ.BENCH_SIGMA,
                              m, n, r_mode=r_mode)
    return r.abs_error


_CLASSICAL_PROBLEMS = {
    "simple": lambda: (econ.simple_problem_sampler, econ.simple_problem_f,
                       econ.SIMPLE_ANALYTIC_MEAN),
    "stress": lambda: (econ.stress_sampler(econ.DEFAULT_STRESS),
                       econ.stress_f(econ.DEFAULT_STRESS),
                       econ.stress_theoretical_mean(
                           econ.stress_coefficients(econ.DEFAULT_STRESS),
                           econ.DEFAULT_STRESS.beta_lev)),
    "neoclassical": lambda: (econ.neoclassical_sampler(),
                             econ.neoclassical_f(), 1.0),
}


def _classical_point(app, n_samples, repeats, seed):
    sampler, f, oracle = _CLASSICAL_PROBLEMS[app]()
    errors = []
    elapsed = []
    for rep in range(repeats):
        run = econ.classical_mc(sampler, f, n_samples,
                                seed=seed + 7919 * rep, oracle=oracle)
        errors.append(run.abs_error)
        elapsed.append(run.wall_time)
    return float(np.mean(errors)), float(np.mean(elapsed))


def error_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """One row per range point: (n, N, error, wall_time_s).

    Quantum rows are deterministic; classical rows average the absolute error
    over ``repeats`` seeded runs.  Rows are ordered by range point regardless
    of how many workers computed them.
    """

    def run_point(point):
        start = time.perf_counter()
        if spec.estimator == "classical":
            err, sample_time = _classical_point(spec.app, point, spec.repeats,
                                                spec.seed)
            return {"app": spec.app, "estimator": spec.estimator, "n": "",
                    "N": point, "error": err, "wall_time_s": sample_time}
        r_mode = "linear" if spec.estimator == "qmc_linear" else "exact"
        err = _quantum_point(spec.app, spec.m, point, r_mode)
        return {"app": spec.app, "estimator": spec.estimator, "n": point,
                "N": 2**point - 1, "error": err,
                "wall_time_s": time.perf_counter() - start}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_point, spec.range))
    return [run_point(p) for p in spec.range]


# ---------------------------------------------------------------------------
# Log-log fits
# ---------------------------------------------------------------------------


@dataclass
class ScalingFit:
    """Ordinary least squares on (log10 N, log10 error)."""

    slope: float
    intercept: float
    points: list[tuple[float, float]]
    excluded: list[tuple[float, float]] = field(default_factory=list)

    def error_at(self, n_value: float) -> float:
        return 10 ** (self.intercept + self.slope * math.log10(n_value))

    def n_for_error(self, error: float) -> float:
        return 10 ** ((math.log10(error) - self.intercept) / self.slope)


def loglog_fit(points, plateau_filter: bool = False,
               bias: float = 0.0) -> ScalingFit:
    """Fit log10(error) against log10(N).

    With ``plateau_filter`` points whose error is below twice the
    discretization ``bias`` are excluded (they sit on the grid-error floor,
    not on the estimation-scaling line).
    """
    pts = [(float(n), float(e)) for n, e in points]
    if plateau_filter:
        kept = [(n, e) for n, e in pts if e >= 2.0 * bias]
        excluded = [(n, e) for n, e in pts if e < 2.0 * bias]
    else:
        kept, excluded = pts, []
    kept = [(n, e) for n, e in kept if e > 0]
    if len(kept) < 3:
        raise ValueError(f"need at least 3 positive points to fit, have {len(kept)}")
    x = np.log10([n for n, _ in kept])
    y = np.log10([e for _, e in kept])
    slope, intercept = np.polyfit(x, y, 1)
    return ScalingFit(float(slope), float(intercept),
                      list(zip(x.tolist(), y.tolist())),
                      [(math.log10(n), math.log10(e)) for n, e in excluded if e > 0])


def fit_r_squared(fit: ScalingFit) -> float:
    """R**2 of a fit over its stored (already log-transformed) points."""
    x = np.array([p[0] for p in fit.points])
    y = np.array([p[1] for p in fit.points])
    resid = y - (fit.intercept + fit.slope * x)
    total = y - y.mean()
    return 1.0 - float(resid @ resid) / float(total @ total)


# ---------------------------------------------------------------------------
# Resource accounting of the assembled estimation circuit
# ---------------------------------------------------------------------------


def _bench_ansatz(m: int, layers: int) -> VariationalAnsatz:
    # structural placeholder angles: resource counts ignore parameter values
    rng = np.random.default_rng(12)
    return VariationalAnsatz(m, layers,
                             rng.uniform(-math.pi, math.pi,
                                         VariationalAnsatz.num_params(m, layers)))


def qmc_resource_report(m: int, n: int, layers: int = 10) -> ResourceReport:
    """Counts and depth of the decomposed estimation circuit.

    Builds the macro benchmark circuit (layered preparation ansatz, linear
    rotation encoding, clean work register for the multi-controlled X) and
    streams its elementary-gate lowering through the counter, so the million
    and more gates of larger n never materialize in memory.
    """
    dist = discretize_normal(m, 1.0, econ.BENCH_SIGMA, 0.94, 1.06)
    rv = normalize_rv(econ.BENCH_C1 + econ.BENCH_C2 * dist.grid)
    config = QMCConfig(dims=1, m=m, n=n, r_mode="linear", a_mode="trained_ansatz")
    linear = LinearRParams.for_oracle_budget(m, n, increasing=False)
    f_circuit = assemble_f(config, [dist], rv, _bench_ansatz(m, layers), linear)
    circuit = phase_estimation(f_circuit, n, with_work=True)
    return count_stream(lower_gates(circuit.gates), circuit.num_qubits)


def resource_rows(m: int, n_values, layers: int = 10) -> list[dict]:
    rows = []
    for n in n_values:
        rep = qmc_resource_report(m, n, layers)
        rows.append({
            "n": n,
            "total_gates": rep.total_gates,
            "rx": rep.count("rx"),
            "ry": rep.count("ry"),
            "rz": rep.count("rz"),
            "cnot": rep.count("cnot"),
            "depth": rep.depth,
            "num_qubits": rep.num_qubits,
        })
    return rows


def depth_fit(rows) -> ScalingFit:
    """Log-linear fit of depth against n: log2(depth) = a*n + b."""
    x = np.array([row["n"] for row in rows], dtype=float)
    y = np.log2([row["depth"] for row in rows])
    slope, intercept = np.polyfit(x, y, 1)
    pts = [(float(xi), float(yi)) for xi, yi in zip(x, y)]
    return ScalingFit(float(slope), float(intercept), pts)


def depth_at(fit: ScalingFit, n: float) -> float:
    return 2 ** (fit.intercept + fit.slope * n)


# ---------------------------------------------------------------------------
# Classical timing primitive
# ---------------------------------------------------------------------------


def time_per_sample(single_draw=None, n_samples: int = 20_000,
                    repeats: int = 5, seed: int = 0) -> float:
    """Median seconds per Monte Carlo sample of a single-threaded loop.

    ``single_draw(rng) -> float`` evaluates the variable at one fresh draw;
    the default is the macro benchmark residual.  The loop is deliberately a
    plain interpreted one-sample-at-a-time accumulation: the extrapolated
    classical competitor is one CPU core running straightforward MC code,
    with HPC parallelism applied as an external speedup factor.  Each of the
    ``repeats`` timings uses a monotonic clock; the median is returned since
    single runs are too noisy to anchor the runtime crossover.
    """
    if single_draw is None:
        single_draw = econ.neoclassical_single_draw
    times = []
    for rep in range(repeats):
        rng = np.random.default_rng(seed + rep)
        start = time.perf_counter()
        acc = 0.0
        for _ in range(n_samples):
            acc += single_draw(rng)
        elapsed = time.perf_counter() - start
        times.append(elapsed / n_samples)
    return float(np.median(times))


# ---------------------------------------------------------------------------
# Runtime extrapolation and crossovers
# ---------------------------------------------------------------------------


@dataclass
class CrossoverRow:
    gate_time: float
    speedup_factor: float
    crossover_time: float | None   # None: no crossover in range
    crossover_error: float | None
    quantum_time_at_target: float
    classical_time_at_target: float

    @property
    def advantage_at_target(self) -> float:
        return self.classical_time_at_target / self.quantum_time_at_target


@dataclass
class CrossoverTable:
    rows: list[CrossoverRow]
    target_error: float


def _quantum_time_line(quantum_fit: ScalingFit, dfit: ScalingFit,
                       gate_time: float):
    """Coefficients of log10(T) as an affine map of log10(error).

    error = 10**(b_q) * N**s_q and depth = 2**(b_d + s_d * n) with
    N = 2**n - 1 ~ 2**n give T = t * depth as a power law in the error.
    """
    # log10 depth = c0 + c1 * log10 N  with  log10 depth = (b_d + s_d n) log10 2
    c1 = dfit.slope                     # d log2(depth) / d n == d log2 depth / d log2 N
    c0 = dfit.intercept * math.log10(2.0)
    # log10 N = (log10 e - b_q) / s_q
    def time_of_error(error: float) -> float:
        log_n = (math.log10(error) - quantum_fit.intercept) / quantum_fit.slope
        log_depth = c0 + c1 * log_n
        return gate_time * 10 ** log_depth

    return time_of_error


def runtime_extrapolate(quantum_fit: ScalingFit, dfit: ScalingFit,
                        classical_fit: ScalingFit, seconds_per_sample: float,
                        gate_times=GATE_TIMES, speedup_factors=SPEEDUP_FACTORS,
                        target_error: float = CROSSOVER_TARGET_ERROR) -> CrossoverTable:
    """Crossovers between the extrapolated quantum and classical time lines.

    Both lines are power laws in the error; equating them solves the
    crossover in closed form.  A crossover only exists when the quantum error
    falls faster with time than the classical one.
    """
    rows = []
    # classical: error = 10**b_c * N**s_c, T = tau * N / factor
    s_c, b_c = classical_fit.slope, classical_fit.intercept
    for gate_time in gate_times:
        q_time = _quantum_time_line(quantum_fit, dfit, gate_time)
        # quantum log10 T = log10(t) + c0 + (c1/s_q)(log10 e - b_q)
        c1 = dfit.slope
        q_slope = c1 / quantum_fit.slope          # d log10 T / d log10 error
        q_off = math.log10(q_time(1.0))
        for factor in speedup_factors:
            c_slope = 1.0 / s_c
            c_off = math.log10(seconds_per_sample / factor) - b_c / s_c
            t_q_target = q_time(target_error)
            t_c_target = 10 ** (c_off + c_slope * math.log10(target_error))
            if abs(q_slope - c_slope) < 1e-12:
                rows.append(CrossoverRow(gate_time, factor, None, None,
                                         t_q_target, t_c_target))
                continue
            log_err = (c_off - q_off) / (q_slope - c_slope)
            log_t = q_off + q_slope * log_err
            rows.append(CrossoverRow(gate_time, factor, 10 ** log_t,
                                     10 ** log_err, t_q_target, t_c_target))
    return CrossoverTable(rows, target_error)


def crossover_rows(table: CrossoverTable) -> list[dict]:
    out = []
    for row in table.rows:
        out.append({
            "gate_time_s": row.gate_time,
            "speedup_factor": row.speedup_factor,
            "crossover_time_s": "" if row.crossover_time is None else row.crossover_time,
            "crossover_error": "" if row.crossover_error is None else row.crossover_error,
            "quantum_time_at_target_s": row.quantum_time_at_target,
            "classical_time_at_target_s": row.classical_time_at_target,
            "advantage_at_target": row.advantage_at_target,
        })
    return out
