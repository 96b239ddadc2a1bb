"""End-to-end acceptance gate.

Each criterion prints one line with its measured values; run with

    pytest tests/test_acceptance.py -v -s

Shared expensive artifacts (sweeps, training, resource tables) are built once
per session.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from qmcecon import econ
from qmcecon.bench import (
    SweepSpec,
    depth_fit,
    error_sweep,
    fit_r_squared,
    loglog_fit,
    resource_rows,
    runtime_extrapolate,
    time_per_sample,
)
from qmcecon.circuits import decompose
from qmcecon.distributions import (
    TrainingSchedule,
    VariationalAnsatz,
    ansatz_cost,
    discretize_normal,
    parameter_shift_gradient,
    train_ansatz,
)
from qmcecon.engine import (
    QMCConfig,
    assemble_f,
    grover_operator,
    normalize_rv,
    run_qmc,
)
from qmcecon.sim import dense_unitary

from util import (
    brute_force_phase_estimation,
    phase_aligned_distance,
    random_circuit,
    random_distribution,
)

PUBLISHED_STRESS_MEAN = 0.01618
PUBLISHED_SIMPLE_THETA = 0.457
PUBLISHED_SIMPLE_MU = 0.432


def report(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:02d}] {status}: {detail}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def simple_run():
    dist = discretize_normal(5, 0.0, 1.0, -math.pi, math.pi)
    rv = normalize_rv(np.sin(dist.grid) ** 2)
    start = time.perf_counter()
    res = run_qmc(QMCConfig(dims=1, m=5, n=6), [dist], rv)
    return res, time.perf_counter() - start


@pytest.fixture(scope="session")
def stress_runs():
    timings = {}
    start = time.perf_counter()
    r10 = econ.stress_qmc(econ.DEFAULT_STRESS, 5, 10, method="powers")
    timings[10] = time.perf_counter() - start
    start = time.perf_counter()
    r2 = econ.stress_qmc(econ.DEFAULT_STRESS, 5, 2, method="powers")
    timings[2] = time.perf_counter() - start
    return {2: r2, 10: r10}, timings


@pytest.fixture(scope="session")
def neoclassical_sweeps():
    fits = {}
    for estimator in ("qmc_exact", "qmc_linear"):
        spec = SweepSpec("neoclassical", estimator, list(range(4, 13)))
        rows = error_sweep(spec)
        fits[estimator] = loglog_fit([(r["N"], r["error"]) for r in rows])
    return fits


@pytest.fixture(scope="session")
def classical_fit():
    spec = SweepSpec("neoclassical", "classical",
                     [10**k for k in range(2, 7)], repeats=50, seed=0)
    rows = error_sweep(spec)
    return loglog_fit([(r["N"], r["error"]) for r in rows])


@pytest.fixture(scope="session")
def resource_table():
    return resource_rows(5, range(3, 11))


@pytest.fixture(scope="session")
def trained_appendix():
    target = discretize_normal(5, 1.0, econ.BENCH_SIGMA, 0.94, 1.06)
    schedule = TrainingSchedule([(1000, 0.01), (1000, 0.001), (1000, 0.0001)],
                                seed=1)
    ansatz, trace = train_ansatz(target, 10, schedule)
    return ansatz, trace, target


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def test_criterion_01_simple_example(simple_run):
    res, elapsed = simple_run
    theta_err = abs(res.theta_hat - PUBLISHED_SIMPLE_THETA)
    mu_err = abs(res.mu - PUBLISHED_SIMPLE_MU)
    ok = theta_err <= 1 / 64 and mu_err <= 0.01 and elapsed < 10.0
    report(1, ok,
           f"theta_hat={res.theta_hat:.6f} (|d|={theta_err:.4f} <= {1/64:.4f}), "
           f"mu={res.mu:.4f} (|d|={mu_err:.4f} <= 0.01), runtime={elapsed:.2f}s")


def test_criterion_02_bimodal_symmetric(simple_run):
    res, _ = simple_run
    p = res.distribution
    asym = float(np.max(np.abs(p[1:] - p[1:][::-1])))
    order = np.argsort(p)[::-1]
    top, second = int(order[0]), int(order[1])
    mirrored = (top + second) == p.size
    dominant = p[top] > 0.25 and p[second] > 0.25
    ok = asym < 1e-9 and mirrored and dominant
    report(2, ok,
           f"max asymmetry={asym:.2e}, peaks at {top}/{second} "
           f"(p={p[top]:.3f}/{p[second]:.3f}), mirrored={mirrored}")


def test_criterion_03_stress_test(stress_runs):
    runs, timings = stress_runs
    frac10 = abs(runs[10].estimate.mu - PUBLISHED_STRESS_MEAN) / PUBLISHED_STRESS_MEAN
    frac2 = abs(runs[2].estimate.mu - PUBLISHED_STRESS_MEAN) / PUBLISHED_STRESS_MEAN
    ok = (frac10 <= 0.01 and frac2 <= 0.05
          and timings[10] < 300.0)
    report(3, ok,
           f"n=10 fractional={frac10:.4f} <= 0.01 (own-oracle "
           f"{runs[10].fractional_error:.4f}), n=2 fractional={frac2:.4f} "
           f"<= 0.05, runtime(n=10)={timings[10]:.1f}s")


def test_criterion_04_stress_plateau():
    coeffs = econ.stress_coefficients(econ.DEFAULT_STRESS)
    cont = econ.stress_theoretical_mean(coeffs, econ.DEFAULT_STRESS.beta_lev)
    grid = econ.stress_theoretical_mean(
        coeffs, econ.DEFAULT_STRESS.beta_lev,
        econ.DEFAULT_STRESS.shock_distribution(5))
    bias = abs(grid - cont) / cont
    errors = {}
    for n in (6, 10, 14, 20, 21, 22):
        res = econ.stress_qmc(econ.DEFAULT_STRESS, 5, n, method="spectral")
        errors[n] = res.fractional_error
    plateau = [errors[n] for n in (20, 21, 22)]
    level_ok = all(0.5 * bias <= e <= 2.0 * bias for e in plateau)
    flat_ok = max(plateau) / min(plateau) < 1.25
    ok = level_ok and flat_ok and bias > 0
    report(4, ok,
           f"analytic bias={bias:.6f}, plateau errors(n=20,21,22)="
           f"{[f'{e:.6f}' for e in plateau]}, level within 2x={level_ok}, "
           f"flat={flat_ok}")


def test_criterion_05_scaling_slopes(neoclassical_sweeps, classical_fit):
    exact = neoclassical_sweeps["qmc_exact"].slope
    linear = neoclassical_sweeps["qmc_linear"].slope
    classical = classical_fit.slope
    ok = (-1.1 <= exact <= -0.9 and -0.77 <= linear <= -0.57
          and -0.55 <= classical <= -0.45)
    report(5, ok,
           f"exact={exact:.3f} in [-1.1,-0.9], linear={linear:.3f} in "
           f"[-0.77,-0.57], classical={classical:.3f} in [-0.55,-0.45]")


def test_criterion_06_variational_training(trained_appendix):
    ansatz, trace, target = trained_appendix
    final = float(trace[-1])
    settled = ansatz_cost(ansatz, target)
    ok = trace.size == 3000 and min(final, settled) <= 5e-4
    report(6, ok,
           f"epochs={trace.size}, final cost={final:.3e} "
           f"(after last step {settled:.3e}) <= 5e-4")


def test_criterion_07_oracle_equivalence():
    rng = np.random.default_rng(42)
    worst_dist = 0.0
    worst_phase = 0.0
    cases = 0
    for m in (2, 3):
        for n in (3, 5):
            for _ in range(3):
                dist = random_distribution(m, rng)
                rv = normalize_rv(rng.uniform(-2, 3, 1 << m))
                config = QMCConfig(dims=1, m=m, n=n, method="circuit")
                res = run_qmc(config, [dist], rv)
                f = assemble_f(config, [dist], rv)
                q = dense_unitary(grover_operator(f))
                chi = dense_unitary(f)[:, 0]
                oracle = brute_force_phase_estimation(q, chi, n)
                worst_dist = max(worst_dist,
                                 float(np.max(np.abs(res.distribution - oracle))))
                mu = float(dist.masses @ rv.values)
                # eigenvalue angles fold theta > 1/2 onto 1 - theta (the same
                # e^{+-2 pi i theta} pair), which flips the cosine's sign;
                # compare in the folded domain
                theta_folded = math.acos(abs(1 - 2 * mu)) / math.pi
                eig_thetas = np.abs(np.angle(np.linalg.eigvals(q))) / (2 * math.pi)
                nearest = eig_thetas[np.argmin(np.abs(eig_thetas - theta_folded))]
                worst_phase = max(worst_phase,
                                  abs(math.cos(math.pi * nearest) - abs(1 - 2 * mu)))
                cases += 1
    ok = worst_dist < 1e-10 and worst_phase < 1e-8
    report(7, ok,
           f"{cases} problems: max |distribution - brute force|={worst_dist:.2e} "
           f"< 1e-10, eigenphase defect={worst_phase:.2e} < 1e-8")


def test_criterion_08_decomposition_soundness():
    rng = np.random.default_rng(314)
    worst = 0.0
    for _ in range(100):
        nq = int(rng.integers(2, 9))
        circ = random_circuit(nq, int(rng.integers(5, 51)), rng)
        lowered = decompose(circ)
        assert all(g.kind in ("rx", "ry", "rz", "cnot", "barrier")
                   for g in lowered.gates)
        err = phase_aligned_distance(dense_unitary(circ), dense_unitary(lowered))
        worst = max(worst, err)
    ok = worst < 1e-8
    report(8, ok, f"100 random circuits (<=8 qubits, <=50 gates): "
                  f"max unitary distance={worst:.2e} < 1e-8")


def test_criterion_09_resource_growth(resource_table):
    rows = resource_table
    depths = {row["n"]: row["depth"] for row in rows}
    ratios = [depths[n + 1] / depths[n] for n in range(6, 10)]
    fit = depth_fit(rows)
    r2 = fit_r_squared(fit)
    ok = all(1.9 <= r <= 2.1 for r in ratios) and r2 > 0.999
    report(9, ok,
           f"depth ratios n in [6,10]: {[f'{r:.3f}' for r in ratios]} all in "
           f"[1.9,2.1]; log-linear fit slope={fit.slope:.4f}, R^2={r2:.6f} > 0.999")


def test_criterion_10_crossover(neoclassical_sweeps, classical_fit):
    qfit = neoclassical_sweeps["qmc_linear"]
    dfit = depth_fit(resource_rows(econ.BENCH_M, range(3, 11)))
    tau = time_per_sample()
    table = runtime_extrapolate(qfit, dfit, classical_fit, tau)
    row = next(r for r in table.rows
               if r.gate_time == 1e-9 and r.speedup_factor == 1e3)
    advantage = row.advantage_at_target
    ideal = runtime_extrapolate(replace(qfit, slope=-1.0), dfit,
                                classical_fit, tau)
    earlier = all(
        i.crossover_time < b.crossover_time
        for b, i in zip(table.rows, ideal.rows)
        if b.crossover_time is not None and i.crossover_time is not None)
    defined = sum(r.crossover_time is not None for r in ideal.rows)
    ok = 2.8 <= advantage <= 11.2 and earlier and defined == len(ideal.rows)
    report(10, ok,
           f"tau={tau*1e9:.0f} ns/sample, 1ns/1000x advantage at 1e-8 = "
           f"{advantage:.2f} in [2.8, 11.2]; ideal-slope rerun earlier "
           f"for all {defined} rows={earlier}")


def test_criterion_11_gradient_check():
    rng = np.random.default_rng(2718)
    target = random_distribution(3, rng)
    worst = 0.0
    h = 1e-6
    for _ in range(20):
        params = rng.uniform(-math.pi, math.pi,
                             VariationalAnsatz.num_params(3, 2))
        ansatz = VariationalAnsatz(3, 2, params)
        grad = parameter_shift_gradient(ansatz, target)
        for j in range(params.size):
            plus, minus = params.copy(), params.copy()
            plus[j] += h
            minus[j] -= h
            fd = (ansatz_cost(VariationalAnsatz(3, 2, plus), target)
                  - ansatz_cost(VariationalAnsatz(3, 2, minus), target)) / (2 * h)
            worst = max(worst, abs(grad[j] - fd))
    ok = worst < 1e-5
    report(11, ok, f"20 random parameter vectors: max |shift - fd| = "
                   f"{worst:.2e} < 1e-5 elementwise")
