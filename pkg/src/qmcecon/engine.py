"""Amplitude-estimation Monte Carlo engine.

Pipeline: a state-preparation circuit loads the discretized distribution(s),
a rotation stage writes the normalized random variable onto an ancilla
(``P(ancilla=1) = sum_i p(i) f(i)``), and phase estimation of the Grover
operator built from that encoding reads the expectation back out of an
eigenphase.  The readout chain is

    bitstring -> theta = sum_i b_i / 2**i -> mu_norm = (1 - cos(pi theta)) / 2
    -> de-normalized expectation in original units.

Three numerically identical evaluation paths are provided: a literal
gate-by-gate simulation ("circuit"), a dense-operator path that squares the
Grover matrix for the controlled powers ("powers"), and a closed-form
spectral path ("spectral") usable when the joint register no longer fits in
memory.  The test suite pins all three against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sim import (
    Circuit,
    Gate,
    ResourceLimitError,
    StateVector,
    apply_circuit,
    dense_unitary,
    init_state,
    probabilities,
    rotation_matrix,
    DEFAULT_QUBIT_CAP,
)
from .circuits import bit_reversal_permutation, inverse_qft, mcx
from .distributions import (
    DiscretizedDistribution,
    VariationalAnsatz,
    _ucry_gates,
    ansatz_circuit,
    exact_state_prep,
)

# ---------------------------------------------------------------------------
# Random-variable normalization
# ---------------------------------------------------------------------------


@dataclass
class RandomVariableSpec:
    """Grid values of the random variable, affinely mapped onto [0, 1].

    ``values`` hold the normalized grid values; ``f_min``/``f_max`` record the
    original-unit extremes so expectations can be mapped back.  A constant
    input degenerates to all-0.5 values with the flag set.
    """

    values: np.ndarray
    f_min: float
    f_max: float
    degenerate: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise ValueError("normalized values must lie in [0, 1]")
        if not self.degenerate and not self.f_min < self.f_max:
            raise ValueError("need f_min < f_max for a non-degenerate variable")

    def original_values(self) -> np.ndarray:
        if self.degenerate:
            return np.full_like(self.values, self.f_min)
        return self.f_min + self.values * (self.f_max - self.f_min)


def normalize_rv(raw_values) -> RandomVariableSpec:
    """Map raw grid values onto [0, 1] via (f - f_min) / (f_max - f_min)."""
    raw = np.asarray(raw_values, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("random-variable values must be finite")
    f_min, f_max = float(raw.min()), float(raw.max())
    if f_max == f_min:
        return RandomVariableSpec(np.full(raw.shape, 0.5), f_min, f_max, True)
    return RandomVariableSpec((raw - f_min) / (f_max - f_min), f_min, f_max)


@dataclass
class LinearRParams:
    """Rescaling of a linear grid function into [-c_s, c_s].

    The ramp over grid index i is f(i) = a*i + b with |a| = 2 c_s / (2**m - 1)
    and b = -sign(a) * c_s: the canonical increasing form maps index 0 to
    -c_s and the top index to +c_s, while a variable that decreases along the
    grid gets the mirrored ramp so its encoded mean stays below one half (the
    phase then sits in the left half of [0, 1], where readout expects it).
    """

    c_s: float
    a: float
    b: float

    def __post_init__(self):
        if not self.c_s > 0:
            raise ValueError(f"c_s must be positive, got {self.c_s}")

    @classmethod
    def for_grid(cls, m: int, c_s: float, increasing: bool = True) -> "LinearRParams":
        sign = 1.0 if increasing else -1.0
        return cls(c_s, sign * 2.0 * c_s / (2**m - 1), -sign * c_s)

    @classmethod
    def for_oracle_budget(cls, m: int, n: int, increasing: bool = True) -> "LinearRParams":
        """c_s = (3 pi / N)**(1/3) with N = 2**n oracle applications, the
        scaling that balances rotation-linearization bias against phase
        resolution."""
        c_s = (3.0 * math.pi / 2**n) ** (1.0 / 3.0)
        return cls.for_grid(m, c_s, increasing)


# ---------------------------------------------------------------------------
# Encoding circuits
# ---------------------------------------------------------------------------


def build_R_exact(rv: RandomVariableSpec, register, ancilla: int) -> Circuit:
    """Rotate the ancilla to sqrt(f(i))|1> per register basis state i.

    Uniformly controlled RY with branch angles 2*arcsin(sqrt(f(i))): exact at
    any grid size, exponential in gate count (simulation reference route).
    """
    register = list(register)
    if rv.values.shape != (1 << len(register),):
        raise ValueError(
            f"register of {len(register)} qubits needs {1 << len(register)} "
            f"values, got {rv.values.shape}"
        )
    angles = 2.0 * np.arcsin(np.sqrt(np.clip(rv.values, 0.0, 1.0)))
    circ = Circuit(max(register + [ancilla]) + 1)
    for g in _ucry_gates(angles, register, ancilla):
        circ.add(g)
    return circ


def build_R_linear(m: int, params: LinearRParams, register, ancilla: int) -> Circuit:
    """Controlled-RY cascade encoding the linear ramp a*i + b on the ancilla.

    P(ancilla=1 | i) = sin^2(a*i + b + pi/4), which approximates
    (a*i + b) + 1/2 once c_s is small.  Register qubit k (most significant
    first) contributes rotation angle 2**(m-k) * a in the half-angle
    convention used by the simulator's RY.
    """
    register = list(register)
    if len(register) != m:
        raise ValueError(f"expected {m} register qubits, got {register}")
    circ = Circuit(max(register + [ancilla]) + 1)
    circ.ry(ancilla, math.pi / 2)
    circ.ry(ancilla, 2.0 * params.b)
    for k, q in enumerate(register):
        circ.cry(q, ancilla, 2 ** (m - k) * params.a)
    return circ


def build_F(a_circuit: Circuit, r_circuit: Circuit) -> Circuit:
    """Problem unitary: state preparation followed by the ancilla rotation."""
    if r_circuit.num_qubits < a_circuit.num_qubits + 1:
        raise ValueError(
            "rotation stage must cover the preparation register plus ancilla"
        )
    circ = Circuit(r_circuit.num_qubits)
    circ.extend(a_circuit)
    circ.extend(r_circuit)
    return circ


# ---------------------------------------------------------------------------
# Grover operator and its controlled form
# ---------------------------------------------------------------------------


def _ancilla_z_gates(ancilla: int):
    # Pauli-Z with no global-phase slop: H X H = Z exactly.
    yield Gate("h", (ancilla,))
    yield Gate("x", (ancilla,))
    yield Gate("h", (ancilla,))


def _zero_reflection_gates(system: list[int], work=(), control: int | None = None):
    """Phase -1 on |0...0> of ``system`` (optionally controlled).

    X-conjugation moves the reflection to |1...1>, where it is an H-framed
    multi-controlled X targeting the last system wire.  Without work qubits a
    single native MCX gate is emitted (the simulator applies it directly);
    with work qubits the linear Toffoli ladder is spelled out so the circuit
    is ready for decomposition and resource counting.
    """
    target = system[-1]
    controls = list(system[:-1])
    if control is not None:
        controls = [control] + controls
    for q in system:
        yield Gate("x", (q,))
    yield Gate("h", (target,))
    if work:
        yield from mcx(controls, target, work).gates
    else:
        yield Gate("mcx", (target,), tuple(controls))
    yield Gate("h", (target,))
    for q in system:
        yield Gate("x", (q,))


def grover_operator(f_circuit: Circuit, work=()) -> Circuit:
    """Q = (F Z0 F^dag V)^2 as an explicit circuit.

    V is Pauli-Z on the ancilla (last F wire); Z0 reflects about the system
    all-zeros state.  Exact including global phase, so dense eigenphases can
    be read off directly.
    """
    system = list(range(f_circuit.num_qubits))
    ancilla = system[-1]
    work = list(work)
    nq = max(system + list(work)) + 1
    circ = Circuit(nq)
    f_inv = f_circuit.inverse()
    for _ in range(2):
        circ.extend(_ancilla_z_gates(ancilla))
        circ.extend(f_inv)
        circ.extend(_zero_reflection_gates(system, work))
        circ.extend(f_circuit)
    return circ


def build_controlled_Q(f_circuit: Circuit, control: int, work=()) -> Circuit:
    """Controlled Grover operator without a controlled version of F.

    Only the two reflections need the control: controlled-V collapses to a CZ
    between the control and the ancilla, and the zero reflection gains the
    control as one more MCX control.  With the control off, the F / F^dag
    pairs cancel to the identity.
    """
    system = list(range(f_circuit.num_qubits))
    ancilla = system[-1]
    if control in system:
        raise ValueError(f"control qubit {control} overlaps the encoding register")
    work = list(work)
    if control in work or set(work) & set(system):
        raise ValueError("work qubits must be disjoint from control and register")
    nq = max(system + [control] + work) + 1
    circ = Circuit(nq)
    f_inv = f_circuit.inverse()
    for _ in range(2):
        circ.cz(control, ancilla)
        circ.extend(f_inv)
        circ.extend(_zero_reflection_gates(system, work, control=control))
        circ.extend(f_circuit)
    return circ


def phase_estimation(f_circuit: Circuit, n: int, with_work: bool = False,
                     cap: int = DEFAULT_QUBIT_CAP) -> Circuit:
    """Full estimation circuit: F, controlled Grover powers, inverse QFT.

    Estimation qubit k controls Q^(2**(n-1-k)) applied as that many
    sequential controlled-Q blocks, for 2**n - 1 oracle applications in
    total.  ``with_work`` appends the clean work register that the linear
    multi-controlled-X construction consumes (needed when the circuit is
    meant for decomposition and resource counting rather than simulation).
    """
    if n < 1:
        raise ValueError(f"need at least one estimation qubit, got {n}")
    s = f_circuit.num_qubits
    est = list(range(s, s + n))
    n_ctrl = s  # MCX controls: estimation control + system wires minus target
    work = list(range(s + n, s + n + max(0, n_ctrl - 2))) if with_work else []
    nq = s + n + len(work)
    if nq > cap:
        raise ResourceLimitError(
            f"phase estimation needs {nq} qubits, exceeding the cap of {cap}"
        )
    circ = Circuit(nq)
    circ.metadata.update(
        system_qubits=list(range(s)),
        est_qubits=est,
        work_qubits=work,
        oracle_calls=2**n - 1,
    )
    circ.extend(f_circuit)
    for q in est:
        circ.h(q)
    for k in range(n):
        block = build_controlled_Q(f_circuit, est[k], work)
        for _ in range(2 ** (n - 1 - k)):
            circ.extend(block)
    circ.extend(inverse_qft(est))
    return circ


# ---------------------------------------------------------------------------
# Readout
# ---------------------------------------------------------------------------


def extract_theta(distribution: np.ndarray, side: str = "left") -> float:
    """Most probable phase on the requested half of [0, 1].

    The output distribution is symmetric about 1/2, so the caller picks the
    side the true phase is known to be on.  Ties break toward smaller theta.
    """
    dist = np.asarray(distribution, dtype=float)
    size = dist.size
    if abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("distribution must sum to 1")
    half = size // 2
    if side == "left":
        idx = int(np.argmax(dist[: half + 1]))
    elif side == "right":
        idx = half + int(np.argmax(dist[half:]))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return idx / size


def theta_to_mu(theta: float) -> float:
    """mu = (1 - cos(pi theta)) / 2, monotone increasing on [0, 1]."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    return (1.0 - math.cos(math.pi * theta)) / 2.0


def denormalize_mu(mu_norm: float, rv: RandomVariableSpec,
                   linear: LinearRParams | None = None) -> float:
    """Map a normalized estimate back to original units.

    Exact encoding: invert the [0, 1] normalization through f_min/f_max.
    Linear encoding: P1 tracks E[f] + 1/2 on the [-c_s, c_s] ramp, so first
    recover the mean normalized grid position, then evaluate the (linear)
    variable there through its recorded endpoint values.
    """
    if not 0.0 <= mu_norm <= 1.0:
        raise ValueError(f"mu_norm must be in [0, 1], got {mu_norm}")
    if rv.degenerate:
        return rv.f_min
    if linear is None:
        return rv.f_min + mu_norm * (rv.f_max - rv.f_min)
    mean_f = mu_norm - 0.5
    # mean grid fraction i/(2**m - 1), valid for either ramp direction
    mean_u = (mean_f - linear.b) / (linear.a * (rv.values.size - 1))
    originals = rv.original_values()
    return float(originals[0] + mean_u * (originals[-1] - originals[0]))


# ---------------------------------------------------------------------------
# Assembly and simulation
# ---------------------------------------------------------------------------


@dataclass
class QMCConfig:
    dims: int = 1
    m: int = 5
    n: int = 6
    r_mode: str = "exact"          # "exact" | "linear"
    a_mode: str = "exact_prep"     # "exact_prep" | "trained_ansatz"
    theta_side: str = "left"
    method: str = "auto"           # "circuit" | "powers" | "spectral" | "auto"
    cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if self.r_mode not in ("exact", "linear"):
            raise ValueError(f"unknown r_mode {self.r_mode!r}")
        if self.a_mode not in ("exact_prep", "trained_ansatz"):
            raise ValueError(f"unknown a_mode {self.a_mode!r}")
        if self.r_mode == "linear" and self.dims != 1:
            raise ValueError("the linear encoding handles one dimension only")


@dataclass
class PhaseEstimate:
    """Exact outcome distribution of the estimation register plus readout."""

    distribution: np.ndarray
    theta_hat: float
    mu_normalized: float
    mu: float
    n: int
    oracle_calls: int
    p1: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        total = float(np.sum(self.distribution))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"distribution sums to {total}, expected 1")


def _a_circuits(config: QMCConfig, dists, ansatz: VariationalAnsatz | None):
    circs = []
    for j, dist in enumerate(dists):
        reg = list(range(j * config.m, (j + 1) * config.m))
        if config.a_mode == "exact_prep":
            circs.append(exact_state_prep(dist, reg))
        else:
            if ansatz is None:
                raise ValueError("trained_ansatz mode needs ansatz parameters")
            circs.append(ansatz_circuit(ansatz, reg))
    return circs


def assemble_f(config: QMCConfig, dists, rv: RandomVariableSpec,
               ansatz: VariationalAnsatz | None = None,
               linear: LinearRParams | None = None) -> Circuit:
    """F circuit on dims*m register qubits plus the ancilla (last wire)."""
    dists = list(dists)
    if len(dists) != config.dims:
        raise ValueError(f"expected {config.dims} distributions, got {len(dists)}")
    if any(d.m != config.m for d in dists):
        raise ValueError("all distributions must use m qubits")
    total_m = config.dims * config.m
    ancilla = total_m
    a_all = Circuit(total_m)
    for c in _a_circuits(config, dists, ansatz):
        a_all.extend(c)
    if config.r_mode == "exact":
        if rv.values.shape != (1 << total_m,):
            raise ValueError(
                f"random variable needs {1 << total_m} grid values, "
                f"got {rv.values.shape}"
            )
        r_circ = build_R_exact(rv, list(range(total_m)), ancilla)
    else:
        if linear is None:
            raise ValueError("linear mode needs LinearRParams")
        ramp = np.linspace(0.0, 1.0, 1 << total_m)
        if not np.allclose(rv.values, ramp) and not np.allclose(rv.values, ramp[::-1]):
            raise ValueError("linear encoding requires a variable linear in the grid")
        r_circ = build_R_linear(total_m, linear, list(range(total_m)), ancilla)
    return build_F(a_all, r_circ)


def _dense_f(config: QMCConfig, dists, rv, ansatz, linear) -> np.ndarray:
    """Structure-aware dense F: kron of register preparations, then the
    block-diagonal ancilla rotation.  Cross-checked against dense_unitary of
    the assembled circuit in the tests."""
    mats = []
    for j, dist in enumerate(dists):
        if config.a_mode == "exact_prep":
            c = exact_state_prep(dist)
        else:
            c = ansatz_circuit(ansatz)
        mats.append(dense_unitary(c))
    a_mat = mats[0]
    for mat in mats[1:]:
        a_mat = np.kron(a_mat, mat)
    total_m = config.dims * config.m
    dim = 1 << total_m
    if config.r_mode == "exact":
        half = 2.0 * np.arcsin(np.sqrt(np.clip(rv.values, 0.0, 1.0)))
    else:
        idx = np.arange(dim)
        half = math.pi / 2 + 2.0 * linear.b + 2.0 * linear.a * idx
    c, s = np.cos(half / 2.0), np.sin(half / 2.0)
    f_mat = np.zeros((2 * dim, 2 * dim), dtype=np.complex128)
    rows = np.arange(dim) * 2
    big = np.kron(a_mat, np.eye(2))
    # R is block-diagonal in the register index: scale row pairs of A (x) I.
    f_mat[rows, :] = c[:, None] * big[rows, :] - s[:, None] * big[rows + 1, :]
    f_mat[rows + 1, :] = s[:, None] * big[rows, :] + c[:, None] * big[rows + 1, :]
    return f_mat


def _dense_grover(f_mat: np.ndarray) -> np.ndarray:
    dim = f_mat.shape[0]
    z0 = np.ones(dim)
    z0[0] = -1.0
    v = np.ones(dim)
    v[1::2] = -1.0
    g = f_mat @ (z0[:, None] * (f_mat.conj().T * v[None, :]))
    return g @ g


def _kernel(theta: float, n: int) -> np.ndarray:
    """|<y| QFT^-1 |phase theta>|^2 for y = 0..2**n-1 (Dirichlet kernel).

    Evaluated as (sin(pi d) / (size sin(pi d / size)))**2 with the integer
    offset d = theta*size - y reduced into [-size/2, size/2]; this form stays
    accurate for large registers where theta*size is a big number.
    """
    size = 1 << n
    # Split theta and reduce the exact high part modulo the register size
    # before adding the low correction: peak offsets near a wrapped phase
    # would otherwise lose ~size*eps of absolute precision.
    theta_hi = round(theta * (1 << 26)) / (1 << 26)
    theta_lo = theta - theta_hi
    d = theta_hi * size - np.arange(size, dtype=float)
    d -= size * np.round(d / size)
    d += theta_lo * size
    d -= size * np.round(d / size)
    out = np.empty(size)
    small = np.abs(d) < 1e-9
    num = np.sin(np.pi * d[~small])
    den = size * np.sin(np.pi * d[~small] / size)
    out[~small] = (num / den) ** 2
    out[small] = 1.0
    return out


def spectral_distribution(p1: float, n: int) -> np.ndarray:
    """Exact estimation-register distribution from the encoded probability.

    The input state splits evenly over the two Grover eigenstates with
    phases +-theta, so the output is the half/half mix of their phase
    kernels.  Valid for any F; pinned against the circuit simulation in the
    tests.
    """
    theta = math.acos(max(-1.0, min(1.0, 1.0 - 2.0 * p1))) / math.pi
    return 0.5 * (_kernel(theta, n) + _kernel(-theta, n))


def _simulate_distribution(config, f_circuit, f_mat, n):
    """theta-ordered outcome distribution for the chosen method."""
    s = f_circuit.num_qubits
    total = s + n
    method = config.method
    if method == "auto":
        method = "powers" if total <= 24 else "spectral"
    if method == "circuit":
        circ = phase_estimation(f_circuit, n, cap=config.cap)
        state = apply_circuit(init_state(circ.num_qubits, config.cap), circ)
        measured = probabilities(state, circ.metadata["est_qubits"])
    elif method == "powers":
        if total > config.cap:
            raise ResourceLimitError(
                f"{total} qubits exceed the cap of {config.cap}"
            )
        state = init_state(total, config.cap).amplitudes
        tensor = state.reshape((2,) * total)
        # F on the system wires, Hadamards on the estimation wires
        from .sim import _apply_gate_tensor  # shared in-place kernels

        state_mat = state.reshape(1 << s, 1 << n)
        chi = np.zeros(1 << s, dtype=np.complex128)
        chi[0] = 1.0
        chi = f_mat @ chi
        state_mat[:, :] = 0.0
        state_mat[:, :] = chi[:, None] / math.sqrt(1 << n)
        power = _dense_grover(f_mat)
        est_index = np.arange(1 << n)
        for k in range(n - 1, -1, -1):
            mask = (est_index >> (n - 1 - k)) & 1 == 1
            state_mat[:, mask] = power @ state_mat[:, mask]
            if k > 0:
                power = power @ power
        iqft = inverse_qft(range(s, s + n))
        for gate in iqft.gates:
            _apply_gate_tensor(tensor, gate, total)
        measured = np.abs(state_mat) ** 2
        measured = measured.sum(axis=0)
    else:  # spectral
        chi = np.zeros(1 << s, dtype=np.complex128)
        chi[0] = 1.0
        chi = f_mat @ chi
        p1 = float(np.sum(np.abs(chi[1::2]) ** 2))
        return spectral_distribution(p1, n), p1
    rev = bit_reversal_permutation(n)
    theta_ordered = measured[rev]
    chi = f_mat @ np.eye(1 << s, dtype=np.complex128)[:, 0]
    p1 = float(np.sum(np.abs(chi[1::2]) ** 2))
    return theta_ordered, p1


def run_qmc(config: QMCConfig, dists, rv: RandomVariableSpec,
            ansatz: VariationalAnsatz | None = None) -> PhaseEstimate:
    """Assemble and run the full estimation pipeline.

    Returns the exact outcome distribution over estimation bitstrings, the
    extracted phase, and the recovered expectation in normalized and original
    units.  The linear rotation encoding recomputes its c_s rescaling for the
    configured number of estimation qubits.
    """
    dists = list(dists)
    linear = None
    if config.r_mode == "linear":
        increasing = bool(rv.values[-1] >= rv.values[0])
        linear = LinearRParams.for_oracle_budget(config.m, config.n, increasing)
    f_circuit = assemble_f(config, dists, rv, ansatz, linear)
    f_mat = _dense_f(config, dists, rv, ansatz, linear)
    distribution, p1 = _simulate_distribution(config, f_circuit, f_mat, config.n)
    theta_hat = extract_theta(distribution, config.theta_side)
    mu_norm = theta_to_mu(theta_hat)
    mu = denormalize_mu(mu_norm, rv, linear)
    return PhaseEstimate(
        distribution=distribution,
        theta_hat=theta_hat,
        mu_normalized=mu_norm,
        mu=mu,
        n=config.n,
        oracle_calls=2**config.n - 1,
        p1=p1,
        extras={"linear": linear},
    )
