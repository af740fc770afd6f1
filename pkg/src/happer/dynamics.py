"""Time evolution under the rotating field: trajectories, geometric-phase
extraction, and ramp-rate scans through the anti-crossing.

The propagator is the exact exponential of the midpoint Hamiltonian,
exp(-i H(t_mid) dt), evaluated by eigendecomposition; every step is
exactly unitary, so norm drift is a pure floating-point diagnostic.  For
a rotating field at constant couplings the step reduces to a fixed
exponential conjugated by diagonal J_z phases, which is used as a fast
path (it is the same operator, not an approximation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdiabaticityError
from .model import ModelParams, _product_operators, build_hamiltonian
from .spectrum import eigensystem
from .tolerances import TOL


@dataclass(frozen=True)
class DriveProtocol:
    """Field cone at polar angle theta0 rotating with angular frequency omega.

    x and y override the static parameters when given; a (start, end)
    pair means a linear ramp over the full protocol duration.
    """

    theta0: float
    omega: float
    n_periods: int = 1
    x: float | tuple[float, float] | None = None
    y: float | tuple[float, float] | None = None

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def total_time(self) -> float:
        return self.n_periods * self.period

    def coupling_at(self, t: float, p0: ModelParams) -> tuple[float, float]:
        def value(spec, default):
            if spec is None:
                return default
            if isinstance(spec, tuple):
                frac = t / self.total_time
                return spec[0] + (spec[1] - spec[0]) * frac
            return spec
        return value(self.x, p0.x), value(self.y, p0.y)

    def is_static_couplings(self, p0: ModelParams) -> bool:
        return not isinstance(self.x, tuple) and not isinstance(self.y, tuple)


@dataclass
class Trajectory:
    """Recorded states and spin expectation values along one drive."""

    times: np.ndarray
    states: np.ndarray       # (n, dim)
    s_avg: np.ndarray        # (n, 3)
    l_avg: np.ndarray
    j_avg: np.ndarray
    norm_drift: float
    params: ModelParams
    protocol: DriveProtocol

    def to_csv(self, path, with_state: bool = False) -> None:
        with open(path, "w") as fh:
            fh.write("# schema=1\n")
            cols = ["t", "sx", "sy", "sz", "lx", "ly", "lz", "jx", "jy", "jz"]
            if with_state:
                dim = self.states.shape[1]
                cols += [f"re_c{i}" for i in range(dim)] + [f"im_c{i}" for i in range(dim)]
            fh.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [t, *self.s_avg[i], *self.l_avg[i], *self.j_avg[i]]
                if with_state:
                    row += list(self.states[i].real) + list(self.states[i].imag)
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")


def _jz_diagonal(nuclear_two_l: int) -> np.ndarray:
    s, l, _, _, _ = _product_operators(nuclear_two_l)
    ms = np.diag(s.sz).real
    ml = np.diag(l.sz).real
    return np.add.outer(ms, ml).ravel()


def _expectations(states: np.ndarray, nuclear_two_l: int) -> tuple[np.ndarray, np.ndarray]:
    _, _, big_s, big_l, _ = _product_operators(nuclear_two_l)
    s_avg = np.stack([np.einsum("ni,ij,nj->n", states.conj(), op, states).real
                      for op in big_s], axis=1)
    l_avg = np.stack([np.einsum("ni,ij,nj->n", states.conj(), op, states).real
                      for op in big_l], axis=1)
    return s_avg, l_avg


def propagate(p0: ModelParams, protocol: DriveProtocol, initial: np.ndarray,
              steps_per_period: int = 2000, record_every: int = 1) -> Trajectory:
    """Step the state through n_periods of the rotating drive."""
    if steps_per_period < 100:
        raise ValueError("steps_per_period must be at least 100")
    psi = np.asarray(initial, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1.0) > TOL.unit_vector * 100:
        raise ValueError("initial state must be normalized")
    n_steps = steps_per_period * protocol.n_periods
    dt = protocol.period / steps_per_period
    jz = _jz_diagonal(p0.nuclear_two_l)

    fast = (protocol.is_static_couplings(p0)
            and (protocol.coupling_at(0.0, p0)[1] == 0.0
                 or abs(p0.axis[0]) + abs(p0.axis[1]) < 1e-15))

    rec_idx = list(range(0, n_steps + 1, record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    recorded = np.empty((len(rec_idx), p0.dim), dtype=complex)
    rec_times = np.empty(len(rec_idx))
    pos = 0
    if rec_idx[0] == 0:
        recorded[0] = psi
        rec_times[0] = 0.0
        pos = 1

    if fast:
        x0, y0 = protocol.coupling_at(0.0, p0)
        p_frame = ModelParams(p0.nuclear_two_l, x0, y0,
                              p0.field.__class__(protocol.theta0, 0.0), p0.axis)
        w0, v0 = np.linalg.eigh(build_hamiltonian(p_frame))
        step_op = (v0 * np.exp(-1j * w0 * dt)) @ v0.conj().T
        for step in range(n_steps):
            phi_mid = protocol.omega * (step + 0.5) * dt
            rot = np.exp(-1j * phi_mid * jz)
            psi = rot * (step_op @ (rot.conj() * psi))
            if pos < len(rec_idx) and step + 1 == rec_idx[pos]:
                recorded[pos] = psi
                rec_times[pos] = (step + 1) * dt
                pos += 1
    else:
        for step in range(n_steps):
            t_mid = (step + 0.5) * dt
            x_t, y_t = protocol.coupling_at(t_mid, p0)
            p_t = ModelParams(p0.nuclear_two_l, x_t, y_t,
                              p0.field.__class__(protocol.theta0, protocol.omega * t_mid),
                              p0.axis)
            w, v = np.linalg.eigh(build_hamiltonian(p_t))
            psi = (v * np.exp(-1j * w * dt)) @ (v.conj().T @ psi)
            if pos < len(rec_idx) and step + 1 == rec_idx[pos]:
                recorded[pos] = psi
                rec_times[pos] = (step + 1) * dt
                pos += 1

    norms = np.linalg.norm(recorded, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > TOL.norm_drift:
        raise RuntimeError(f"norm drift {drift:.2e} exceeded tolerance during propagation")
    s_avg, l_avg = _expectations(recorded, p0.nuclear_two_l)
    return Trajectory(rec_times, recorded, s_avg, l_avg, s_avg + l_avg, drift, p0, protocol)


def instantaneous_hamiltonian(p0: ModelParams, protocol: DriveProtocol, t: float) -> np.ndarray:
    x_t, y_t = protocol.coupling_at(t, p0)
    p_t = ModelParams(p0.nuclear_two_l, x_t, y_t,
                      p0.field.__class__(protocol.theta0, protocol.omega * t), p0.axis)
    return build_hamiltonian(p_t)


def initial_eigenstate(p0: ModelParams, protocol: DriveProtocol, position: int) -> np.ndarray:
    """Instantaneous eigenstate (ascending position, 0-based) at t = 0."""
    es = eigensystem(instantaneous_hamiltonian(p0, protocol, 0.0))
    return es.eigenvectors[:, position].copy()


def geometric_phase_diagnostics(traj: Trajectory, p0: ModelParams, protocol: DriveProtocol,
                                n_samples: int = 65) -> tuple[float, float]:
    """(geometric phase, minimum instantaneous-eigenstate fidelity).

    No fidelity floor is enforced here; see extract_geometric_phase.
    """
    idx = np.unique(np.linspace(0, len(traj.times) - 1, n_samples).astype(int))
    energies = np.empty(len(idx))
    min_fidelity = 1.0
    for out, i in enumerate(idx):
        h = instantaneous_hamiltonian(p0, protocol, float(traj.times[i]))
        w, v = np.linalg.eigh(h)
        overlaps = np.abs(v.conj().T @ traj.states[i]) ** 2
        branch = int(np.argmax(overlaps))
        min_fidelity = min(min_fidelity, float(overlaps[branch]))
        energies[out] = w[branch]
    if np.ptp(energies) < 1e-10:
        dynamical = float(np.mean(energies)) * float(traj.times[-1])
    else:
        dynamical = float(np.trapezoid(energies, traj.times[idx]))
    total = float(np.angle(np.vdot(traj.states[0], traj.states[-1])))
    return float(np.angle(np.exp(1j * (total + dynamical)))), min_fidelity


def extract_geometric_phase(traj: Trajectory, p0: ModelParams, protocol: DriveProtocol,
                            n_samples: int = 65) -> float:
    """Geometric phase of a closed adiabatic drive, dynamical part removed.

    The dynamical phase is the time integral of the followed
    instantaneous eigenvalue; the followed branch is identified at each
    sample time by overlap with the propagated state, and leakage below
    the fidelity floor raises AdiabaticityError.  Returns the phase
    wrapped to (-pi, pi].
    """
    phase, min_fidelity = geometric_phase_diagnostics(traj, p0, protocol, n_samples)
    if min_fidelity < TOL.adiabatic_fidelity:
        raise AdiabaticityError(
            f"state leaked from the followed level: minimum fidelity {min_fidelity:.4f}")
    return phase


def adiabatic_omega(p0: ModelParams, protocol_theta: float, factor: float = 1e-3,
                    n_phi_probe: int = 16) -> float:
    """Drive frequency factor x (minimum spectral gap along the field cone)."""
    gaps = []
    for phi in np.linspace(0, 2 * np.pi, n_phi_probe, endpoint=False):
        p = p0.with_field(protocol_theta, float(phi))
        w = np.linalg.eigvalsh(build_hamiltonian(p))
        gaps.append(float(np.min(np.diff(w))))
    return factor * min(gaps)


def cone_fit(vectors: np.ndarray) -> tuple[np.ndarray, float, float, float]:
    """Fit a cone to a closed trajectory of 3-vectors.

    Returns (axis, opening angle, solid angle about the axis, max angular
    deviation from the mean opening angle).
    """
    v = np.asarray(vectors, dtype=float)
    if len(v) > 2 and np.allclose(v[0], v[-1], atol=1e-6):
        v = v[:-1]  # closed curve: the duplicated endpoint would bias the axis
    norms = np.linalg.norm(v, axis=1)
    if np.min(norms) < 1e-12:
        raise ValueError("trajectory passes through the origin; no cone is defined")
    unit = v / norms[:, None]
    axis = unit.mean(axis=0)
    axis_norm = np.linalg.norm(axis)
    if axis_norm < 1e-12:
        raise ValueError("trajectory has no mean axis (great-circle-like path)")
    axis = axis / axis_norm
    angles = np.arccos(np.clip(unit @ axis, -1.0, 1.0))
    opening = float(np.mean(angles))
    solid = float(2 * np.pi * (1 - np.cos(opening)))
    return axis, opening, solid, float(np.max(np.abs(angles - opening)))


@dataclass(frozen=True)
class RampResult:
    """Final populations after one linear x ramp through the anti-crossing."""

    rate: float
    populations: np.ndarray
    stay_probability: float
    transition_probability: float


def landau_zener_scan(p_base: ModelParams, x_start: float, x_end: float,
                      rates, level: int, dt_max: float = 0.25,
                      min_steps: int = 400) -> list[RampResult]:
    """Sweep x linearly at several rates and record level populations.

    The initial state is the instantaneous eigenstate of the given level
    (1-based, ascending energy) at x_start; populations are measured in
    the x_end eigenbasis.  Requires y != 0 and a ramp interval that
    actually contains the anti-crossing.
    """
    if p_base.y == 0.0:
        raise ValueError("the ramp scan probes an anti-crossing and needs y != 0")
    lo, hi = min(x_start, x_end), max(x_start, x_end)
    x_anti = p_base.crossing_x()
    if not lo < x_anti < hi:
        raise ValueError(f"ramp [{x_start}, {x_end}] does not cross the anti-crossing "
                         f"near x = {x_anti:.4f}")
    es0 = eigensystem(build_hamiltonian(p_base.with_x(x_start)))
    psi0 = es0.eigenvectors[:, level - 1]
    es1 = eigensystem(build_hamiltonian(p_base.with_x(x_end)))
    results = []
    span = x_end - x_start
    for rate in rates:
        duration = abs(span) / rate
        n_steps = max(min_steps, int(np.ceil(duration / dt_max)))
        dt = duration / n_steps
        psi = psi0.copy()
        for step in range(n_steps):
            x_mid = x_start + span * (step + 0.5) / n_steps
            w, v = np.linalg.eigh(build_hamiltonian(p_base.with_x(float(x_mid))))
            psi = (v * np.exp(-1j * w * dt)) @ (v.conj().T @ psi)
        populations = np.abs(es1.eigenvectors.conj().T @ psi) ** 2
        stay = float(populations[level - 1])
        results.append(RampResult(float(rate), populations, stay, 1.0 - stay))
    return results
