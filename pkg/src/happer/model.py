"""Hamiltonians of the driven electron-triplet / nuclear-spin system.

The full Hamiltonian, in Zeeman units, is

    H = n_B . S  +  x S.L  +  y [3 (a.S)^2 - S^2] (x) I_L

with S the electron spin-1 triple, L the nuclear spin, n_B(theta, phi)
the unit field direction and a the internuclear axis.  The product
basis |S_z, L_z> is ordered lexicographically with both quantum numbers
descending, electron factor first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .operators import SpinQuantumNumber, commutator, kron, spin_operators
from .tolerances import TOL

ELECTRON_TWO_J = 2  # triplet dimer, S = 1


@dataclass(frozen=True)
class FieldDirection:
    """Polar angles of the magnetic-field unit vector."""

    theta: float
    phi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")

    def unit_vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


@dataclass(frozen=True)
class ModelParams:
    """Full configuration: nuclear spin 2L, couplings x and y, field, axis."""

    nuclear_two_l: int
    x: float
    y: float = 0.0
    field: FieldDirection = field(default_factory=lambda: FieldDirection(0.0, 0.0))
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self) -> None:
        if self.nuclear_two_l < 0:
            raise ValueError("nuclear_two_l must be non-negative")
        norm = float(np.linalg.norm(self.axis))
        if abs(norm - 1.0) > TOL.unit_vector:
            raise ValueError(f"axis must be a unit vector, |a| = {norm}")

    @property
    def nuclear_l(self) -> float:
        return self.nuclear_two_l / 2

    @property
    def dim(self) -> int:
        """Hilbert-space dimension 3 (2L + 1)."""
        return 3 * (self.nuclear_two_l + 1)

    def with_field(self, theta: float, phi: float) -> "ModelParams":
        return ModelParams(self.nuclear_two_l, self.x, self.y, FieldDirection(theta, phi), self.axis)

    def with_x(self, x: float) -> "ModelParams":
        return ModelParams(self.nuclear_two_l, x, self.y, self.field, self.axis)

    def crossing_x(self) -> float:
        """Coupling 2/(2L+1) where the (2L+1)-fold level crossing sits (y = 0)."""
        return 2.0 / (self.nuclear_two_l + 1)


@lru_cache(maxsize=16)
def _product_operators(nuclear_two_l: int):
    """Electron and nuclear spin components lifted to the product space."""
    s = spin_operators(SpinQuantumNumber(ELECTRON_TWO_J))
    l = spin_operators(SpinQuantumNumber(nuclear_two_l))
    eye_l = np.eye(l.dim)
    eye_s = np.eye(s.dim)
    big_s = tuple(kron(c, eye_l) for c in (s.sx, s.sy, s.sz))
    big_l = tuple(kron(eye_s, c) for c in (l.sx, l.sy, l.sz))
    exchange = sum(kron(a, b) for a, b in zip((s.sx, s.sy, s.sz), (l.sx, l.sy, l.sz)))
    return s, l, big_s, big_l, exchange


def spin_axis_operator(axis: tuple[float, float, float], nuclear_two_l: int) -> np.ndarray:
    """The axis interaction 3 (a.S)^2 - S^2 on the product space (S = 1)."""
    s, _, _, _, _ = _product_operators(nuclear_two_l)
    a_s = s.along(np.asarray(axis))
    small = 3 * (a_s @ a_s) - s.casimir()
    return kron(small, np.eye(nuclear_two_l + 1))


def build_hamiltonian(p: ModelParams) -> np.ndarray:
    """Assemble H = n_B.S + x S.L + y [3 (a.S)^2 - S^2]; Hermitian by construction."""
    _, _, big_s, _, exchange = _product_operators(p.nuclear_two_l)
    n = p.field.unit_vector()
    h = n[0] * big_s[0] + n[1] * big_s[1] + n[2] * big_s[2] + p.x * exchange
    if p.y != 0.0:
        h = h + p.y * spin_axis_operator(p.axis, p.nuclear_two_l)
    return h


def hamiltonian_batch(p: ModelParams, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """H evaluated at arrays of field angles; returns shape theta.shape + (dim, dim).

    The couplings x, y and the axis are held fixed; only the field
    direction varies.  Used by the sphere-mesh machinery.
    """
    _, _, big_s, _, exchange = _product_operators(p.nuclear_two_l)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    nx = (st * np.cos(phi))[..., None, None]
    ny = (st * np.sin(phi))[..., None, None]
    nz = np.cos(theta)[..., None, None]
    h = nx * big_s[0] + ny * big_s[1] + nz * big_s[2] + p.x * exchange
    if p.y != 0.0:
        h = h + p.y * spin_axis_operator(p.axis, p.nuclear_two_l)
    return h


def conserved_j(p: ModelParams) -> np.ndarray:
    """Total-spin component along the field, n_B.(S + L); commutes with H at y = 0."""
    _, _, big_s, big_l, _ = _product_operators(p.nuclear_two_l)
    n = p.field.unit_vector()
    return sum(n[i] * (big_s[i] + big_l[i]) for i in range(3))


def spin_axis_commutator(p: ModelParams) -> np.ndarray:
    """Closed form of [n_B.J, H]: 3iy {(n_B x a).S, a.S} tensor I_L.

    Vanishes identically when y = 0 or when the field is (anti)parallel
    to the axis; equals commutator(conserved_j(p), build_hamiltonian(p))
    entrywise otherwise.
    """
    s, _, _, _, _ = _product_operators(p.nuclear_two_l)
    n = p.field.unit_vector()
    a = np.asarray(p.axis, dtype=float)
    u = np.cross(n, a)
    s_u = s.along(u)
    s_a = s.along(a)
    small = 3j * p.y * (s_u @ s_a + s_a @ s_u)
    return kron(small, np.eye(p.nuclear_two_l + 1))


def momentum_hamiltonian(k: np.ndarray, nuclear_two_l: int) -> np.ndarray:
    """Momentum-space variant H' = k.S + S.L with a non-unit k vector.

    Shares its eigenvectors with the unit-field Hamiltonian at coupling
    x = 1/|k|; the (2L+1)-fold band touching sits on the sphere
    |k| = (2L+1)/2.
    """
    k = np.asarray(k, dtype=float)
    if np.linalg.norm(k) == 0.0:
        raise ValueError("k must be nonzero")
    _, _, big_s, _, exchange = _product_operators(nuclear_two_l)
    return k[0] * big_s[0] + k[1] * big_s[1] + k[2] * big_s[2] + exchange


def semimetal_hamiltonian(k: np.ndarray, j: SpinQuantumNumber) -> np.ndarray:
    """Linear band-touching model k.F for a spin-j multiplet."""
    k = np.asarray(k, dtype=float)
    triple = spin_operators(j)
    return k[0] * triple.sx + k[1] * triple.sy + k[2] * triple.sz


def semimetal_batch(j: SpinQuantumNumber, k_mag: float, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """k.F on a sphere of radius k_mag, batched over direction angles."""
    triple = spin_operators(j)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    nx = (st * np.cos(phi))[..., None, None]
    ny = (st * np.sin(phi))[..., None, None]
    nz = np.cos(theta)[..., None, None]
    return k_mag * (nx * triple.sx + ny * triple.sy + nz * triple.sz)


def projected_hamiltonian(p: ModelParams, band_labels, reference_eigensystem) -> np.ndarray:
    """P H P with P projecting onto the given levels of the reference eigensystem.

    band_labels are level labels (1-based, numbered by energy at large x);
    requires y = 0 so the labels are well defined, and refuses label sets
    whose eigenspaces are not separated from the rest of the spectrum.
    """
    from .spectrum import level_positions  # local import to avoid a cycle

    if p.y != 0.0:
        raise ValueError("projection onto labelled levels is defined for y = 0")
    labels = tuple(sorted(band_labels))
    pos = level_positions(p)
    cols = [pos[lab - 1] for lab in labels]
    w = reference_eigensystem.eigenvalues
    v = reference_eigensystem.eigenvectors
    others = [i for i in range(len(w)) if i not in cols]
    if others:
        gap = min(abs(w[i] - w[c]) for i in others for c in cols)
        if gap < TOL.subspace_isolation:
            raise ValueError(
                f"levels {labels} are degenerate with the complement (gap {gap:.2e}); "
                "perturb x away from the crossing or project the whole cluster"
            )
    frame = v[:, cols]
    proj = frame @ frame.conj().T
    h = build_hamiltonian(p)
    return proj @ h @ proj


def zeeman_params(theta: float = 0.0, phi: float = 0.0) -> ModelParams:
    """Pure precession baseline H = n_B.S (no nuclear spin, x = y = 0)."""
    return ModelParams(0, 0.0, 0.0, FieldDirection(theta, phi))


def commutes_with_conserved_j(p: ModelParams) -> float:
    """Max entrywise magnitude of [n_B.J, H]; zero (to tolerance) iff conserved."""
    c = commutator(conserved_j(p), build_hamiltonian(p))
    return float(np.max(np.abs(c)))
