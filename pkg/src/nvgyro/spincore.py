"""Exact quantum mechanics of the small spin systems used by the gyroscope.

Two Hilbert spaces appear in this package: the bare 14N nuclear spin-1
(3 levels) and the joint NV-electron x nucleus space (9 levels). Both are
small enough that all propagators are computed by exact eigendecomposition;
no series or Trotter approximations anywhere.

Conventions (fixed here, relied on everywhere else):

* Nuclear basis order is ``(m_I = +1, 0, -1)``; the joint basis is
  electron-major, ``(m_S, m_I)`` with both indices descending, so level
  ``(m_S, m_I)`` sits at index ``3*(1 - m_S) + (1 - m_I)``.
* Hamiltonian builders return ordinary frequencies (Hz). ``propagate``
  multiplies by 2*pi, i.e. evolves with ``exp(-i 2pi H t)``.
* An rf pulse of phase ``phi`` rotates the spin about the in-plane axis
  generated by ``Sx*cos(phi) - Sy*sin(phi)``; ``flip_angle`` is the spin
  rotation angle.  With this sign pairing a pi/2 pulse empties |0> into
  the |+-1> manifold and a Ramsey pair whose second pulse carries phase
  ``+Omega*tau`` reproduces the standard rotating-frame interferometer
  fringe (see the sequence module, which pins the closed form in tests).
  Single-transition pulses use the usual two-level convention where a
  ``pi`` flip fully inverts the driven transition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LevelBasis",
    "SpinState",
    "OperatorMatrix",
    "PhysicalConstants",
    "NuclearTransition",
    "BasisMismatchError",
    "NUCLEAR_BASIS",
    "JOINT_BASIS",
    "SX",
    "SY",
    "SZ",
    "build_nuclear_hamiltonian",
    "build_joint_hamiltonian",
    "propagate",
    "rf_pulse_unitary",
    "compose",
    "expm_hermitian",
]


class BasisMismatchError(ValueError):
    """Raised when a state and an operator live on different bases (caller bug)."""


@dataclass(frozen=True)
class LevelBasis:
    """Ordered, named level basis (dimension 3 or 9 in this package)."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("basis labels must be unique")

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _nuclear_labels() -> tuple[str, ...]:
    return tuple(f"mI{m:+d}" for m in (1, 0, -1))


def _joint_labels() -> tuple[str, ...]:
    return tuple(f"mS{ms:+d},mI{mi:+d}" for ms in (1, 0, -1) for mi in (1, 0, -1))


#: 14N nuclear basis, order (+1, 0, -1).
NUCLEAR_BASIS = LevelBasis(_nuclear_labels())
#: Joint electron (x) nucleus basis, electron-major, both indices descending.
JOINT_BASIS = LevelBasis(_joint_labels())

#: m_I (or m_S) values in basis order for a single spin-1.
M_VALUES = np.array([1.0, 0.0, -1.0])

# Spin-1 operators in the (+1, 0, -1) basis.
SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / np.sqrt(2.0)
SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / np.sqrt(2.0)
SZ = np.diag(M_VALUES).astype(complex)


def joint_index(m_s: int, m_i: int) -> int:
    """Index of joint level (m_S, m_I) in :data:`JOINT_BASIS`."""
    return 3 * (1 - m_s) + (1 - m_i)


@dataclass(frozen=True)
class SpinState:
    """Pure state: complex amplitudes over a named basis, unit norm."""

    basis: LevelBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"amplitude vector must have shape ({self.basis.dim},)")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"state norm {nrm!r} deviates from 1 by more than 1e-12")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "SpinState") -> complex:
        if other.basis != self.basis:
            raise BasisMismatchError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class OperatorMatrix:
    """Square complex operator bound to a basis (Hamiltonian, pulse, propagator)."""

    basis: LevelBasis
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        d = self.basis.dim
        if m.shape != (d, d):
            raise ValueError(f"operator must be {d}x{d}")
        object.__setattr__(self, "entries", m)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) < tol)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        d = self.basis.dim
        return bool(
            np.max(np.abs(self.entries.conj().T @ self.entries - np.eye(d))) < tol
        )

    def apply(self, state: SpinState) -> SpinState:
        if state.basis != self.basis:
            raise BasisMismatchError("operator and state bases differ")
        return SpinState(self.basis, self.entries @ state.amplitudes)


@dataclass(frozen=True)
class PhysicalConstants:
    """Static spin-Hamiltonian parameters. All couplings in Hz, field in gauss.

    Defaults follow the standard NV / 14N literature values; the quadrupole
    splitting and the nuclear gyromagnetic ratio are not pinned by the
    sensitivity analysis itself and are deliberately plain config inputs
    (``quadrupole_q_hz`` magnitude ~4.95 MHz, sign configurable; only
    sign-independent observables are tested).
    """

    quadrupole_q_hz: float = 4.95e6       # 14N quadrupole splitting Q
    gamma_n_hz_per_gauss: float = 307.7   # 14N gyromagnetic ratio (3.077 MHz/T)
    gamma_e_hz_per_gauss: float = 2.8025e6  # NV electron gyromagnetic ratio
    zfs_delta_hz: float = 2.87e9          # NV zero-field splitting Delta
    hyperfine_a_hz: float = 2.2e6         # longitudinal hyperfine coupling A
    bias_gauss: float = 20.0              # bias field b separating NV families

    def __post_init__(self):
        for name in (
            "quadrupole_q_hz",
            "gamma_n_hz_per_gauss",
            "gamma_e_hz_per_gauss",
            "zfs_delta_hz",
            "hyperfine_a_hz",
            "bias_gauss",
        ):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def nuclear_zeeman_hz(self) -> float:
        """gamma_N * b in Hz."""
        return self.gamma_n_hz_per_gauss * self.bias_gauss

    @property
    def electron_zeeman_hz(self) -> float:
        """gamma_e * b in Hz."""
        return self.gamma_e_hz_per_gauss * self.bias_gauss


class NuclearTransition(enum.Enum):
    """Which quadrupolar transition(s) an rf pulse drives."""

    BOTH = "both"      # 0 <-> +1 and 0 <-> -1 symmetrically
    PLUS = "plus"      # 0 <-> +1 only
    MINUS = "minus"    # 0 <-> -1 only


def build_nuclear_hamiltonian(c: PhysicalConstants) -> OperatorMatrix:
    """Bare 14N Hamiltonian Q*Sz^2 + gamma_N*b*Sz, diagonal, in Hz."""
    q, zee = c.quadrupole_q_hz, c.nuclear_zeeman_hz
    diag = q * M_VALUES**2 + zee * M_VALUES
    return OperatorMatrix(NUCLEAR_BASIS, np.diag(diag).astype(complex))


def build_joint_hamiltonian(c: PhysicalConstants) -> OperatorMatrix:
    """Secular electron-nuclear Hamiltonian on the 9-level joint basis (Hz).

    Diagonal entries Delta*mS^2 + gamma_e*b*mS + A*mS*mI + Q*mI^2 + gamma_N*b*mI;
    only the longitudinal hyperfine component is kept (large zero-field
    splitting suppresses the transverse part).
    """
    diag = np.empty(9)
    for ms in (1, 0, -1):
        for mi in (1, 0, -1):
            diag[joint_index(ms, mi)] = (
                c.zfs_delta_hz * ms**2
                + c.electron_zeeman_hz * ms
                + c.hyperfine_a_hz * ms * mi
                + c.quadrupole_q_hz * mi**2
                + c.nuclear_zeeman_hz * mi
            )
    return OperatorMatrix(JOINT_BASIS, np.diag(diag).astype(complex))


def expm_hermitian(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(-i * scale * h) for Hermitian h, via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def propagate(state: SpinState, hamiltonian: OperatorMatrix, t: float) -> SpinState:
    """Evolve ``state`` under ``hamiltonian`` (Hz) for ``t`` seconds.

    Returns exp(-i 2pi H t)|state>.  Raises :class:`BasisMismatchError` if
    the operator lives on a different basis.
    """
    if state.basis != hamiltonian.basis:
        raise BasisMismatchError("state and Hamiltonian bases differ")
    u = expm_hermitian(hamiltonian.entries, 2.0 * np.pi * t)
    return SpinState(state.basis, u @ state.amplitudes)


def rf_pulse_unitary(
    axis_phase: float,
    flip_angle: float,
    transition: NuclearTransition = NuclearTransition.BOTH,
) -> OperatorMatrix:
    """Hard-pulse rotating-frame unitary on the nuclear spin.

    ``transition=BOTH`` drives the two quadrupolar transitions symmetrically
    with generator ``Sx*cos(phase) - Sy*sin(phase)``; ``flip_angle`` is the
    spin-1 rotation angle, so ``pi/2`` transfers |0> fully into the |+-1>
    manifold and ``pi`` exchanges |+1> and |-1| up to a global sign.
    Single-transition pulses are two-level rotations on {|0>, |+-1>} with
    the standard convention (``pi`` = complete transfer).  Detuning during
    the pulse is ignored (hard-pulse limit).
    """
    if not 0.0 <= flip_angle <= 2.0 * np.pi:
        raise ValueError("flip_angle must lie in [0, 2*pi]")
    if transition is NuclearTransition.BOTH:
        gen = SX * np.cos(axis_phase) - SY * np.sin(axis_phase)
        return OperatorMatrix(NUCLEAR_BASIS, expm_hermitian(gen, flip_angle))
    gen = np.zeros((3, 3), dtype=complex)
    row = 0 if transition is NuclearTransition.PLUS else 2
    gen[row, 1] = np.exp(1j * axis_phase)
    gen[1, row] = np.exp(-1j * axis_phase)
    return OperatorMatrix(NUCLEAR_BASIS, expm_hermitian(gen, flip_angle / 2.0))


def compose(*ops: OperatorMatrix) -> OperatorMatrix:
    """Compose operators; the rightmost argument is applied first.

    ``compose(U2, U1).apply(s) == U2.apply(U1.apply(s))``.
    """
    if not ops:
        raise ValueError("need at least one operator")
    basis = ops[0].basis
    out = np.eye(basis.dim, dtype=complex)
    for op in ops:
        if op.basis != basis:
            raise BasisMismatchError("cannot compose operators on different bases")
        out = out @ op.entries
    return OperatorMatrix(basis, out)
