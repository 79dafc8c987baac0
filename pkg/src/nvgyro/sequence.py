"""Rotation-sensitive pulse sequences on the 14N spin.

The interferometer runs in the frame rotating at the rf carrier (the
quadrupolar frequency), where free evolution reduces to a Zeeman-like
detuning phase on |+-1> and the rotation enters through the rf pulse
phases, which advance at the rotation rate Omega relative to the diamond.
For rotation about the NV axis the noiseless sequence obeys the closed
form pinned by :func:`ramsey_state_closed_form`:

    |psi> = sin(Wt)/sqrt(2) * (exp(-iWt)|-1> - exp(+iWt)|+1>) - cos(Wt)|0>

with W*t the accumulated rotation angle, so the |0> population reads
cos^2(W*t).

The echo is a diamond-frame operation built from three single-transition
pi pulses sharing one phase; the composite exchanges |+1> and |-1> exactly,
with the shared phase cancelling.  It therefore refocuses any static
diagonal (stray-field) shift while leaving the pulse-phase advance, and its
effect on the signal is independent of the phase offset between the on- and
off-chip rf circuits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import (
    NoiseModel,
    nv_t1_dephasing_factor,
    ou_dephasing_phase,
    ou_split_phases,
)
from .spincore import (
    JOINT_BASIS,
    NUCLEAR_BASIS,
    SZ,
    NuclearTransition,
    OperatorMatrix,
    PhysicalConstants,
    SpinState,
    compose,
    expm_hermitian,
    joint_index,
    rf_pulse_unitary,
)

__all__ = [
    "SequenceTiming",
    "RamseyResult",
    "run_ramsey_aligned",
    "run_echo_aligned",
    "echo_unitary",
    "map_to_electron",
    "electron_signal",
    "ramsey_state_closed_form",
    "mapped_state_closed_form",
    "readout_contrast_factor",
    "apply_contrast",
    "max_diff_up_to_global_phase",
    "nuclear_ground_state",
]

#: Populations of a fully dephased (no surviving interference) aligned run.
_INCOHERENT_POPULATIONS = np.array([0.25, 0.5, 0.25])


@dataclass(frozen=True)
class SequenceTiming:
    """Interrogation and overhead times of one sensing cycle (seconds)."""

    tau: float = 1e-3        # free-evolution interrogation time
    t_map: float = 230e-9    # nuclear -> electron mapping duration
    t_pol: float = 2e-6      # polarization time
    t_ro: float = 150e-6     # total readout time

    def __post_init__(self):
        for name in ("tau", "t_map", "t_pol", "t_ro"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def t_dead(self) -> float:
        """Dead time t_ro + t_pol (initialization + readout overhead)."""
        return self.t_ro + self.t_pol


@dataclass(frozen=True)
class RamseyResult:
    """Outcome of one sequence realization.

    ``final_state`` is the unitary (per-shot) state; ``populations`` fold in
    any deterministic contrast factors (NV T1) and always sum to 1;
    ``signal`` is the |0> population, the quantity transduced to
    fluorescence.
    """

    final_state: SpinState
    populations: np.ndarray
    signal: float


def nuclear_ground_state() -> SpinState:
    """Polarized starting state |m_I = 0>."""
    return SpinState(NUCLEAR_BASIS, np.array([0, 1, 0], dtype=complex))


def _detuning_unitary(phase_rad: float) -> OperatorMatrix:
    """exp(-i * phase * Sz): free evolution with accumulated phase (rad)."""
    return OperatorMatrix(NUCLEAR_BASIS, expm_hermitian(SZ, phase_rad))


def _result_from_state(state: SpinState, contrast: float) -> RamseyResult:
    pops = state.populations
    if contrast < 1.0:
        pops = contrast * pops + (1.0 - contrast) * _INCOHERENT_POPULATIONS
    return RamseyResult(state, pops, float(pops[1]))


def _contrast_factor(noise: NoiseModel | None, tau: float) -> float:
    if noise is None or noise.nv_t1_s is None:
        return 1.0
    return nv_t1_dephasing_factor(noise.nv_t1_s, tau)


def run_ramsey_aligned(
    omega: float,
    timing: SequenceTiming,
    c: PhysicalConstants,
    noise: NoiseModel | None = None,
    *,
    detuning_hz: float = 0.0,
    rng=None,
) -> RamseyResult:
    """Ramsey sequence with the rotation axis along the NV axis.

    pi/2 pulse at phase 0, free evolution for ``timing.tau`` with the static
    detuning gamma_N*b + detuning_hz, pi/2 pulse at phase omega*tau.  With
    zero detuning the output matches :func:`ramsey_state_closed_form` and the
    signal is cos^2(omega*tau).  ``noise.ou`` adds one stochastic phase
    realization (pass ``rng`` for reproducible shots).
    """
    tau = timing.tau
    if tau < 0:
        raise ValueError("tau must be >= 0")
    phase = 2.0 * np.pi * (c.nuclear_zeeman_hz + detuning_hz) * tau
    if noise is not None and noise.ou is not None:
        if rng is None:
            rng = np.random.default_rng(noise.ou.seed)
        phase += ou_dephasing_phase(noise.ou, tau, rng)
    u = compose(
        rf_pulse_unitary(omega * tau, np.pi / 2.0),
        _detuning_unitary(phase),
        rf_pulse_unitary(0.0, np.pi / 2.0),
    )
    state = u.apply(nuclear_ground_state())
    return _result_from_state(state, _contrast_factor(noise, tau))


def echo_unitary(phase_offset: float = 0.0) -> OperatorMatrix:
    """Diamond-frame refocusing pulse: composite of three single-transition
    pi pulses sharing ``phase_offset``.

    Equals the |+1> <-> |-1> exchange times a global -1 for every offset
    (the phases cancel pairwise along the 0 <-> +-1 transit), which is what
    makes the echo insensitive to the on/off-chip phase relation.
    """
    plus = rf_pulse_unitary(phase_offset, np.pi, NuclearTransition.PLUS)
    minus = rf_pulse_unitary(phase_offset, np.pi, NuclearTransition.MINUS)
    return compose(plus, minus, plus)


def run_echo_aligned(
    omega: float,
    detuning_hz: float,
    timing: SequenceTiming,
    c: PhysicalConstants,
    noise: NoiseModel | None = None,
    *,
    echo_phase: float = 0.0,
    rng=None,
) -> RamseyResult:
    """Ramsey with a refocusing pulse at tau/2, phase fixed in the diamond frame.

    The static detuning (gamma_N*b + detuning_hz) cancels between the two
    halves; the rotation phase omega*tau survives because it rides on the
    pulse phases, not on the free evolution.  ``echo_phase`` models the
    unknown offset of the on-chip circuit; the signal is independent of it.
    """
    tau = timing.tau
    if tau < 0:
        raise ValueError("tau must be >= 0")
    half = np.pi * (c.nuclear_zeeman_hz + detuning_hz) * tau  # 2pi * f * tau/2
    phase1 = phase2 = half
    if noise is not None and noise.ou is not None:
        if rng is None:
            rng = np.random.default_rng(noise.ou.seed)
        p1, p2 = ou_split_phases(noise.ou, tau, rng)
        phase1 += p1
        phase2 += p2
    u = compose(
        rf_pulse_unitary(omega * tau, np.pi / 2.0),
        _detuning_unitary(phase2),
        echo_unitary(echo_phase),
        _detuning_unitary(phase1),
        rf_pulse_unitary(0.0, np.pi / 2.0),
    )
    state = u.apply(nuclear_ground_state())
    return _result_from_state(state, _contrast_factor(noise, tau))


def ramsey_state_closed_form(omega_t: float) -> SpinState:
    """Noiseless aligned post-Ramsey state for accumulated angle omega_t."""
    wt = omega_t
    amps = np.array(
        [
            -np.sin(wt) * np.exp(1j * wt) / np.sqrt(2.0),
            -np.cos(wt) + 0.0j,
            np.sin(wt) * np.exp(-1j * wt) / np.sqrt(2.0),
        ]
    )
    return SpinState(NUCLEAR_BASIS, amps)


def _mapping_unitary() -> np.ndarray:
    """9x9 conditional readout mapping.

    On nuclear m_I = +-1 the electron is driven from |0> into the symmetric
    (|+1> + |-1>)/sqrt(2) combination (both 0 <-> +-1 microwave transitions,
    hyperfine-selective); the branch signs (-1 for m_I=+1, +1 for m_I=-1)
    fix the mapped closed form tested against
    :func:`mapped_state_closed_form`.  Nuclear |0> is untouched.
    """
    u = np.zeros((9, 9), dtype=complex)
    # nuclear 0 block: electron identity
    for ms in (1, 0, -1):
        u[joint_index(ms, 0), joint_index(ms, 0)] = 1.0
    for mi, sign in ((1, -1.0), (-1, 1.0)):
        e0 = joint_index(0, mi)
        ep = joint_index(1, mi)
        em = joint_index(-1, mi)
        s = sign / np.sqrt(2.0)
        # |0> -> sign*|B>, |B> -> sign*|0>, |D> -> |D>
        u[ep, e0] = s
        u[em, e0] = s
        u[e0, ep] = s
        u[e0, em] = s
        u[ep, ep] = 0.5
        u[em, em] = 0.5
        u[ep, em] = -0.5
        u[em, ep] = -0.5
    return u


_MAPPING = _mapping_unitary()


def map_to_electron(state: SpinState, c: PhysicalConstants) -> SpinState:
    """Correlate the nuclear state with the NV electron for optical readout.

    Accepts a 3-level nuclear state (electron assumed freshly polarized in
    |0>) or a 9-level joint state whose electron part must be |0>; raises
    ``ValueError`` otherwise.  Ideal conditional rotations: hyperfine
    selectivity is perfect here, finite selectivity belongs to the contrast
    budget of the sensor module.
    """
    if state.basis == NUCLEAR_BASIS:
        joint = np.zeros(9, dtype=complex)
        for k, mi in enumerate((1, 0, -1)):
            joint[joint_index(0, mi)] = state.amplitudes[k]
    elif state.basis == JOINT_BASIS:
        joint = state.amplitudes
        off_block = np.concatenate([joint[0:3], joint[6:9]])
        if np.linalg.norm(off_block) > 1e-12:
            raise ValueError("electron must be in |0> before the readout mapping")
    else:
        raise ValueError("expected the nuclear or the joint basis")
    return SpinState(JOINT_BASIS, _MAPPING @ joint)


def electron_signal(joint_state: SpinState) -> float:
    """Bright-state population P(m_S = 0), the fluorescence observable."""
    if joint_state.basis != JOINT_BASIS:
        raise ValueError("expected a 9-level joint state")
    return float(np.sum(joint_state.populations[3:6]))


def mapped_state_closed_form(omega_t: float) -> SpinState:
    """Joint state after mapping the aligned Ramsey output, closed form.

    -cos(Wt)|0,0> + sin(Wt)/2 * [ e^{+iWt}(|+1,+1> + |-1,+1>)
                                 + e^{-iWt}(|+1,-1> + |-1,-1>) ]
    in |m_S, m_I> notation; same populations as the paper-style conditional
    mapping, with the phase-label pairing fixed by
    :func:`ramsey_state_closed_form`.
    """
    wt = omega_t
    amps = np.zeros(9, dtype=complex)
    amps[joint_index(0, 0)] = -np.cos(wt)
    amps[joint_index(1, 1)] = np.sin(wt) * np.exp(1j * wt) / 2.0
    amps[joint_index(-1, 1)] = np.sin(wt) * np.exp(1j * wt) / 2.0
    amps[joint_index(1, -1)] = np.sin(wt) * np.exp(-1j * wt) / 2.0
    amps[joint_index(-1, -1)] = np.sin(wt) * np.exp(-1j * wt) / 2.0
    return SpinState(JOINT_BASIS, amps)


def readout_contrast_factor(t_map: float, t2star_e: float) -> float:
    """Contrast multiplier exp(-(t_map/T2*_e)^2) from NV dephasing while mapping."""
    if t2star_e <= 0:
        raise ValueError("T2*_e must be positive")
    return float(np.exp(-((t_map / t2star_e) ** 2)))


def apply_contrast(signal: float, factor: float) -> float:
    """Shrink a fringe signal toward its incoherent midpoint 1/2."""
    return 0.5 + (signal - 0.5) * factor


def max_diff_up_to_global_phase(a: SpinState, b: SpinState) -> float:
    """max|a - e^{i theta} b| minimized over the global phase theta."""
    if a.basis != b.basis:
        raise ValueError("states live on different bases")
    ov = np.vdot(b.amplitudes, a.amplitudes)
    ph = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.max(np.abs(a.amplitudes - ph * b.amplitudes)))
