"""Arbitrary-axis rotation sensing with the four NV orientation families.

Geometry convention.  Each family carries a right-handed frame (e1, e2,
axis); a rotation vector is described in that frame by the polar angle
theta of its axis and the azimuth phi = atan2(omega.e2, omega.e1).  The
off-chip rf field starts along e1 and, after an accumulated rotation angle
W*t about the tilted axis, points along R(axis_hat, W*t) @ e1 in family
coordinates.  Its transverse part defines the in-plane angle
psi = atan2(b_y, b_x) and the reduced flip angle alpha = pi * |b_perp| of
the second Ramsey pulse.  The spin-space frame is mirrored (y -> -y)
relative to this geometric frame: a field at geometric angle psi is the
pulse of phase psi in :func:`nvgyro.spincore.rf_pulse_unitary`.  That one
sign choice makes the theta = 0 limit reproduce the aligned interferometer
(psi = W*t, full contrast) and makes the closed-form tan(psi) and
(alpha/pi)^2 expressions below exact identities of the oracle.

The tilted Ramsey is interrogated without an echo and with static
detunings refocused (the echo-idealized frame); the signal model per
family is sin^2(alpha/2) * cos^2(psi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseModel, ou_dephasing_phase
from .sequence import RamseyResult, _result_from_state, nuclear_ground_state
from .spincore import (
    NUCLEAR_BASIS,
    SX,
    SY,
    SZ,
    PhysicalConstants,
    SpinState,
    expm_hermitian,
)

__all__ = [
    "RotationSpec",
    "NVFamily",
    "FAMILIES",
    "TiltedPulseGeometry",
    "IdentifiabilityError",
    "EstimationOptions",
    "EstimationResult",
    "tilted_pulse_geometry",
    "tilted_pulse_geometry_stepped",
    "tan_psi_closed_form",
    "flip_amplitude_sq_closed_form",
    "tilted_state_closed_form",
    "run_ramsey_tilted",
    "forward_model",
    "estimate_rotation",
    "add_shot_noise",
    "family_by_id",
]


class IdentifiabilityError(ValueError):
    """Fewer families than needed to invert the 3-vector rotation."""


@dataclass(frozen=True)
class RotationSpec:
    """Rotation-rate vector in the lab/diamond frame (rad/s)."""

    omega_lab: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.omega_lab, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValueError("omega_lab must be a finite 3-vector")
        object.__setattr__(self, "omega_lab", v)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.omega_lab))


@dataclass(frozen=True)
class NVFamily:
    """One <111> orientation class with its transverse frame."""

    id: str
    axis: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


def _make_families() -> tuple[NVFamily, ...]:
    axes = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    ) / np.sqrt(3.0)
    fams = []
    xhat = np.array([1.0, 0.0, 0.0])
    for k, a in enumerate(axes, start=1):
        e1 = xhat - (xhat @ a) * a
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(a, e1)
        fams.append(NVFamily(f"F{k}", a, e1, e2))
    return tuple(fams)


#: The four orientation families F1..F4 (pairwise angle arccos(-1/3)).
FAMILIES = _make_families()


def family_by_id(fid: str) -> NVFamily:
    for f in FAMILIES:
        if f.id == fid:
            return f
    raise KeyError(f"unknown family {fid!r}")


@dataclass(frozen=True)
class TiltedPulseGeometry:
    """Second-pulse geometry seen by one family: in-plane angle psi, reduced
    flip angle alpha (nominal pi at theta = 0), the rotation-axis angles,
    and the accumulated angle omega_t."""

    psi: float
    alpha: float
    theta: float
    phi: float
    omega_t: float


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` about unit vector ``axis``."""
    c, s = np.cos(angle), np.sin(angle)
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return c * np.eye(3) + s * k + (1.0 - c) * np.outer(axis, axis)


def _axis_from_angles(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


def _geometry_from_field(
    b: np.ndarray, theta: float, phi: float, omega_t: float
) -> TiltedPulseGeometry:
    psi = float(np.arctan2(b[1], b[0]))
    alpha = float(np.pi * np.hypot(b[0], b[1]))
    return TiltedPulseGeometry(psi, alpha, theta, phi, omega_t)


def tilted_pulse_geometry(theta: float, phi: float, omega_t: float) -> TiltedPulseGeometry:
    """Ground-truth geometric oracle for the tilted second pulse.

    Rotates the rf field vector e1 by omega_t about the tilted axis with one
    closed-form Rodrigues rotation and decomposes the result into in-plane
    angle and transverse magnitude.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    b = _rotation_matrix(_axis_from_angles(theta, phi), omega_t) @ np.array(
        [1.0, 0.0, 0.0]
    )
    return _geometry_from_field(b, theta, phi, omega_t)


def tilted_pulse_geometry_stepped(
    theta: float, phi: float, omega_t: float, n_steps: int = 200
) -> TiltedPulseGeometry:
    """Same geometry via n_steps incremental frame rotations (oracle check)."""
    step = _rotation_matrix(_axis_from_angles(theta, phi), omega_t / n_steps)
    b = np.array([1.0, 0.0, 0.0])
    for _ in range(n_steps):
        b = step @ b
    return _geometry_from_field(b, theta, phi, omega_t)


def tan_psi_closed_form(theta: float, phi: float, omega_t: float) -> float:
    """Closed-form tan(psi); identical to the oracle's tan(psi).

    (Stated in the source analysis as an arctan; the aligned limit forces
    the tan reading: at theta = 0 it reduces to tan(omega_t).)
    """
    s2 = np.sin(omega_t / 2.0) ** 2
    num = 4.0 * (np.sin(theta) ** 2 * np.sin(2.0 * phi) * s2 + np.cos(theta) * np.sin(omega_t))
    den = (
        2.0 * s2 * (np.cos(2.0 * phi) - 2.0 * np.cos(2.0 * theta) * np.cos(phi) ** 2)
        + 3.0 * np.cos(omega_t)
        + 1.0
    )
    return float(num / den)


def flip_amplitude_sq_closed_form(theta: float, phi: float, omega_t: float) -> float:
    """Closed-form squared transverse drive amplitude |b_perp|^2 = (alpha/pi)^2."""
    s2 = np.sin(omega_t / 2.0) ** 2
    t1 = (
        2.0 * s2 * (np.cos(2.0 * phi) - 2.0 * np.cos(2.0 * theta) * np.cos(phi) ** 2)
        + 3.0 * np.cos(omega_t)
        + 1.0
    ) ** 2 / 16.0
    t2 = (
        np.sin(theta) ** 2 * np.sin(2.0 * phi) * s2 + np.cos(theta) * np.sin(omega_t)
    ) ** 2
    return float(t1 + t2)


def tilted_state_closed_form(psi: float, alpha: float) -> SpinState:
    """Post-sequence nuclear state for second-pulse geometry (psi, alpha).

    Reduces to :func:`nvgyro.sequence.ramsey_state_closed_form` at
    alpha = pi, psi = omega_t.  The |0> amplitude is -sin(alpha/2)cos(psi),
    so the signal is sin^2(alpha/2) cos^2(psi).
    """
    ca, sa = np.cos(alpha / 2.0), np.sin(alpha / 2.0)
    amps = np.array(
        [
            -np.exp(1j * psi) * (np.sin(psi) + 1j * ca * np.cos(psi)) / np.sqrt(2.0),
            -sa * np.cos(psi) + 0.0j,
            np.exp(-1j * psi) * (np.sin(psi) - 1j * ca * np.cos(psi)) / np.sqrt(2.0),
        ]
    )
    return SpinState(NUCLEAR_BASIS, amps)


def rotation_angles_in_family(family: NVFamily, rot: RotationSpec) -> tuple[float, float]:
    """(theta, phi) of the rotation axis in the family frame; phi = 0 if theta = 0."""
    if rot.magnitude == 0.0:
        return 0.0, 0.0
    u = rot.omega_lab / rot.magnitude
    ct = float(np.clip(u @ family.axis, -1.0, 1.0))
    theta = float(np.arccos(ct))
    phi = float(np.arctan2(u @ family.e2, u @ family.e1))
    return theta, phi


def _pulse_from_field(bx: float, by: float) -> np.ndarray:
    """Hard second pulse from the transverse field components (mirrored y)."""
    gen = bx * SX - by * SY
    return expm_hermitian(gen, np.pi / 2.0)


def run_ramsey_tilted(
    family: NVFamily,
    rot: RotationSpec,
    tau: float,
    c: PhysicalConstants,
    noise: NoiseModel | None = None,
    *,
    rng=None,
) -> RamseyResult:
    """Ramsey on one family with an arbitrary rotation axis.

    Static shifts are taken as refocused (see module docstring); an OU noise
    model still contributes one stochastic dephasing phase per shot.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    theta, phi = rotation_angles_in_family(family, rot)
    geo = tilted_pulse_geometry(theta, phi, rot.magnitude * tau)
    first = expm_hermitian(SX, np.pi / 2.0)
    b = _rotation_matrix(_axis_from_angles(theta, phi), geo.omega_t) @ np.array(
        [1.0, 0.0, 0.0]
    )
    second = _pulse_from_field(b[0], b[1])
    amps = first @ nuclear_ground_state().amplitudes
    if noise is not None and noise.ou is not None:
        if rng is None:
            rng = np.random.default_rng(noise.ou.seed)
        chi = ou_dephasing_phase(noise.ou, tau, rng)
        amps = expm_hermitian(SZ, chi) @ amps
    state = SpinState(NUCLEAR_BASIS, second @ amps)
    contrast = 1.0
    if noise is not None and noise.nv_t1_s is not None:
        contrast = float(np.exp(-tau / noise.nv_t1_s))
    return _result_from_state(state, contrast)


def signal_closed_form(family: NVFamily, rot: RotationSpec, tau: float) -> float:
    """Noiseless tilted-Ramsey signal sin^2(alpha/2) cos^2(psi)."""
    theta, phi = rotation_angles_in_family(family, rot)
    geo = tilted_pulse_geometry(theta, phi, rot.magnitude * tau)
    return float(np.sin(geo.alpha / 2.0) ** 2 * np.cos(geo.psi) ** 2)


def signal_matrix(omega_vec: np.ndarray, taus: np.ndarray, families) -> np.ndarray:
    """Noiseless signals for all (family, tau) cells, vectorized over taus.

    Note the model is even in the rotation vector: reversing the sense of
    rotation flips psi -> -psi in every family and the |0> population only
    sees cos^2(psi), so omega and -omega are indistinguishable from fringe
    signals alone.
    """
    omega_vec = np.asarray(omega_vec, dtype=float)
    taus = np.asarray(taus, dtype=float)
    mag = float(np.linalg.norm(omega_vec))
    if mag == 0.0:
        return np.ones((len(families), taus.size))
    u = omega_vec / mag
    wt = mag * taus
    cos_wt, sin_wt = np.cos(wt), np.sin(wt)
    out = np.empty((len(families), taus.size))
    for i, fam in enumerate(families):
        nx = float(u @ fam.e1)
        ny = float(u @ fam.e2)
        nz = float(u @ fam.axis)
        one_m = 1.0 - cos_wt
        bx = cos_wt + nx * nx * one_m
        by = nz * sin_wt + nx * ny * one_m
        msq = bx * bx + by * by
        alpha = np.pi * np.sqrt(msq)
        psi = np.arctan2(by, bx)
        out[i] = np.sin(alpha / 2.0) ** 2 * np.cos(psi) ** 2
    return out


def forward_model(
    rot: RotationSpec,
    taus,
    families=FAMILIES,
    c: PhysicalConstants | None = None,
    noise: NoiseModel | None = None,
    n_trials: int = 1,
    master_seed: int = 0,
) -> np.ndarray:
    """Signal matrix (len(families) x len(taus)).

    Noiseless by default; with an OU noise model each cell averages
    ``n_trials`` realizations, each carrying its own seed derived from
    ``master_seed`` and the cell/trial index, so results do not depend on
    evaluation order.
    """
    taus = np.asarray(taus, dtype=float)
    families = tuple(families)
    if taus.size == 0 or len(families) == 0:
        raise ValueError("need at least one family and one tau")
    if c is None:
        c = PhysicalConstants()
    if noise is None or noise.ou is None:
        out = signal_matrix(rot.omega_lab, taus, families)
        if noise is not None and noise.nv_t1_s is not None:
            out = 0.5 + (out - 0.5) * np.exp(-taus / noise.nv_t1_s)[None, :]
        return out
    out = np.empty((len(families), taus.size))
    for i, fam in enumerate(families):
        for j, tau in enumerate(taus):
            acc = 0.0
            for k in range(n_trials):
                rng = np.random.default_rng(
                    np.random.SeedSequence(entropy=master_seed, spawn_key=(i, j, k))
                )
                acc += run_ramsey_tilted(fam, rot, float(tau), c, noise, rng=rng).signal
            out[i, j] = acc / n_trials
    return out


def add_shot_noise(signals: np.ndarray, counts: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Binomial readout noise: measured fractions and their standard errors."""
    p = np.clip(signals, 0.0, 1.0)
    meas = rng.binomial(counts, p) / counts
    stderr = np.sqrt(np.clip(meas * (1.0 - meas), 1e-12, None) / counts)
    return meas, stderr


@dataclass(frozen=True)
class EstimationOptions:
    max_iterations: int = 60
    gradient_tol: float = 1e-12
    step_tol: float = 1e-14
    n_directions: int = 24
    n_magnitudes: int = 5
    null_threshold: float = 1e-6   # rad/s below which the rotation reads as null
    aliasing_margin: float = 0.95  # warn when |omega|*max(tau) nears pi
    early_stop_cost: float = 1e-18  # stop multi-start once a fit is this good


@dataclass(frozen=True)
class EstimationResult:
    rotation: RotationSpec
    residual_norm: float
    iterations: int
    converged: bool
    jacobian_condition: float
    aliasing_warning: bool
    null_rotation: bool
    n_starts: int


def _fibonacci_directions(n: int) -> np.ndarray:
    """Roughly uniform unit vectors on the sphere (golden-angle spiral)."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z**2)
    ang = np.pi * (1.0 + np.sqrt(5.0)) * k
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def _model_flat(omega_vec, taus, families):
    return signal_matrix(omega_vec, taus, families).ravel()


def _jacobian(omega_vec, taus, families, h=1e-7):
    cols = []
    for k in range(3):
        dv = np.zeros(3)
        dv[k] = h
        hi = _model_flat(omega_vec + dv, taus, families)
        lo = _model_flat(omega_vec - dv, taus, families)
        cols.append((hi - lo) / (2.0 * h))
    return np.stack(cols, axis=1)


def _gauss_newton(x0, resid_fn, jac_fn, opts: EstimationOptions):
    """Damped Gauss-Newton with backtracking; returns (x, cost, iters, ok)."""
    x = np.asarray(x0, dtype=float).copy()
    r = resid_fn(x)
    cost = float(r @ r)
    for it in range(1, opts.max_iterations + 1):
        j = jac_fn(x)
        g = 2.0 * j.T @ r
        if np.linalg.norm(g) < opts.gradient_tol:
            return x, cost, it, True
        step, *_ = np.linalg.lstsq(j, -r, rcond=None)
        alpha = 1.0
        improved = False
        while alpha >= 1e-8:
            xn = x + alpha * step
            rn = resid_fn(xn)
            cn = float(rn @ rn)
            if cn < cost:
                x, r, cost = xn, rn, cn
                improved = True
                break
            alpha *= 0.5
        if not improved or np.linalg.norm(alpha * step) < opts.step_tol:
            return x, cost, it, True
    return x, cost, opts.max_iterations, False


def estimate_rotation(
    signals: np.ndarray,
    taus,
    families=FAMILIES,
    c: PhysicalConstants | None = None,
    options: EstimationOptions | None = None,
    weights: np.ndarray | None = None,
) -> EstimationResult:
    """Recover the rotation vector from per-family fringe signals.

    Weighted least squares against the noiseless forward model, multi-start
    (direction grid x magnitude bracket below the aliasing bound, plus the
    origin) followed by damped Gauss-Newton.  Raises
    :class:`IdentifiabilityError` with fewer than 3 families.  Non-converged
    fits are reported in the result status, never silently.

    Because the fringe model is even in the rotation vector, +-omega fit
    equally well; the returned vector is the representative whose
    largest-magnitude component is positive.
    """
    opts = options or EstimationOptions()
    families = tuple(families)
    taus = np.asarray(taus, dtype=float)
    signals = np.asarray(signals, dtype=float)
    if len(families) < 3:
        raise IdentifiabilityError(
            f"need >= 3 families to identify a 3-vector, got {len(families)}"
        )
    if signals.shape != (len(families), taus.size):
        raise ValueError("signals must have shape (n_families, n_taus)")
    y = signals.ravel()
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != y.shape:
            raise ValueError("weights must match the signal matrix")

    def resid(xv):
        return (_model_flat(xv, taus, families) - y) * w

    def jac(xv):
        return _jacobian(xv, taus, families) * w[:, None]

    omega_max = np.pi / float(np.max(taus))
    mags = np.linspace(0.15, 0.85, opts.n_magnitudes) * omega_max
    starts = [np.zeros(3)]
    for d in _fibonacci_directions(opts.n_directions):
        for m in mags:
            starts.append(m * d)

    best = None
    iters_total = 0
    n_used = 0
    for x0 in starts:
        x, cost, it, ok = _gauss_newton(x0, resid, jac, opts)
        iters_total += it
        n_used += 1
        if best is None or cost < best[1]:
            best = (x, cost, ok)
        if best[1] < opts.early_stop_cost:
            break
    x, cost, ok = best
    # the fringe model is even in omega (see signal_matrix); report the
    # representative whose dominant component is positive
    if np.linalg.norm(x) > 0 and x[np.argmax(np.abs(x))] < 0:
        x = -x
    jfin = jac(x)
    sv = np.linalg.svd(jfin, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    mag = float(np.linalg.norm(x))
    return EstimationResult(
        rotation=RotationSpec(x),
        residual_norm=float(np.sqrt(cost)),
        iterations=iters_total,
        converged=bool(ok),
        jacobian_condition=cond,
        aliasing_warning=bool(mag * float(np.max(taus)) > opts.aliasing_margin * np.pi),
        null_rotation=bool(mag < opts.null_threshold),
        n_starts=n_used,
    )
