"""Decoherence models: OU dephasing, NV-T1 contrast loss, and a desk-scale
dipolar electron-spin-bath simulation.

The bath model is deliberately small (tens of bath spins, tens of central
spins) and aims at the qualitative picture: inhomogeneous Ramsey decay that
speeds up with bath density, while an echo removes the quasi-static part and
is left with the much weaker flip-flop dynamics.  Bath internal dynamics are
reduced to pair flip-flops treated as independent telegraph processes whose
rates derive from the bath-bath dipolar couplings, suppressed by the pair's
static detuning (energy conservation at pair level).  The density -> (sigma,
tau_c) correspondence is: sigma = rms nucleus-bath coupling, 1/tau_c = mean
bath flip-flop rate.  Pairs flipping too fast for the time grid are folded
in analytically via their motionally-narrowed rate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OUProcess",
    "NoiseModel",
    "SequenceKind",
    "CoherenceCurve",
    "BathModel",
    "sample_ou_path",
    "ou_phase_integral",
    "dephased_ramsey_coherence",
    "nv_t1_dephasing_factor",
    "bath_coherence_simulation",
    "dipolar_coupling_ee_hz",
    "dipolar_coupling_en_hz",
    "mean_nn_spacing_nm",
    "fit_stretched_exponential",
]

# Dipolar coupling prefactors, mu0*hbar*gamma_a*gamma_b/(4*pi) / (2*pi),
# expressed in Hz*nm^3.  gamma_e = 28.025 GHz/T, gamma_n(14N) = 3.077 MHz/T.
EE_COUPLING_HZ_NM3 = 52.05e6
EN_COUPLING_HZ_NM3 = EE_COUPLING_HZ_NM3 * (3.077e6 / 28.025e9)


class SequenceKind(enum.Enum):
    RAMSEY = "ramsey"
    ECHO = "echo"


@dataclass(frozen=True)
class OUProcess:
    """Ornstein-Uhlenbeck frequency noise: dispersion sigma (rad/s),
    correlation time tau_c (s), and the seed of its random stream."""

    sigma: float
    tau_c: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0 or self.tau_c <= 0:
            raise ValueError("sigma and tau_c must be positive")


@dataclass(frozen=True)
class NoiseModel:
    """Noise channels applied to a pulse sequence.

    ``ou`` dephases the nuclear spin with a stochastic frequency shift;
    ``nv_t1_s`` folds NV relaxation into a multiplicative contrast factor
    exp(-tau/T1) (each NV flip scrambles the hyperfine field).
    """

    ou: OUProcess | None = None
    nv_t1_s: float | None = None

    def __post_init__(self):
        if self.nv_t1_s is not None and self.nv_t1_s <= 0:
            raise ValueError("nv_t1_s must be positive")


@dataclass(frozen=True)
class CoherenceCurve:
    times: np.ndarray
    coherence: np.ndarray
    sequence: SequenceKind
    fitted_t2: float
    fitted_exponent: float


@dataclass(frozen=True)
class BathModel:
    """Desk-scale dipolar electron-spin bath around one 14N nucleus."""

    density_cm3: float          # electron-spin number density
    n_bath: int = 50            # bath spins per realization
    n_central: int = 20         # central-spin (geometry) ensemble size
    geometry_seed: int = 0
    exclusion_nm: float = 0.5   # minimum approach distance (lattice exclusion)

    def __post_init__(self):
        if self.density_cm3 < 0:
            raise ValueError("density must be >= 0")
        if self.n_bath < 0 or self.n_central < 1:
            raise ValueError("n_bath >= 0 and n_central >= 1 required")
        if self.exclusion_nm <= 0:
            raise ValueError("exclusion_nm must be positive")
        if self.density_cm3 > 0 and self.n_bath > 0:
            if self.sphere_radius_nm < 2.0 * self.exclusion_nm:
                raise ValueError(
                    "bath sphere radius below twice the exclusion distance; "
                    "lower the density or raise n_bath"
                )

    @property
    def density_nm3(self) -> float:
        return self.density_cm3 * 1e-21

    @property
    def sphere_radius_nm(self) -> float:
        """Radius holding n_bath spins at the requested density."""
        return (3.0 * self.n_bath / (4.0 * np.pi * self.density_nm3)) ** (1.0 / 3.0)


def sample_ou_path(p: OUProcess, dt: float, n_steps: int, rng=None) -> np.ndarray:
    """Exact-discretization OU trajectory, stationary start.

    Returns ``n_steps + 1`` samples x(0), x(dt), ..., x(n_steps*dt) in rad/s:
    x_{k+1} = x_k * exp(-dt/tau_c) + sigma*sqrt(1 - exp(-2dt/tau_c)) * g_k.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("dt > 0 and n_steps >= 1 required")
    if rng is None:
        rng = np.random.default_rng(p.seed)
    decay = np.exp(-dt / p.tau_c)
    kick = p.sigma * np.sqrt(-np.expm1(-2.0 * dt / p.tau_c))
    g = rng.standard_normal(n_steps)
    x = np.empty(n_steps + 1)
    x[0] = p.sigma * rng.standard_normal()
    for k in range(n_steps):
        x[k + 1] = x[k] * decay + kick * g[k]
    return x


def ou_phase_integral(path: np.ndarray, dt: float, echo: bool = False) -> float:
    """Accumulated phase (rad) of an OU trajectory over its full window.

    Trapezoidal rule; with ``echo`` the second half enters with opposite
    sign (refocusing pulse at the midpoint).  Echo requires an even number
    of steps so the midpoint falls on a sample.
    """
    n = path.size - 1
    if not echo:
        return float(np.trapezoid(path, dx=dt))
    if n % 2:
        raise ValueError("echo phase integral needs an even number of steps")
    half = n // 2
    first = np.trapezoid(path[: half + 1], dx=dt)
    second = np.trapezoid(path[half:], dx=dt)
    return float(first - second)


def _ou_steps(tau: float, tau_c: float) -> int:
    """Even step count resolving both tau_c and the window."""
    n = int(np.ceil(20.0 * tau / tau_c))
    n = max(64, min(8192, n))
    return n + (n % 2)


def ou_dephasing_phase(
    p: OUProcess, tau: float, rng, echo: bool = False, n_steps: int | None = None
) -> float:
    """One realization of the dephasing phase accumulated over tau seconds."""
    if tau == 0.0:
        return 0.0
    n = n_steps if n_steps is not None else _ou_steps(tau, p.tau_c)
    path = sample_ou_path(p, tau / n, n, rng=rng)
    return ou_phase_integral(path, tau / n, echo=echo)


def ou_split_phases(p: OUProcess, tau: float, rng) -> tuple[float, float]:
    """One OU realization split at tau/2: phases of the two free-evolution halves."""
    if tau == 0.0:
        return 0.0, 0.0
    n = _ou_steps(tau, p.tau_c)
    dt = tau / n
    path = sample_ou_path(p, dt, n, rng=rng)
    first = float(np.trapezoid(path[: n // 2 + 1], dx=dt))
    second = float(np.trapezoid(path[n // 2:], dx=dt))
    return first, second


def dephased_ramsey_coherence(
    p: OUProcess,
    taus,
    n_trials: int,
    sequence: SequenceKind = SequenceKind.RAMSEY,
    n_steps: int | None = None,
) -> CoherenceCurve:
    """Monte Carlo coherence <exp(i*integral x dt)> under OU dephasing.

    The echo variant flips the accumulation sign at tau/2.  Trials share a
    seed stream derived from ``p.seed`` so curves are reproducible.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise ValueError("taus must be non-negative")
    echo = sequence is SequenceKind.ECHO
    coh = np.empty_like(taus)
    for i, tau in enumerate(taus):
        if tau == 0.0:
            coh[i] = 1.0
            continue
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=p.seed, spawn_key=(i,))
        )
        n = n_steps if n_steps is not None else _ou_steps(tau, p.tau_c)
        dt = tau / n
        decay = np.exp(-dt / p.tau_c)
        kick = p.sigma * np.sqrt(-np.expm1(-2.0 * dt / p.tau_c))
        # vectorized over trials: rows are steps, columns trials
        x = np.empty((n + 1, n_trials))
        x[0] = p.sigma * rng.standard_normal(n_trials)
        g = rng.standard_normal((n, n_trials))
        for k in range(n):
            x[k + 1] = x[k] * decay + kick * g[k]
        if echo:
            w = np.ones(n + 1)
            w[n // 2 + 1:] = -1.0
            w[n // 2] = 0.0  # midpoint cancels in the split trapezoid
            wx = x * w[:, None]
            phases = (wx[0] / 2 + wx[1:-1].sum(axis=0) + wx[-1] / 2) * dt
        else:
            phases = (x[0] / 2 + x[1:-1].sum(axis=0) + x[-1] / 2) * dt
        coh[i] = float(np.mean(np.cos(phases)))
    t2, expo = fit_stretched_exponential(taus, coh)
    return CoherenceCurve(taus, coh, sequence, t2, expo)


def nv_t1_dephasing_factor(t1: float, tau: float) -> float:
    """Contrast multiplier exp(-tau/T1) from NV relaxation during tau."""
    if t1 <= 0:
        raise ValueError("T1 must be positive")
    return float(np.exp(-tau / t1))


def fit_stretched_exponential(times, coherence) -> tuple[float, float]:
    """Fit exp[-(t/T2)^p] and return (T2, p).

    Log-log linear regression over points with coherence in (0.02, 0.98);
    returns (inf, nan) when fewer than 3 usable points exist (no visible
    decay in the window).
    """
    t = np.asarray(times, dtype=float)
    w = np.asarray(coherence, dtype=float)
    mask = (t > 0) & (w > 0.02) & (w < 0.98)
    if mask.sum() < 3:
        return float("inf"), float("nan")
    y = np.log(-np.log(w[mask]))
    x = np.log(t[mask])
    p, intercept = np.polyfit(x, y, 1)
    t2 = np.exp(-intercept / p)
    return float(t2), float(p)


def dipolar_coupling_ee_hz(r_nm: float, angular: float = 1.0) -> float:
    """Electron-electron secular dipolar coupling at distance r (Hz).

    ``angular`` is the (1 - 3 cos^2 theta) factor; 1 gives the bare scale.
    """
    return EE_COUPLING_HZ_NM3 * angular / r_nm**3


def dipolar_coupling_en_hz(r_nm: float, angular: float = 1.0) -> float:
    """Electron-to-14N secular dipolar coupling at distance r (Hz)."""
    return EN_COUPLING_HZ_NM3 * angular / r_nm**3


def mean_nn_spacing_nm(density_cm3: float) -> float:
    """Mean nearest-neighbor distance of a Poisson gas, Gamma(4/3)*(3/4pi n)^(1/3)."""
    n_nm3 = density_cm3 * 1e-21
    from math import gamma

    return gamma(4.0 / 3.0) * (3.0 / (4.0 * np.pi * n_nm3)) ** (1.0 / 3.0)


def _sample_positions(bath: BathModel, rng) -> np.ndarray:
    """Uniform positions in the bath sphere with exclusion distances enforced."""
    r_sphere = bath.sphere_radius_nm
    pos = np.empty((bath.n_bath, 3))
    count = 0
    while count < bath.n_bath:
        cand = rng.uniform(-r_sphere, r_sphere, size=3)
        r = np.linalg.norm(cand)
        if r > r_sphere or r < bath.exclusion_nm:
            continue
        if count and np.min(np.linalg.norm(pos[:count] - cand, axis=1)) < bath.exclusion_nm:
            continue
        pos[count] = cand
        count += 1
    return pos


def _geometry_couplings(bath: BathModel, rng):
    """Sampled positions -> (A_j, pair indices, b_jk), all angular (rad/s)."""
    pos = _sample_positions(bath, rng)
    r = np.linalg.norm(pos, axis=1)
    cos_t = pos[:, 2] / r
    a_j = 2.0 * np.pi * EN_COUPLING_HZ_NM3 * (1.0 - 3.0 * cos_t**2) / r**3
    iu, ju = np.triu_indices(bath.n_bath, k=1)
    dvec = pos[iu] - pos[ju]
    d = np.linalg.norm(dvec, axis=1)
    cos_p = dvec[:, 2] / d
    b_jk = 2.0 * np.pi * EE_COUPLING_HZ_NM3 * (1.0 - 3.0 * cos_p**2) / d**3
    return a_j, (iu, ju), b_jk


def bath_coherence_simulation(
    bath: BathModel,
    sequence: SequenceKind,
    taus,
    n_trials: int = 200,
    n_steps: int = 1024,
) -> CoherenceCurve:
    """Central 14N coherence under the dipolar bath, Ramsey or echo.

    Per central spin: sample bath positions, secular couplings (1/r^3 with
    the 1-3cos^2 angular form), and per-trial random bath states m = +-1/2.
    Anti-aligned pairs flip-flop as telegraph processes with rate
    |b_jk|/(4*pi) suppressed by the Lorentzian resonance factor
    b^2/(b^2 + delta^2), delta being the pair's static detuning from the
    rest of the bath.  The requested taus are snapped to the internal grid.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0 or np.any(taus < 0):
        raise ValueError("need non-negative evaluation times")
    if sequence is SequenceKind.ECHO and n_steps % 2:
        raise ValueError("echo needs an even step grid")

    if bath.density_cm3 == 0.0 or bath.n_bath == 0:
        coh = np.ones_like(taus)
        return CoherenceCurve(taus, coh, sequence, float("inf"), float("nan"))

    t_max = float(np.max(taus))
    dt = t_max / n_steps
    grid_idx = np.clip(np.rint(taus / dt).astype(int), 0, n_steps)
    if sequence is SequenceKind.ECHO:
        grid_idx -= grid_idx % 2  # echo midpoint must land on the grid
    echo = sequence is SequenceKind.ECHO

    rate_cap = 0.1 / dt
    ss = np.random.SeedSequence(entropy=bath.geometry_seed)
    children = ss.spawn(bath.n_central)
    total = np.zeros(n_steps + 1)
    for child in children:
        rng = np.random.default_rng(child)
        a_j, (iu, ju), b_jk = _geometry_couplings(bath, rng)
        m0 = rng.choice([-0.5, 0.5], size=(bath.n_bath, n_trials))
        x_static = a_j @ m0  # (n_trials,)

        # pair detuning from the rest of the bath, per trial
        bmat = np.zeros((bath.n_bath, bath.n_bath))
        bmat[iu, ju] = b_jk
        bmat += bmat.T
        field = bmat @ m0                       # local static field per spin
        delta = field[iu] - field[ju] - b_jk[:, None] * (m0[iu] - m0[ju])
        anti = m0[iu] != m0[ju]
        nu = np.abs(b_jk)[:, None] / (4.0 * np.pi)
        rates = np.where(
            anti, nu * b_jk[:, None] ** 2 / (b_jk[:, None] ** 2 + delta**2), 0.0
        )
        dx = (a_j[iu] - a_j[ju])[:, None] * (m0[ju] - m0[iu])  # shift when swapped

        narrowed = rates > rate_cap
        slow = rates * (~narrowed)
        active = np.nonzero((slow * t_max > 0.02).any(axis=1))[0]

        xq = np.zeros((n_steps + 1, n_trials))
        for pidx in active:
            flips = rng.random((n_steps, n_trials)) < slow[pidx] * dt
            q = np.zeros((n_steps + 1, n_trials))
            q[1:] = np.cumsum(flips, axis=0) % 2
            xq += q * dx[pidx]

        x = x_static[None, :] + xq
        phi = np.zeros((n_steps + 1, n_trials))
        np.cumsum(0.5 * (x[1:] + x[:-1]) * dt, axis=0, out=phi[1:])
        if echo:
            k = np.arange(n_steps + 1)
            phases = 2.0 * phi[k // 2] - phi[k]
        else:
            phases = phi
        per_trial = np.cos(phases)

        # motionally-narrowed fast pairs: exponential factor on both sequences
        if narrowed.any():
            gamma = (dx**2 / (8.0 * rates.clip(min=1e-300)) * narrowed).sum(axis=0)
            tgrid = np.arange(n_steps + 1) * dt
            per_trial = per_trial * np.exp(-np.outer(tgrid, gamma))
        total += per_trial.mean(axis=1)

    wavg = total / bath.n_central
    coh = wavg[grid_idx]
    eval_t = grid_idx * dt
    t2, expo = fit_stretched_exponential(eval_t, coh)
    return CoherenceCurve(eval_t, coh, sequence, t2, expo)
