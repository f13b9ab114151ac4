"""Stochastic macrospin LLG dynamics with a magneto-electric field term.

Fields are in A/m and the gyromagnetic ratio is expressed as ``gamma = gamma_e * mu0``
in m/(A s), so that ``gamma * H`` is an angular rate in rad/s.

The integrator works on batches of magnets (arrays of shape ``(B, 3)``). Every
trial owns its own random stream derived from ``(seed, trial_index)``, and all
arithmetic is elementwise, so a trial's trajectory is bit-identical whether it
runs alone or inside a batch of any size.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import constants, integrate, special, stats

MU0 = constants.mu_0
KB = constants.k
C_LIGHT = constants.c

GAMMA = 2.211e5  # m/(A s)

NOISE_BLOCK = 1024  # steps of thermal noise drawn per generator call


# ---------------------------------------------------------------------------
# demagnetization factors
# ---------------------------------------------------------------------------

THIN_FILM_N = (0.0, 0.0, 1.0)


@lru_cache(maxsize=64)
def cylinder_demag_factors(diameter: float, thickness: float) -> tuple[float, float, float]:
    """Magnetometric demag factors of a uniformly magnetized cylinder (axis z).

    N_z = (2R/L) * int_0^inf J1(x)^2 / x^2 * (1 - exp(-x L / R)) dx, and
    N_x = N_y = (1 - N_z) / 2.
    """
    if diameter <= 0 or thickness <= 0:
        raise ValueError("cylinder dimensions must be positive")
    R = diameter / 2.0
    ratio = thickness / R

    def f(x):
        return special.j1(x) ** 2 / x**2 * -math.expm1(-x * ratio)

    # split at a few Bessel periods; the tail decays as 1/x^3
    edges = [0.0, 2.0, 10.0, 50.0, 200.0]
    val = sum(integrate.quad(f, lo, hi, limit=400)[0] for lo, hi in zip(edges, edges[1:]))
    val += integrate.quad(f, edges[-1], np.inf, limit=400)[0]
    nz = 2.0 * val / ratio
    nxy = (1.0 - nz) / 2.0
    return (nxy, nxy, 1.0 - 2.0 * nxy)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MagnetParams:
    """Free-layer material and geometry.

    ``N`` defaults to the exact cylinder demag factors of the given geometry.
    """

    M_S: float = 1257.3e3
    alpha: float = 0.1
    K_i: float = 1.0e-3
    t_FL: float = 1.0e-9
    diameter: float = 22.5e-9
    N: tuple[float, float, float] | None = None
    T: float = 300.0
    gamma: float = GAMMA

    def __post_init__(self):
        if self.M_S <= 0:
            raise ValueError(f"M_S must be > 0, got {self.M_S}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.t_FL <= 0 or self.diameter <= 0:
            raise ValueError("t_FL and diameter must be > 0")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.N is None:
            object.__setattr__(self, "N", cylinder_demag_factors(self.diameter, self.t_FL))
        else:
            n = tuple(float(v) for v in self.N)
            if len(n) != 3 or min(n) < 0:
                raise ValueError(f"N must be three non-negative factors, got {self.N}")
            if abs(sum(n) - 1.0) > 1e-12:
                raise ValueError(f"demag factors must sum to 1, got {sum(n)!r}")
            object.__setattr__(self, "N", n)

    @property
    def area(self) -> float:
        return math.pi * (self.diameter / 2.0) ** 2

    @property
    def volume(self) -> float:
        return self.area * self.t_FL

    @property
    def H_K(self) -> float:
        """Interface anisotropy field 2 K_i / (mu0 M_S t_FL), A/m."""
        return 2.0 * self.K_i / (MU0 * self.M_S * self.t_FL)

    @property
    def H_K_eff(self) -> float:
        """Net perpendicular anisotropy field including shape anisotropy."""
        nx, _, nz = self.N
        return self.H_K - (nz - nx) * self.M_S

    @property
    def thermal_stability(self) -> float:
        """Energy barrier over kT (infinite at T = 0)."""
        barrier = 0.5 * MU0 * self.M_S * self.H_K_eff * self.volume
        if self.T == 0:
            return math.inf
        return barrier / (KB * self.T)


@dataclass(frozen=True)
class MEStimulus:
    """Magneto-electric drive. ``alpha_ME`` in s/m (1/c ~ 3.34e-9 s/m)."""

    alpha_ME: float = 1.0 / C_LIGHT
    t_ME: float = 1.0e-9
    V_ME: float = 0.0
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.t_ME <= 0:
            raise ValueError(f"t_ME must be > 0, got {self.t_ME}")
        if self.alpha_ME < 0:
            raise ValueError(f"alpha_ME must be >= 0, got {self.alpha_ME}")
        ax = np.asarray(self.axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if ax.shape != (3,) or n == 0:
            raise ValueError(f"axis must be a nonzero 3-vector, got {self.axis}")
        object.__setattr__(self, "axis", tuple(float(v) for v in ax / n))

    def with_voltage(self, V: float) -> "MEStimulus":
        return replace(self, V_ME=V)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0e-13
    duration: float = 1.0e-9
    seed: int = 0
    renormalize: bool = True
    record_stride: int = 1
    reversal_threshold: float = 0.9

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.duration < self.dt:
            raise ValueError("duration must be >= dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not 0 < self.reversal_threshold <= 1:
            raise ValueError("reversal_threshold must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass
class MagnetizationState:
    m: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float).reshape(3)
        norm = float(np.sqrt(self.m @ self.m))
        if norm == 0:
            raise ValueError("magnetization must be nonzero")
        if abs(norm - 1.0) > 1e-9:
            self.m = self.m / norm


@dataclass
class Trajectory:
    samples: np.ndarray  # (n, 4): t, mx, my, mz
    reversal_time: float | None = None

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def m(self) -> np.ndarray:
        return self.samples[:, 1:]

    @property
    def final(self) -> MagnetizationState:
        row = self.samples[-1]
        return MagnetizationState(row[1:].copy(), float(row[0]))


# A stimulus schedule is a list of (duration, stimulus) segments run back to back.
Schedule = Sequence[tuple[float, MEStimulus]]
StimulusLike = Union[MEStimulus, Schedule]


# ---------------------------------------------------------------------------
# field terms
# ---------------------------------------------------------------------------


def demag_field(m, p: MagnetParams) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return -np.asarray(p.N) * p.M_S * m


def anisotropy_field(m, p: MagnetParams) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    h = np.zeros_like(m)
    h[..., 2] = p.H_K * m[..., 2]
    return h


def me_field(s: MEStimulus) -> np.ndarray:
    magnitude = s.alpha_ME * s.V_ME / (s.t_ME * MU0)
    return np.asarray(s.axis) * magnitude


def thermal_sigma(p: MagnetParams, dt: float) -> float:
    """Per-component standard deviation of the Brown thermal field, A/m.

    sigma = sqrt(2 alpha k T / (gamma mu0 M_S V dt)); the mu0 appears because
    gamma carries it (gamma = gamma_e mu0) while the field is in A/m.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if p.T == 0:
        return 0.0
    return math.sqrt(2.0 * p.alpha * KB * p.T / (p.gamma * MU0 * p.M_S * p.volume * dt))


def thermal_field(p: MagnetParams, dt: float, rng: np.random.Generator) -> np.ndarray:
    sigma = thermal_sigma(p, dt)
    return sigma * rng.standard_normal(3)


def effective_field(m, p: MagnetParams, s: MEStimulus, h_thermal=None) -> np.ndarray:
    h = demag_field(m, p) + anisotropy_field(m, p) + me_field(s)
    if h_thermal is not None:
        h = h + h_thermal
    return h


def magnetic_energy(m, p: MagnetParams, s: MEStimulus | None = None) -> np.ndarray:
    """Zeeman + anisotropy + demag energy of the free layer, J."""
    m = np.asarray(m, dtype=float)
    N = np.asarray(p.N)
    dens = 0.5 * MU0 * p.M_S**2 * np.sum(N * m * m, axis=-1)
    dens = dens - 0.5 * MU0 * p.M_S * p.H_K * m[..., 2] ** 2
    if s is not None:
        dens = dens - MU0 * p.M_S * np.sum(me_field(s) * m, axis=-1)
    return dens * p.volume


# ---------------------------------------------------------------------------
# integrator
# ---------------------------------------------------------------------------


def _cross(a, b):
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    return np.stack((ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx), axis=-1)


def _normalize(m):
    n = np.sqrt(m[..., 0] * m[..., 0] + m[..., 1] * m[..., 1] + m[..., 2] * m[..., 2])
    return m / n[..., None]


def llg_rhs(m, H_eff, p: MagnetParams) -> np.ndarray:
    """Explicit Landau-Lifshitz form of the Gilbert equation, 1/s."""
    m = np.asarray(m, dtype=float)
    H_eff = np.asarray(H_eff, dtype=float)
    mxh = _cross(m, H_eff)
    pre = p.gamma / (1.0 + p.alpha**2)
    return -pre * mxh - pre * p.alpha * _cross(m, mxh)


def _internal_diag(p: MagnetParams) -> np.ndarray:
    d = -np.asarray(p.N) * p.M_S
    d[2] += p.H_K
    return d


def _heun(m, h_fixed, diag, p: MagnetParams, dt: float, renormalize: bool):
    # h_fixed: ME + thermal, held for both stages
    k1 = llg_rhs(m, diag * m + h_fixed, p)
    mp = m + dt * k1
    k2 = llg_rhs(mp, diag * mp + h_fixed, p)
    out = m + 0.5 * dt * (k1 + k2)
    return _normalize(out) if renormalize else out


def heun_step(
    state: MagnetizationState,
    p: MagnetParams,
    s: MEStimulus,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> MagnetizationState:
    """Advance one step; one thermal draw is shared by predictor and corrector."""
    h = me_field(s) + thermal_field(p, cfg.dt, rng)
    m = _heun(state.m[None, :], h[None, :], _internal_diag(p), p, cfg.dt, cfg.renormalize)[0]
    return MagnetizationState(m, state.t + cfg.dt)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one Monte Carlo trial."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial_index),)))


class _Noise:
    """Unit Gaussian noise per trial, drawn from each trial's stream in fixed blocks."""

    def __init__(self, rngs: list[np.random.Generator]):
        self.rngs = rngs
        self._block = None
        self._k = NOISE_BLOCK

    def next(self) -> np.ndarray:
        if self._k == NOISE_BLOCK:
            self._block = np.stack([g.standard_normal((NOISE_BLOCK, 3)) for g in self.rngs], axis=1)
            self._k = 0
        out = self._block[self._k]
        self._k += 1
        return out

    def flush(self):
        """Drop the rest of the current block so the next segment starts on a fresh draw."""
        self._k = NOISE_BLOCK
        self._block = None


def _as_schedule(s: StimulusLike, duration: float) -> list[tuple[float, MEStimulus]]:
    if isinstance(s, MEStimulus):
        return [(duration, s)]
    return [(float(d), st) for d, st in s]


def _run(
    m0: np.ndarray,
    p: MagnetParams,
    h_ext: np.ndarray,
    n_steps: int,
    dt: float,
    noise: _Noise | None,
    row_trial: np.ndarray | None,
    renormalize: bool = True,
    t0: float = 0.0,
    threshold: float | None = None,
    target: np.ndarray | None = None,
    record_stride: int = 0,
):
    """Integrate a batch for ``n_steps`` at fixed external field.

    Returns final m, first times at which ``target * m_z >= threshold`` (NaN
    where none; ``target`` defaults to the side opposite the start), and
    optional history.
    """
    m = np.array(m0, dtype=float)
    diag = _internal_diag(p)
    sigma = thermal_sigma(p, dt)
    B = m.shape[0]
    crossed = np.full(B, np.nan)
    if threshold is not None and target is None:
        target = -np.sign(np.where(m[:, 2] == 0, 1.0, m[:, 2]))
    if threshold is None:
        target = None
    history = []
    if record_stride:
        history.append((t0, m.copy()))
    for k in range(1, n_steps + 1):
        if sigma > 0 and noise is not None:
            h = h_ext + sigma * noise.next()[row_trial]
        else:
            h = h_ext
        m = _heun(m, h, diag, p, dt, renormalize)
        t = t0 + k * dt
        if target is not None:
            hit = np.isnan(crossed) & (target * m[:, 2] >= threshold)
            if hit.any():
                crossed[hit] = t
        if record_stride and (k % record_stride == 0 or k == n_steps):
            history.append((t, m.copy()))
    return m, crossed, history


def simulate_trajectory(
    m0,
    p: MagnetParams,
    s: StimulusLike,
    cfg: SimConfig,
    trial_index: int = 0,
) -> Trajectory:
    """Single deterministic trajectory for stream ``(cfg.seed, trial_index)``.

    ``s`` is a stimulus held for ``cfg.duration`` or a list of
    ``(duration, stimulus)`` segments. Reversal is the first time m_z crosses
    ``-threshold`` (or ``+threshold`` when starting in the lower hemisphere).
    """
    m = MagnetizationState(m0).m[None, :]
    noise = _Noise([trial_rng(cfg.seed, trial_index)]) if p.T > 0 else None
    rows = np.zeros(1, dtype=int)
    target = np.array([-1.0 if m[0, 2] >= 0 else 1.0])
    t = 0.0
    reversal = None
    samples = [np.concatenate(([0.0], m[0]))]
    for duration, stim in _as_schedule(s, cfg.duration):
        n = int(round(duration / cfg.dt))
        if n == 0:
            continue
        h = me_field(stim)[None, :]
        m, crossed, hist = _run(
            m, p, h, n, cfg.dt, noise, rows, cfg.renormalize, t0=t,
            threshold=cfg.reversal_threshold, target=target, record_stride=cfg.record_stride,
        )
        for tt, mm in hist[1:]:
            samples.append(np.concatenate(([tt], mm[0])))
        if reversal is None and not np.isnan(crossed[0]):
            reversal = float(crossed[0])
        t = t + n * cfg.dt
        if noise is not None:
            noise.flush()
    return Trajectory(np.array(samples), reversal)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SwitchingResult:
    probability: float
    ci_low: float
    ci_high: float
    n_trials: int
    n_switched: int

    @property
    def ci(self) -> tuple[float, float]:
        return (self.ci_low, self.ci_high)


def binomial_ci(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval."""
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def initial_states(
    p: MagnetParams,
    trials: Sequence[int],
    seed: int,
    dt: float,
    start: int = 1,
    init: str = "equilibrate",
    burn_in: float = 2.0e-9,
):
    """Thermal initial states about ``start * z`` and the per-trial noise streams.

    ``init="equilibrate"`` relaxes each trial at zero drive for ``burn_in``;
    ``init="tilt"`` draws a small-angle Gaussian tilt with variance kT/(2 K_eff V).
    The returned noise object continues each trial's stream for the pulse.
    """
    B = len(trials)
    rngs = [trial_rng(seed, i) for i in trials]
    m = np.tile([0.0, 0.0, float(np.sign(start) or 1.0)], (B, 1))
    noise = _Noise(rngs)
    if p.T == 0:
        return m, noise
    if init == "equilibrate":
        n = int(round(burn_in / dt))
        m, _, _ = _run(m, p, np.zeros((B, 3)), n, dt, noise, np.arange(B))
        noise.flush()
    elif init == "tilt":
        k_eff = 0.5 * MU0 * p.M_S * p.H_K_eff
        if k_eff <= 0:
            raise ValueError("tilt initialization needs positive effective anisotropy")
        var = KB * p.T / (2.0 * k_eff * p.volume)
        draws = np.stack([g.standard_normal(3) for g in rngs])
        theta = np.sqrt(var) * np.hypot(draws[:, 0], draws[:, 1])
        phi = 2.0 * np.pi * (draws[:, 2] - np.floor(draws[:, 2]))
        m = np.stack(
            (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), m[:, 2] * np.cos(theta)),
            axis=1,
        )
    else:
        raise ValueError(f"unknown init mode {init!r}")
    return m, noise


def _pulse_outcomes(
    p: MagnetParams,
    stimuli: Sequence[MEStimulus],
    pulse_duration: float,
    trials: Sequence[int],
    cfg: SimConfig,
    start: int,
    init: str,
    burn_in: float,
    relax_time: float,
):
    """Switched flags, shape (len(stimuli), len(trials)), with common random numbers.

    Every stimulus sees the same per-trial initial state and noise continuation,
    so each column is exactly what an independent run of that trial would give.
    """
    m0, noise = initial_states(p, trials, cfg.seed, cfg.dt, start, init, burn_in)
    S, B = len(stimuli), len(trials)
    m = np.repeat(m0[None], S, axis=0).reshape(S * B, 3)
    rows = np.tile(np.arange(B), S)
    h = np.repeat(np.stack([me_field(s) for s in stimuli]), B, axis=0)
    n = int(round(pulse_duration / cfg.dt))
    m, _, _ = _run(m, p, h, n, cfg.dt, noise, rows, cfg.renormalize)
    if relax_time > 0:
        noise.flush()
        n_relax = int(round(relax_time / cfg.dt))
        m, _, _ = _run(m, p, np.zeros_like(h), n_relax, cfg.dt, noise, rows, cfg.renormalize)
    target = -float(np.sign(start) or 1.0)
    switched = target * m[:, 2] >= cfg.reversal_threshold
    return switched.reshape(S, B)


def _chunks(n: int, workers: int) -> list[list[int]]:
    workers = max(1, min(workers, n))
    size = -(-n // workers)
    return [list(range(i, min(n, i + size))) for i in range(0, n, size)]


def switching_outcomes(
    p: MagnetParams,
    stimuli: Sequence[MEStimulus],
    pulse_duration: float,
    n_trials: int,
    cfg: SimConfig,
    *,
    start: int = 1,
    init: str = "equilibrate",
    burn_in: float = 2.0e-9,
    relax_time: float = 0.0,
    workers: int = 1,
) -> np.ndarray:
    """Boolean switched matrix (stimulus x trial); independent of ``workers``."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    args = (p, list(stimuli), pulse_duration)
    tail = (cfg, start, init, burn_in, relax_time)
    chunks = _chunks(n_trials, workers)
    if len(chunks) == 1:
        return _pulse_outcomes(*args, chunks[0], *tail)
    with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
        parts = list(ex.map(_pulse_outcomes_star, [(*args, c, *tail) for c in chunks]))
    return np.concatenate(parts, axis=1)


def _pulse_outcomes_star(a):
    return _pulse_outcomes(*a)


def switching_probability(
    p: MagnetParams,
    s: MEStimulus,
    pulse_duration: float,
    n_trials: int,
    cfg: SimConfig,
    **kwargs,
) -> SwitchingResult:
    """Fraction of trials that end the pulse reversed (m_z past the threshold)."""
    flags = switching_outcomes(p, [s], pulse_duration, n_trials, cfg, **kwargs)[0]
    k = int(flags.sum())
    lo, hi = binomial_ci(k, n_trials)
    return SwitchingResult(k / n_trials, lo, hi, n_trials, k)


def switching_probability_sweep(
    p: MagnetParams,
    stimuli: Sequence[MEStimulus],
    pulse_duration: float,
    n_trials: int,
    cfg: SimConfig,
    **kwargs,
) -> list[SwitchingResult]:
    """``switching_probability`` for many stimuli sharing one equilibration."""
    flags = switching_outcomes(p, stimuli, pulse_duration, n_trials, cfg, **kwargs)
    out = []
    for row in flags:
        k = int(row.sum())
        lo, hi = binomial_ci(k, n_trials)
        out.append(SwitchingResult(k / n_trials, lo, hi, n_trials, k))
    return out


def reversal_times(
    p: MagnetParams,
    s: MEStimulus,
    n_trials: int,
    cfg: SimConfig,
    *,
    start: int = 1,
    init: str = "equilibrate",
    burn_in: float = 2.0e-9,
    workers: int = 1,
) -> np.ndarray:
    """First-crossing time of each trial under a pulse of ``cfg.duration`` (NaN if none)."""
    chunks = _chunks(n_trials, workers)
    jobs = [(p, s, c, cfg, start, init, burn_in) for c in chunks]
    if len(jobs) == 1:
        return _reversal_chunk(jobs[0])
    with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
        return np.concatenate(list(ex.map(_reversal_chunk, jobs)))


def _reversal_chunk(a):
    p, s, trials, cfg, start, init, burn_in = a
    m0, noise = initial_states(p, trials, cfg.seed, cfg.dt, start, init, burn_in)
    B = len(trials)
    h = np.repeat(me_field(s)[None], B, axis=0)
    _, crossed, _ = _run(
        m0, p, h, cfg.n_steps, cfg.dt, noise, np.arange(B), cfg.renormalize,
        threshold=cfg.reversal_threshold,
    )
    return crossed


def thermal_samples(
    p: MagnetParams,
    n_magnets: int,
    n_samples: int,
    spacing: float,
    cfg: SimConfig,
    burn_in: float = 1.0e-9,
    m0=(0.0, 0.0, 1.0),
) -> np.ndarray:
    """Zero-drive snapshots, shape (n_samples, n_magnets, 3).

    Independent magnets on streams ``0..n_magnets-1`` relax for ``burn_in`` and
    are then recorded every ``spacing`` seconds.
    """
    if n_magnets < 1 or n_samples < 1:
        raise ValueError("need at least one magnet and one sample")
    stride = int(round(spacing / cfg.dt))
    if stride < 1:
        raise ValueError("spacing must be at least one time step")
    m = np.tile(MagnetizationState(m0).m, (n_magnets, 1))
    rows = np.arange(n_magnets)
    noise = _Noise([trial_rng(cfg.seed, i) for i in rows]) if p.T > 0 else None
    h = np.zeros((n_magnets, 3))
    m, _, _ = _run(m, p, h, int(round(burn_in / cfg.dt)), cfg.dt, noise, rows, cfg.renormalize)
    _, _, hist = _run(
        m, p, h, n_samples * stride, cfg.dt, noise, rows, cfg.renormalize, record_stride=stride
    )
    return np.stack([mm for _, mm in hist[1:]])


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def evolve_batch(
    m0,
    p: MagnetParams,
    stimuli: Sequence[MEStimulus],
    duration: float,
    cfg: SimConfig,
    trials: Sequence[int],
) -> np.ndarray:
    """Final states of several magnets, each under its own stimulus and stream.

    Row i equals ``simulate_trajectory(m0[i], p, stimuli[i], cfg, trials[i])``
    run for ``duration``.
    """
    m0 = np.stack([MagnetizationState(r).m for r in np.asarray(m0, dtype=float).reshape(-1, 3)])
    B = m0.shape[0]
    if len(stimuli) != B or len(trials) != B:
        raise ValueError("need one stimulus and one trial index per magnet")
    noise = _Noise([trial_rng(cfg.seed, i) for i in trials]) if p.T > 0 else None
    h = np.stack([me_field(s) for s in stimuli])
    n = int(round(duration / cfg.dt))
    m, _, _ = _run(m0, p, h, n, cfg.dt, noise, np.arange(B), cfg.renormalize)
    return m
