"""Homodyne statistics and Monte Carlo estimation campaigns.

Quadrature convention (pinned once, used everywhere): X = (a + a^dag)/sqrt(2)
at phase zero, so a coherent state |beta> has mean sqrt(2) Re(beta) and
variance 1/2. Estimators therefore divide sample means by sqrt(2), and the
amplified scheme additionally multiplies by t to undo the nominal 1/t gain.

Campaign time model: a budget of total_time seconds at run_period seconds per
attempt gives R = floor(total_time / run_period) attempts. Technical noise is
a process over the attempt timeline; its clock advances on every attempt,
including failed heralds, so the amplified scheme samples the process
sparsely. Estimation is restricted to real alpha at phase zero.

Randomness: one 64-bit seed; replica i draws from a counter-based Philox
stream keyed by SeedSequence(seed, spawn_key=(i,)), so replicas are
independent of each other and of thread scheduling. Within a replica the
draw order is fixed: herald uniforms (amplified only), then quadrature
samples, then noise variates; a zero-sigma noise model consumes no draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from ._parallel import map_indexed
from .errors import GridError, NoSuccessError, ShapeError, ValidationError
from .fock_core import DEFAULT_CUTOFF, DensityOperator, PureState, coherent_state
from .protocol import HeraldResult, ProtocolConfig, run_exact

State = Union[PureState, DensityOperator]

#: Default homodyne tabulation grid: [-8, 8] in steps of 1e-3.
GRID_HALF_WIDTH = 8.0
GRID_POINTS = 16001


@dataclass(frozen=True)
class QuadratureConvention:
    """The package-wide homodyne convention, stated as data."""

    definition: str = "X_phi = (a e^{-i phi} + a^dag e^{i phi})/sqrt(2)"
    coherent_mean_factor: float = math.sqrt(2.0)  # <X_0> of |beta> is this times Re(beta)
    vacuum_variance: float = 0.5


CONVENTION = QuadratureConvention()


@dataclass(frozen=True)
class NoiseModel:
    """Additive technical noise at the detector, in quadrature units.

    kind "white": i.i.d. Gaussian(0, sigma_tech^2) per attempt.
    kind "ar1":   w_k = lambda w_{k-1} + sqrt(1-lambda^2) sigma_tech xi_k with
                  stationary start; correlation time -1/ln(lambda) run periods.
    kind "systematic": constant offset added to every attempt.
    """

    kind: str = "white"
    sigma_tech: float = 0.0
    lam: float = 0.0  # serialized under the name "lambda"
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("white", "ar1", "systematic"):
            raise ValidationError(f"noise kind must be white|ar1|systematic, got {self.kind!r}")
        if not (np.isfinite(self.sigma_tech) and self.sigma_tech >= 0.0):
            raise ValidationError(f"sigma_tech must be >= 0, got {self.sigma_tech!r}")
        if not (0.0 <= self.lam < 1.0):
            raise ValidationError(f"lambda must be in [0,1), got {self.lam!r}")
        if not np.isfinite(self.offset):
            raise ValidationError(f"offset must be finite, got {self.offset!r}")

    @property
    def correlation_time(self) -> float:
        """Correlation time in run periods (0 when uncorrelated)."""
        return -1.0 / math.log(self.lam) if 0.0 < self.lam < 1.0 else 0.0


@dataclass(frozen=True)
class CampaignConfig:
    """One estimation experiment: scheme, truth, time budget, noise, seeding."""

    scheme: str
    true_alpha: float
    total_time: float
    noise: NoiseModel
    seed: int
    replicas: int
    run_period: float = 0.1
    protocol: Optional[ProtocolConfig] = None

    def __post_init__(self):
        if self.scheme not in ("direct", "amplified"):
            raise ValidationError(f"scheme must be direct|amplified, got {self.scheme!r}")
        if self.scheme == "amplified" and self.protocol is None:
            raise ValidationError("amplified scheme requires a protocol")
        if self.scheme == "direct" and self.protocol is not None:
            raise ValidationError("direct scheme takes no protocol")
        if not np.isfinite(self.true_alpha):
            raise ValidationError("true_alpha must be finite")
        if not (self.run_period > 0 and np.isfinite(self.run_period)):
            raise ValidationError(f"run_period must be positive, got {self.run_period!r}")
        if not (self.total_time > 0 and np.isfinite(self.total_time)):
            raise ValidationError(f"total_time must be positive, got {self.total_time!r}")
        if self.attempts < 1:
            raise ValidationError("time budget is shorter than one run period")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.replicas, (int, np.integer)) or self.replicas < 1:
            raise ValidationError(f"replicas must be a positive integer, got {self.replicas!r}")

    @property
    def attempts(self) -> int:
        return int(math.floor(self.total_time / self.run_period))


@dataclass(frozen=True)
class CampaignSummary:
    """Aggregated estimator statistics of a campaign.

    rmse is sqrt(bias^2 + variance) where variance is the population variance
    of the per-replica estimates and bias is their mean minus true_alpha.
    Replicas that produced no heralded sample are listed in
    no_success_replicas and excluded from the aggregates.
    """

    attempts: int
    replicas: int
    successes: int
    estimate_mean: float
    bias: float
    variance: float
    rmse: float
    per_replica_estimates: Tuple[Optional[float], ...]
    per_replica_successes: Tuple[int, ...]
    no_success_replicas: Tuple[int, ...]
    elapsed_model_time: float
    run_records: Optional[Tuple["ReplicaRuns", ...]] = None


@dataclass(frozen=True)
class ReplicaRuns:
    """Per-attempt record of one replica (for the optional runs CSV)."""

    replica: int
    heralded: np.ndarray  # int8, 1 where an estimate sample exists
    x_sample: np.ndarray  # float, NaN on attempts without a sample
    noise_value: np.ndarray  # float, the technical-noise value per attempt


@dataclass(frozen=True)
class TimeBudget:
    """Expected wall-model time to collect heralded points."""

    success_probability: float
    run_period: float
    expected_time_per_point: float
    target_points: int
    expected_total_time: float


@dataclass(frozen=True)
class TabulatedDensity:
    """A quadrature density tabulated on a strictly increasing grid."""

    x: np.ndarray
    density: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.x))

    def mean(self) -> float:
        return float(np.trapezoid(self.x * self.density, self.x))

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.x - m) ** 2 * self.density, self.x))


def default_grid() -> np.ndarray:
    return np.linspace(-GRID_HALF_WIDTH, GRID_HALF_WIDTH, GRID_POINTS)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Hermite functions u_0..u_n_max on x via the stable recurrence.

    u_0 = pi^(-1/4) exp(-x^2/2), u_1 = sqrt(2) x u_0,
    u_{n+1} = sqrt(2/(n+1)) x u_n - sqrt(n/(n+1)) u_{n-1}.
    """
    u = np.empty((n_max + 1, x.shape[0]))
    u[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        u[1] = math.sqrt(2.0) * x * u[0]
    for n in range(1, n_max):
        u[n + 1] = math.sqrt(2.0 / (n + 1)) * x * u[n] - math.sqrt(n / (n + 1.0)) * u[n - 1]
    return u


def quadrature_pdf(
    state: State,
    phase: float = 0.0,
    grid: Optional[np.ndarray] = None,
    tol: float = 1e-6,
) -> TabulatedDensity:
    """Tabulate the homodyne outcome density of a single-mode state.

    For a pure state, P(x) = |sum_n c_n e^{-i n phase} u_n(x)|^2; for a mixed
    state the bilinear generalization over the density matrix. The tabulated
    density must integrate to 1 within tol on the supplied grid.

    Raises
    ------
    GridError
        If the integral misses 1 by more than tol (grid too coarse or too
        narrow for this state).
    """
    if state.mode_count != 1:
        raise ShapeError("quadrature_pdf requires a single-mode state")
    x = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2 or not np.all(np.diff(x) > 0):
        raise GridError("grid must be a strictly increasing 1-d array")
    u = hermite_functions(state.cutoff, x)
    n = np.arange(state.cutoff + 1)
    rot = np.exp(-1j * n * phase)
    if isinstance(state, PureState):
        amp = state.amplitudes / state.norm()
        psi = (amp * rot) @ u.astype(np.complex128)
        dens = np.abs(psi) ** 2
    else:
        rho = state.matrix / state.trace()
        chi = rot[:, None] * u  # chi_n(x)
        dens = np.real(np.einsum("mx,mn,nx->x", chi, rho, chi.conj()))
        dens = np.maximum(dens, 0.0)
    result = TabulatedDensity(x=x, density=dens)
    err = abs(result.integral() - 1.0)
    if err > tol:
        raise GridError(
            f"tabulated density integrates to 1 with error {err:.3e}, "
            f"above tolerance {tol:.1e}; refine or widen the grid"
        )
    return result


def sample_homodyne(
    state: State,
    phase: float,
    count: int,
    rng: np.random.Generator,
    grid: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Draw homodyne samples by inverse-CDF lookup on the tabulated density."""
    if count < 0:
        raise ValidationError("count must be non-negative")
    pdf = quadrature_pdf(state, phase, grid)
    return _sample_from_density(pdf, count, rng)


def _sample_from_density(pdf: TabulatedDensity, count: int, rng: np.random.Generator) -> np.ndarray:
    if count == 0:
        return np.empty(0)
    x, dens = pdf.x, pdf.density
    widths = np.diff(x)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * widths)))
    cdf /= cdf[-1]
    return np.interp(rng.random(count), cdf, x)


def noise_series(model: NoiseModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Technical-noise values for `count` consecutive attempts.

    The series starts in the stationary distribution for ar1. Zero-sigma
    white/ar1 models (and systematic, which is deterministic) consume no
    random draws.
    """
    if count < 0:
        raise ValidationError("count must be non-negative")
    if model.kind == "systematic":
        return np.full(count, model.offset)
    if model.sigma_tech == 0.0 or count == 0:
        return np.zeros(count)
    xi = rng.standard_normal(count)
    if model.kind == "white":
        return model.sigma_tech * xi
    # ar1: innovations scaled for stationarity, first sample drawn stationary
    drive = np.empty(count)
    drive[0] = model.sigma_tech * xi[0]
    drive[1:] = math.sqrt(1.0 - model.lam * model.lam) * model.sigma_tech * xi[1:]
    return lfilter([1.0], [1.0, -model.lam], drive)


def apply_noise(
    samples: np.ndarray, model: NoiseModel, rng: np.random.Generator
) -> np.ndarray:
    """Add technical noise to an ordered sample sequence (order = run order)."""
    s = np.asarray(samples, dtype=float)
    return s + noise_series(model, s.shape[0], rng)


def estimate_alpha(samples: Sequence[float], scheme: str, t: Optional[float] = None) -> float:
    """Point estimate of a real alpha from phase-zero homodyne samples.

    direct: mean(x)/sqrt(2). amplified: t*mean(x)/sqrt(2), undoing the
    nominal 1/t amplification; samples must be the heralded runs only.
    """
    s = np.asarray(samples, dtype=float)
    if s.shape[0] == 0:
        raise NoSuccessError("no heralded samples to estimate from")
    if scheme == "direct":
        return float(np.mean(s) / CONVENTION.coherent_mean_factor)
    if scheme == "amplified":
        if t is None or not (0.0 < t < 1.0):
            raise ValidationError("amplified estimate requires the transmission amplitude t")
        return float(t * np.mean(s) / CONVENTION.coherent_mean_factor)
    raise ValidationError(f"scheme must be direct|amplified, got {scheme!r}")


def _replica_rng(seed: int, replica: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(ss))


def run_campaign(config: CampaignConfig, record_runs: bool = False) -> CampaignSummary:
    """Simulate the full campaign and aggregate per-replica estimates.

    Amplified scheme: the herald succeeds per attempt with the exact protocol
    success probability, and each success yields one homodyne sample of the
    exact conditional state. Direct scheme: every attempt samples the
    coherent state of amplitude true_alpha. Technical noise is generated over
    all attempts in run order and added to whichever samples exist.
    """
    r_attempts = config.attempts
    if config.scheme == "amplified":
        protocol_result: Optional[HeraldResult] = run_exact(config.protocol)
        p_success = protocol_result.success_probability
        sampled_state: State = protocol_result.conditional_state
        t_est: Optional[float] = config.protocol.t
    else:
        protocol_result = None
        p_success = 1.0
        sampled_state = coherent_state(config.true_alpha, DEFAULT_CUTOFF)
        t_est = None
    pdf = quadrature_pdf(sampled_state, 0.0)

    def one_replica(replica: int):
        rng = _replica_rng(config.seed, replica)
        if config.scheme == "amplified":
            heralded = rng.random(r_attempts) < p_success
        else:
            heralded = np.ones(r_attempts, dtype=bool)
        n_success = int(np.count_nonzero(heralded))
        quad = _sample_from_density(pdf, n_success, rng)
        noise = noise_series(config.noise, r_attempts, rng)
        x = np.full(r_attempts, np.nan)
        x[heralded] = quad + noise[heralded]
        try:
            est: Optional[float] = estimate_alpha(x[heralded], config.scheme, t_est)
        except NoSuccessError:
            est = None
        record = None
        if record_runs:
            record = ReplicaRuns(
                replica=replica,
                heralded=heralded.astype(np.int8),
                x_sample=x,
                noise_value=noise,
            )
        return est, n_success, record

    outcomes = map_indexed(one_replica, range(config.replicas))
    estimates = tuple(o[0] for o in outcomes)
    successes = tuple(o[1] for o in outcomes)
    no_success = tuple(i for i, e in enumerate(estimates) if e is None)
    usable = np.array([e for e in estimates if e is not None], dtype=float)
    if usable.shape[0] > 0:
        estimate_mean = float(np.mean(usable))
        bias = estimate_mean - config.true_alpha
        variance = float(np.mean((usable - estimate_mean) ** 2))
        rmse = math.sqrt(bias * bias + variance)
    else:
        estimate_mean = bias = variance = rmse = float("nan")
    return CampaignSummary(
        attempts=r_attempts,
        replicas=config.replicas,
        successes=int(sum(successes)),
        estimate_mean=estimate_mean,
        bias=bias,
        variance=variance,
        rmse=rmse,
        per_replica_estimates=estimates,
        per_replica_successes=successes,
        no_success_replicas=no_success,
        elapsed_model_time=r_attempts * config.run_period,
        run_records=tuple(o[2] for o in outcomes) if record_runs else None,
    )


def time_budget(
    protocol: ProtocolConfig, run_period: float = 0.1, target_points: int = 1
) -> TimeBudget:
    """Expected model time to collect heralded points at this protocol."""
    if not (run_period > 0 and np.isfinite(run_period)):
        raise ValidationError(f"run_period must be positive, got {run_period!r}")
    if target_points < 1:
        raise ValidationError("target_points must be at least 1")
    p = run_exact(protocol).success_probability
    per_point = run_period / p
    return TimeBudget(
        success_probability=p,
        run_period=run_period,
        expected_time_per_point=per_point,
        target_points=int(target_points),
        expected_total_time=per_point * target_points,
    )
