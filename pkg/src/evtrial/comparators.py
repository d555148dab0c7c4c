"""The four non-e-value monitoring rules: naive Wald p-value, calibrated
group sequential boundary, and naive/calibrated Bayesian posterior
thresholds, with their Monte Carlo calibration procedures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special

from .core import ConfigurationError
from .rng import bernoulli_block, chunk_sizes, stream_generator

# Degenerate-variance z statistics are mapped to a large finite sentinel so
# that max_k z_k*sqrt(t_k) calibration stays ordered by the look at which the
# degeneracy occurs instead of collapsing to a single infinite atom.
Z_SENTINEL = 1e6

JEFFREYS = 0.5

# Beta draws per posterior evaluation inside simulation loops. Sampling (as
# opposed to exact quadrature) is what published posterior-threshold
# operating characteristics reflect; None selects exact quadrature.
DEFAULT_POSTERIOR_DRAWS = 1000


@dataclass(frozen=True)
class TwoArmCounts:
    """Sufficient statistics: successes and totals per arm."""

    s_t: int
    n_t: int
    s_c: int
    n_c: int

    def __post_init__(self) -> None:
        if not (0 <= self.s_t <= self.n_t and 0 <= self.s_c <= self.n_c):
            raise ValueError("need 0 <= successes <= totals in each arm")


@dataclass(frozen=True)
class LookSchedule:
    """Interim-analysis times on a per-arm sample-size axis.

    ``fixed``: k_looks equally spaced looks ending at n_max.
    ``irregular``: k_looks-1 times drawn without replacement from
    {min_look..n_max-1} plus a forced final look at n_max; ``draws``
    independent schedule realizations are available via
    ``look_times(draw)``. Looks before the third pair are excluded by
    default: a two-proportion z-statistic is degenerate there with
    probability above typical alpha levels, which poisons Monte Carlo
    boundary calibration for any schedule containing such a look.
    ``continuous``: a look at every pair.
    """

    kind: str
    n_max: int
    k_looks: int = 0
    seed: int = 0
    draws: int = 1
    min_look: int = 3

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "irregular", "continuous"):
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.n_max < 1:
            raise ConfigurationError("n_max must be positive")
        if self.kind in ("fixed", "irregular") and not 1 <= self.k_looks <= self.n_max:
            raise ConfigurationError("k_looks must be in 1..n_max")

    def look_times(self, draw: int = 0) -> np.ndarray:
        if self.kind == "continuous":
            return np.arange(1, self.n_max + 1)
        if self.kind == "fixed":
            times = np.unique(
                np.round(np.arange(1, self.k_looks + 1) * self.n_max / self.k_looks)
            ).astype(np.int64)
            return times
        rng = stream_generator(self.seed, "irregular-schedule", draw)
        inner = rng.choice(
            np.arange(self.min_look, self.n_max), size=self.k_looks - 1, replace=False
        )
        return np.concatenate([np.sort(inner), [self.n_max]]).astype(np.int64)

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed-{self.k_looks}"
        if self.kind == "irregular":
            return f"irregular-{self.k_looks}x{self.draws}"
        return "continuous"


@dataclass(frozen=True)
class ObfBoundary:
    """O'Brien-Fleming-like boundary: reject when z >= c/sqrt(t)."""

    c: float
    n_max: int

    def at(self, n: int) -> float:
        return obf_boundary_at(self.c, n / self.n_max)


@dataclass(frozen=True)
class BayesRule:
    """Posterior-probability threshold rule with per-arm Beta priors."""

    prior_a: float = JEFFREYS
    prior_b: float = JEFFREYS
    threshold: float = 0.975

    def __post_init__(self) -> None:
        if self.prior_a <= 0 or self.prior_b <= 0:
            raise ConfigurationError("prior parameters must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError("threshold must be in (0,1)")


def wald_z(counts: TwoArmCounts) -> float:
    """One-sided unpooled Wald z for p_T > p_C.

    Degenerate variance: equal proportions give 0; unequal give a signed
    infinity sentinel (auto-reject / never-reject semantics).
    """
    pt = counts.s_t / counts.n_t
    pc = counts.s_c / counts.n_c
    v = pt * (1 - pt) / counts.n_t + pc * (1 - pc) / counts.n_c
    if v == 0.0:
        if pt == pc:
            return 0.0
        return math.inf if pt > pc else -math.inf
    return (pt - pc) / math.sqrt(v)


def z_matrix(c_t: np.ndarray, c_c: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Vectorized unpooled Wald z with the finite degeneracy sentinel."""
    pt = c_t / n
    pc = c_c / n
    v = pt * (1 - pt) / n + pc * (1 - pc) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (pt - pc) / np.sqrt(v)
    z = np.where(v == 0.0, np.sign(pt - pc) * Z_SENTINEL, z)
    return np.clip(z, -Z_SENTINEL, Z_SENTINEL)


def obf_boundary_at(c: float, t: float) -> float:
    """Boundary value c/sqrt(t) at information fraction t in (0, 1]."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"information fraction must be in (0,1], got {t}")
    return c / math.sqrt(t)


def _order_stat_index(alpha: float, reps: int) -> int:
    return int(math.ceil((1.0 - alpha) * reps)) - 1


def calibrate_obf(
    null_p: float,
    schedule: LookSchedule,
    alpha: float = 0.025,
    reps: int = 50000,
    seed: int = 0,
    schedule_draw: int = 0,
) -> float:
    """Monte Carlo boundary constant: the (1-alpha) empirical quantile of
    max_k z_k*sqrt(t_k) over null trials."""
    looks = schedule.look_times(schedule_draw)
    sq = np.sqrt(looks / schedule.n_max)
    maxes = []
    for idx, size in enumerate(chunk_sizes(reps)):
        rng = stream_generator(seed, "obf-calibration", idx)
        x_t = bernoulli_block(rng, size, schedule.n_max, null_p)
        x_c = bernoulli_block(rng, size, schedule.n_max, null_p)
        c_t = np.cumsum(x_t, 1)[:, looks - 1]
        c_c = np.cumsum(x_c, 1)[:, looks - 1]
        z = z_matrix(c_t, c_c, looks[None, :])
        maxes.append((z * sq[None, :]).max(1))
    stat = np.sort(np.concatenate(maxes))
    return float(stat[_order_stat_index(alpha, reps)])


# --- posterior probability of superiority -------------------------------
#
# Pr(P_T > P_C) = int_0^1 (1 - F_T(x)) f_C(x) dx for independent Beta
# posteriors, evaluated by a fixed 2048-node Gauss-Legendre rule under the
# substitution x = (1 - cos(pi u))/2. The substitution removes the
# integrable endpoint singularities of half-integer (Jeffreys) posteriors,
# keeping the rule's absolute error below 1e-6 for all count combinations.

_N_NODES = 2048
_gl_u, _gl_w = np.polynomial.legendre.leggauss(_N_NODES)
_gl_u = 0.5 * (_gl_u + 1.0)
_gl_w = 0.5 * _gl_w
_QUAD_X = 0.5 * (1.0 - np.cos(np.pi * _gl_u))
_QUAD_W = _gl_w * 0.5 * np.pi * np.sin(np.pi * _gl_u)


def _beta_survival_at_nodes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 1.0 - special.betainc(a[:, None], b[:, None], _QUAD_X[None, :])


def _beta_weighted_pdf_at_nodes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ln = (
        special.xlogy(a[:, None] - 1.0, _QUAD_X[None, :])
        + special.xlog1py(b[:, None] - 1.0, -_QUAD_X[None, :])
        - special.betaln(a, b)[:, None]
    )
    return np.exp(ln) * _QUAD_W[None, :]


@lru_cache(maxsize=None)
def posterior_table(n: int, prior_a: float = JEFFREYS, prior_b: float = JEFFREYS) -> np.ndarray:
    """Pr(P_T > P_C) for every (s_t, s_c) in {0..n}^2 at equal arm size n."""
    s = np.arange(n + 1, dtype=np.float64)
    a = prior_a + s
    b = prior_b + n - s
    surv = _beta_survival_at_nodes(a, b)
    pdf_w = _beta_weighted_pdf_at_nodes(a, b)
    return np.clip(surv @ pdf_w.T, 0.0, 1.0)


def posterior_prob_superiority(
    counts: TwoArmCounts, prior_a: float = JEFFREYS, prior_b: float = JEFFREYS
) -> float:
    """Deterministic quadrature value of Pr(P_T > P_C | data)."""
    a_t = prior_a + counts.s_t
    b_t = prior_b + counts.n_t - counts.s_t
    a_c = prior_a + counts.s_c
    b_c = prior_b + counts.n_c - counts.s_c
    surv = _beta_survival_at_nodes(np.array([a_t]), np.array([b_t]))
    pdf_w = _beta_weighted_pdf_at_nodes(np.array([a_c]), np.array([b_c]))
    return float(np.clip(surv[0] @ pdf_w[0], 0.0, 1.0))


def posterior_matrix(
    c_t: np.ndarray,
    c_c: np.ndarray,
    looks: np.ndarray,
    prior_a: float = JEFFREYS,
    prior_b: float = JEFFREYS,
    draws: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Posterior superiority per (trial, look); optionally B-draw sampled.

    ``draws=B`` replaces the exact value q by Binomial(B, q)/B, the
    distribution of a B-draw Monte Carlo posterior estimate; this is what
    posterior-threshold rules evaluated by sampling actually see.
    """
    out = np.empty(c_t.shape, dtype=np.float64)
    for j, n in enumerate(looks):
        out[:, j] = posterior_table(int(n), prior_a, prior_b)[c_t[:, j], c_c[:, j]]
    if draws is not None:
        if rng is None:
            raise ValueError("sampled posterior needs an rng")
        out = rng.binomial(draws, out) / draws
    return out


def calibrate_bayes_threshold(
    null_p: float,
    schedule: LookSchedule,
    alpha: float = 0.025,
    prior_a: float = JEFFREYS,
    prior_b: float = JEFFREYS,
    reps: int = 50000,
    seed: int = 0,
    posterior_draws: Optional[int] = DEFAULT_POSTERIOR_DRAWS,
    schedule_draw: int = 0,
) -> float:
    """(1-alpha) empirical quantile of the max posterior probability across
    looks under the null."""
    looks = schedule.look_times(schedule_draw)
    maxes = []
    for idx, size in enumerate(chunk_sizes(reps)):
        rng = stream_generator(seed, "bayes-calibration", idx)
        x_t = bernoulli_block(rng, size, schedule.n_max, null_p)
        x_c = bernoulli_block(rng, size, schedule.n_max, null_p)
        c_t = np.cumsum(x_t, 1)[:, looks - 1]
        c_c = np.cumsum(x_c, 1)[:, looks - 1]
        draw_rng = stream_generator(seed, "bayes-calibration-draws", idx)
        post = posterior_matrix(c_t, c_c, looks, prior_a, prior_b, posterior_draws, draw_rng)
        maxes.append(post.max(1))
    stat = np.sort(np.concatenate(maxes))
    return float(stat[_order_stat_index(alpha, reps)])
