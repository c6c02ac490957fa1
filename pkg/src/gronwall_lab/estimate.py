"""Monte-Carlo means with confidence intervals, including a median-of-means
estimator for samples whose variance is infinite."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.stats import binom

from .analytic import GeometricLadder, Exponent, ladder_moment, stopped_sup_law
from .simulate import PATH_CHUNK, RngStream, sample_ladder_sup_exact

__all__ = [
    "CLT",
    "MEDIAN_OF_MEANS",
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "EstimateWithCI",
    "InequalityReport",
    "SampleSummary",
    "LadderChainResult",
    "default_blocks",
    "estimate_from_samples",
    "estimate_mean",
    "select_estimator",
    "compare",
    "estimate_ladder_chain",
]

CLT = "clt"
MEDIAN_OF_MEANS = "median_of_means"
PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"
DEFAULT_CONFIDENCE = 0.999


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    half_width: float
    n: int
    confidence: float = DEFAULT_CONFIDENCE
    method: str = CLT
    blocks: Optional[int] = None

    def __post_init__(self):
        if not self.half_width >= 0:
            raise ValueError(f"half_width must be nonnegative, got {self.half_width}")
        if self.n < 2:
            raise ValueError(f"need at least 2 samples, got {self.n}")
        if self.method == MEDIAN_OF_MEANS:
            if self.blocks is None or self.blocks % 2 == 0 or self.blocks > self.n:
                raise ValueError(f"median of means needs an odd block count <= n, got {self.blocks}")
        elif self.method != CLT:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def lower(self) -> float:
        return self.mean - self.half_width

    @property
    def upper(self) -> float:
        return self.mean + self.half_width

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @classmethod
    def exact(cls, value: float, n: int, confidence: float = DEFAULT_CONFIDENCE) -> "EstimateWithCI":
        """A quantity known in closed form, carried with zero width."""
        return cls(float(value), 0.0, max(int(n), 2), confidence, CLT)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateWithCI":
        return cls(**d)


@dataclass(frozen=True)
class InequalityReport:
    """Empirical check of ``lhs <= constant * rhs``.

    ``verdict`` is FAIL only when the lower edge of the LHS interval exceeds
    ``constant`` times the upper edge of the RHS interval.  ``margin`` is the
    strict version, ``constant * rhs.lower - lhs.upper``; a positive margin
    means the inequality is resolved even at the pessimistic interval ends.
    """

    lhs: EstimateWithCI
    rhs: EstimateWithCI
    constant: float
    margin: float
    verdict: str
    bias_notes: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "constant": self.constant,
            "margin": self.margin,
            "verdict": self.verdict,
            "bias_notes": self.bias_notes,
            "details": dict(self.details),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InequalityReport":
        return cls(
            lhs=EstimateWithCI.from_dict(d["lhs"]),
            rhs=EstimateWithCI.from_dict(d["rhs"]),
            constant=d["constant"],
            margin=d["margin"],
            verdict=d["verdict"],
            bias_notes=d.get("bias_notes", ""),
            details=dict(d.get("details", {})),
        )


def compare(lhs: EstimateWithCI, rhs: EstimateWithCI, constant: float,
            bias_notes: str = "", **details) -> InequalityReport:
    values = (lhs.mean, lhs.half_width, rhs.mean, rhs.half_width, constant)
    if not all(math.isfinite(v) for v in values):
        verdict = INCONCLUSIVE
        margin = math.nan
    else:
        verdict = PASS if lhs.lower <= constant * rhs.upper else FAIL
        margin = constant * rhs.lower - lhs.upper
    return InequalityReport(lhs, rhs, float(constant), float(margin), verdict, bias_notes, details)


@dataclass(frozen=True)
class SampleSummary:
    """Count, mean and centred sum of squares of one block of samples."""

    n: int
    mean: float
    m2: float

    @classmethod
    def of(cls, x) -> "SampleSummary":
        x = np.asarray(x, dtype=float)
        mu = float(x.mean())
        return cls(int(x.size), mu, float(np.sum((x - mu) ** 2)))

    @staticmethod
    def merge(parts) -> "SampleSummary":
        """Combine block summaries; the result does not depend on their order
        because every sum is correctly rounded (``math.fsum``)."""
        parts = list(parts)
        n = sum(p.n for p in parts)
        mean = math.fsum(p.n * p.mean for p in parts) / n
        m2 = math.fsum(p.m2 for p in parts) + math.fsum(p.n * (p.mean - mean) ** 2 for p in parts)
        return SampleSummary(n, mean, m2)

    def estimate(self, confidence: float = DEFAULT_CONFIDENCE) -> EstimateWithCI:
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        z = NormalDist().inv_cdf(0.5 + 0.5 * confidence)
        var = max(self.m2, 0.0) / (self.n - 1)
        return EstimateWithCI(self.mean, z * math.sqrt(var / self.n), self.n, confidence, CLT)


def default_blocks(confidence: float, n: int) -> int:
    """``2 floor(ln(1/(1-confidence))) + 1``, capped at ``n/2`` and kept odd."""
    k = 2 * int(math.floor(math.log(1.0 / (1.0 - confidence)))) + 1
    cap = max(1, n // 2)
    if k > cap:
        k = cap if cap % 2 else cap - 1
    return max(k, 1)


def _order_stat_rank(k: int, confidence: float) -> int:
    # largest j with P(b_(j) <= median <= b_(k+1-j)) >= confidence; at least 1
    for j in range((k + 1) // 2, 0, -1):
        if 1.0 - 2.0 * binom.cdf(j - 1, k, 0.5) >= confidence:
            return j
    return 1


def _median_of_means(x: np.ndarray, k: int, confidence: float) -> EstimateWithCI:
    means = np.sort([b.mean() for b in np.array_split(x, k)])
    med = float(np.median(means))
    j = _order_stat_rank(k, confidence)
    hw = max(med - float(means[j - 1]), float(means[k - j]) - med)
    return EstimateWithCI(med, hw, int(x.size), confidence, MEDIAN_OF_MEANS, k)


def estimate_from_samples(
    x,
    method: str = CLT,
    confidence: float = DEFAULT_CONFIDENCE,
    blocks: Optional[int] = None,
) -> EstimateWithCI:
    """Mean of ``x`` with a two-sided interval at ``confidence``.

    ``clt``: sample mean +/- z s / sqrt(n).
    ``median_of_means``: median of ``blocks`` contiguous block means; the
    half-width reaches the order statistics of the block means that bracket
    the median at the stated confidence (binomial sign argument).  This is
    a distribution-free bound for the median of the block-mean law, which
    converges to the mean as the block size grows.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    if method == CLT:
        return SampleSummary.of(x).estimate(confidence)
    if method == MEDIAN_OF_MEANS:
        k = blocks if blocks is not None else default_blocks(confidence, x.size)
        return _median_of_means(x, k, confidence)
    raise ValueError(f"unknown method {method!r}")


Sampler = Callable[[np.random.Generator, int], np.ndarray]


def estimate_mean(
    sampler: Sampler,
    n: int,
    rng: RngStream,
    method: str = CLT,
    confidence: float = DEFAULT_CONFIDENCE,
    blocks: Optional[int] = None,
    workers: int = 1,
    chunk: int = PATH_CHUNK,
) -> EstimateWithCI:
    """Draw ``n`` samples from ``sampler(generator, size)`` and estimate the mean.

    Chunk ``j`` of ``chunk`` samples comes from ``rng.substream(j)``, so the
    result depends on ``(rng, n, method)`` only, not on ``workers``.
    """
    if n < 100:
        raise ValueError(f"n must be at least 100, got {n}")
    sizes = [min(chunk, n - s) for s in range(0, n, chunk)]

    def draw(j: int) -> np.ndarray:
        out = np.asarray(sampler(rng.substream(j).generator(), sizes[j]), dtype=float)
        if out.shape != (sizes[j],):
            raise ValueError(f"sampler returned shape {out.shape}, expected ({sizes[j]},)")
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            draws = list(pool.map(draw, range(len(sizes))))
    else:
        draws = [draw(j) for j in range(len(sizes))]

    if method == CLT:
        return SampleSummary.merge(SampleSummary.of(d) for d in draws).estimate(confidence)
    return estimate_from_samples(np.concatenate(draws), method, confidence, blocks)


# law tag -> tail index of the underlying variable (inf: all moments finite)
_TAIL_INDEX = {
    "stopped-sup": 1.0,
    "ladder-rung": 1.0,
    "bounded": math.inf,
    "gaussian": math.inf,
}


def select_estimator(p, law_tag: str) -> str:
    """Median of means when ``E X**(2p)`` is infinite for the tagged law, else CLT."""
    p = Exponent(float(p)).p
    try:
        alpha = _TAIL_INDEX[law_tag]
    except KeyError:
        raise ValueError(f"unknown law tag {law_tag!r}; known: {sorted(_TAIL_INDEX)}") from None
    return MEDIAN_OF_MEANS if 2.0 * p >= alpha else CLT


class LadderChainResult(NamedTuple):
    lhs: EstimateWithCI
    chain_bound: float
    rung_moments: np.ndarray
    p_hat: np.ndarray
    levels_used: int

    @property
    def verdict(self) -> str:
        return PASS if self.lhs.lower <= self.chain_bound else FAIL


def estimate_ladder_chain(
    p,
    ladder: GeometricLadder,
    n: int,
    rng: RngStream,
    b: float = 1.0,
    confidence: float = DEFAULT_CONFIDENCE,
) -> LadderChainResult:
    """Monte-Carlo ``E A**p`` for Brownian motion stopped at ``-b`` against the
    ladder chain bound ``sum_i Gamma_i P(B >= a_{i-1})``.

    ``A`` is drawn exactly, rung by rung along ``ladder``; ``B`` (the negative
    infimum) is ``b`` on every run, and ``P(B >= a_{i-1})`` is the empirical
    frequency over those runs.  Raises ``ValueError`` if the ladder does not
    reach ``b``.
    """
    p = Exponent(float(p)).p
    sizes = [min(PATH_CHUNK, n - s) for s in range(0, n, PATH_CHUNK)]
    samples, levels_used = [], 0
    for j, m in enumerate(sizes):
        a, levels_used = sample_ladder_sup_exact(rng.substream(j).generator(), ladder, b, m)
        samples.append(a)
    a = np.concatenate(samples)
    lhs = estimate_from_samples(a**p, select_estimator(p, "stopped-sup"), confidence)

    neg_inf = np.full(n, float(b))
    levels = ladder.levels()
    gammas = np.array([ladder_moment(p, levels[i - 1], levels[i]) for i in range(1, len(levels))])
    p_hat = np.array([np.mean(neg_inf >= levels[i - 1]) for i in range(1, len(levels))])
    chain = math.fsum(gammas * p_hat)
    return LadderChainResult(lhs, chain, gammas, p_hat, levels_used)


def stopped_sup_power_sampler(p: float, b: float = 1.0) -> Sampler:
    """Sampler of ``A**p`` for the stopped Brownian supremum (for ``estimate_mean``)."""
    law = stopped_sup_law(b)

    def sampler(gen, size):
        return law.ppf(gen.random(size)) ** p

    return sampler
