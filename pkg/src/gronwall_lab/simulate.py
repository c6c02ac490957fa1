"""Brownian path engine, exact inverse-CDF samplers and Gronwall scenarios.

Paths are generated on a uniform grid with left-point (Ito) sums.  Barrier
crossings are detected on the grid only, so a recorded supremum underestimates
the continuous one and a recorded infimum may overshoot the barrier by
O(sqrt(dt)).  Exact samplers are used wherever sharpness is at stake.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .analytic import GeometricLadder

__all__ = [
    "RngStream",
    "PathRecord",
    "StoppedBM",
    "ExitBM",
    "SigmaIntegral",
    "MartingaleModel",
    "PiecewiseDrift",
    "SignFeedbackDrift",
    "GronwallScenario",
    "ExtremesBatch",
    "ScenarioPath",
    "ScenarioBatch",
    "sample_stopped_sup_exact",
    "sample_ladder_rung_exact",
    "sample_ladder_sup_exact",
    "simulate_model",
    "simulate_extremes",
    "simulate_scenario",
    "simulate_scenario_batch",
    "DEFAULT_STEP_BUDGET",
    "PATH_CHUNK",
]

DEFAULT_STEP_BUDGET = 10**8
# paths per independent substream; fixed so results do not depend on worker count
PATH_CHUNK = 1 << 14
_TIME_BLOCK = 256

_U64 = 1 << 64


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Child streams (``substream``) extend the spawn key, so all streams derived
    from one seed are independent and the same key always replays the same
    sequence.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v < _U64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
        if any(int(k) != k or k < 0 for k in self.path):
            raise ValueError(f"substream indices must be nonnegative integers, got {self.path}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.path, int(index)))


def _gen(rng: Union[RngStream, np.random.Generator]) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True, eq=False)
class PathRecord:
    """One discretised trajectory plus its extremes and hitting metadata.

    For barrier models ``values`` ends at the first grid point on or beyond the
    barrier (the path is frozen from there on).
    """

    dt: float
    values: np.ndarray
    running_sup: float
    running_inf: float
    hit_index: Optional[int] = None
    truncated: bool = False

    @classmethod
    def from_values(cls, dt, values, hit_index=None, truncated=False) -> "PathRecord":
        values = np.asarray(values, dtype=float)
        return cls(float(dt), values, float(values.max()), float(values.min()),
                   hit_index, bool(truncated))

    def __eq__(self, other):
        if not isinstance(other, PathRecord):
            return NotImplemented
        return (
            self.dt == other.dt
            and np.array_equal(self.values, other.values)
            and self.running_sup == other.running_sup
            and self.running_inf == other.running_inf
            and self.hit_index == other.hit_index
            and self.truncated == other.truncated
        )

    __hash__ = None  # type: ignore[assignment]


def _steps(horizon: float, dt: float, budget: int) -> int:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    k = int(math.ceil(horizon / dt - 1e-9))
    if k > budget:
        raise ValueError(f"horizon/dt = {k} steps exceeds the step budget {budget}")
    return k


@dataclass(frozen=True)
class StoppedBM:
    """``W(tau_{-b} ^ t)``: Brownian motion frozen at its first visit to ``-b``."""

    barrier: float = 1.0
    horizon: float = 1000.0
    dt: float = 1e-3
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if not self.barrier > 0:
            raise ValueError(f"barrier must be positive, got {self.barrier}")
        _steps(self.horizon, self.dt, self.step_budget)

    @property
    def bounds(self):
        return -self.barrier, math.inf


@dataclass(frozen=True)
class ExitBM:
    """Brownian motion stopped on leaving ``(-lower, upper)``."""

    lower: float = 1.0
    upper: float = 1.0
    dt: float = 1e-3
    horizon: float = 10.0
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if not (self.lower > 0 and self.upper > 0):
            raise ValueError(f"exit levels must be positive, got {self.lower}, {self.upper}")
        _steps(self.horizon, self.dt, self.step_budget)

    @property
    def bounds(self):
        return -self.lower, self.upper


@dataclass(frozen=True)
class SigmaIntegral:
    """``int_0^t sigma(s) dW(s)`` with ``sigma`` piecewise constant.

    ``sigmas[j]`` applies on ``[breaks[j], breaks[j+1])``; ``breaks[0]`` must be 0.
    """

    breaks: tuple[float, ...] = (0.0,)
    sigmas: tuple[float, ...] = (1.0,)
    horizon: float = 1.0
    dt: float = 1e-3
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if len(self.breaks) != len(self.sigmas) or not self.breaks:
            raise ValueError("breaks and sigmas must be non-empty and of equal length")
        if self.breaks[0] != 0.0 or any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError(f"breaks must start at 0 and increase strictly, got {self.breaks}")
        _steps(self.horizon, self.dt, self.step_budget)

    @property
    def bounds(self):
        return -math.inf, math.inf

    def sigma_grid(self) -> np.ndarray:
        k = _steps(self.horizon, self.dt, self.step_budget)
        t = np.arange(k) * self.dt
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right") - 1
        return np.asarray(self.sigmas)[idx]


MartingaleModel = Union[StoppedBM, ExitBM, SigmaIntegral]


# -- exact samplers ---------------------------------------------------------


def _uniform_open_right(gen: np.random.Generator, size) -> np.ndarray:
    u = gen.random(size)
    # Generator.random is on [0, 1); keep the guard in case that ever changes
    bad = u >= 1.0
    while np.any(bad):
        u[bad] = gen.random(int(bad.sum()))
        bad = u >= 1.0
    return u


def sample_stopped_sup_exact(rng, b: float = 1.0, size=None):
    """Exact draws of ``sup_t W(tau_{-b} ^ t)`` via ``A = b U / (1 - U)``."""
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    u = _uniform_open_right(_gen(rng), size)
    out = b * u / (1.0 - u)
    return float(out) if size is None else out


def sample_ladder_rung_exact(rng, a_prev: float, a_cur: float, size=None):
    """Exact draws of ``Y v 0``, where ``Y`` is the supremum of Brownian motion
    between its first visits to ``-a_prev`` and ``-a_cur``.

    ``P(Y v 0 >= y) = (a_cur - a_prev) / (a_cur + y)`` for ``y > 0``; the mass
    ``a_prev / a_cur`` sits on 0 and is returned as an exact zero.
    """
    if not (0.0 <= a_prev < a_cur):
        raise ValueError(f"ladder levels must satisfy 0 <= a_prev < a_cur, got {a_prev}, {a_cur}")
    u = _uniform_open_right(_gen(rng), size)
    atom = a_prev / a_cur
    y = (a_cur - a_prev) / (1.0 - u) - a_cur
    out = np.where(u <= atom, 0.0, np.maximum(y, 0.0))
    return float(out) if size is None else out


def sample_ladder_sup_exact(rng, ladder: GeometricLadder, b: float = 1.0, size: int = 1):
    """Draw ``A = sup W`` up to ``tau_{-b}`` rung by rung along ``ladder``.

    Returns ``(A, N)`` where ``N`` is the index of the first ladder level at or
    beyond ``b`` (so ``P(N >= i) = 1{a_{i-1} < b}``).  The final rung runs from
    ``-a_{N-1}`` to ``-b``.  Raises if the ladder never reaches ``b``.
    """
    levels = ladder.levels()
    reach = np.nonzero(levels[1:] >= b)[0]
    if reach.size == 0:
        raise ValueError(
            f"ladder depth {ladder.depth} exhausted: top level {levels[-1]:.4g} below barrier {b}"
        )
    n_idx = int(reach[0]) + 1
    gen = _gen(rng)
    a = np.zeros(size)
    for i in range(1, n_idx):
        a = np.maximum(a, sample_ladder_rung_exact(gen, levels[i - 1], levels[i], size=size))
    a = np.maximum(a, sample_ladder_rung_exact(gen, levels[n_idx - 1], b, size=size))
    return a, n_idx


# -- grid simulation of martingale models -----------------------------------


@dataclass
class ExtremesBatch:
    """Per-path extremes of a batch of grid paths (no trajectories stored)."""

    sup: np.ndarray
    inf: np.ndarray
    hit: np.ndarray
    truncated: np.ndarray
    final: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sup.size)

    @property
    def truncated_fraction(self) -> float:
        return float(self.truncated.mean())

    @classmethod
    def concat(cls, parts: list["ExtremesBatch"]) -> "ExtremesBatch":
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("sup", "inf", "hit", "truncated", "final")))


def _model_grid(model: MartingaleModel):
    k = _steps(model.horizon, model.dt, model.step_budget)
    sigma = model.sigma_grid() if isinstance(model, SigmaIntegral) else None
    lo, hi = model.bounds
    return k, sigma, lo, hi


def _run_paths(model: MartingaleModel, gen: np.random.Generator, n: int, record: bool):
    k_total, sigma, lo, hi = _model_grid(model)
    sqdt = math.sqrt(model.dt)
    barrier = math.isfinite(lo) or math.isfinite(hi)

    w = np.zeros(n)
    sup = np.zeros(n)
    inf = np.zeros(n)
    hit = np.full(n, -1, dtype=np.int64)
    active = np.arange(n)
    trace = [np.zeros(1)] if record else None

    k = 0
    while k < k_total and active.size:
        block = min(_TIME_BLOCK, k_total - k)
        incr = gen.standard_normal((active.size, block)) * sqdt
        if sigma is not None:
            incr *= sigma[k:k + block]
        paths = w[active, None] + np.cumsum(incr, axis=1)
        if barrier:
            crossed = (paths <= lo) | (paths >= hi)
            any_cross = crossed.any(axis=1)
            first = np.where(any_cross, crossed.argmax(axis=1), block - 1)
            # freeze each path after its first crossing
            cols = np.arange(block)
            paths = np.where(cols[None, :] <= first[:, None], paths,
                             paths[np.arange(active.size), first][:, None])
        else:
            any_cross = np.zeros(active.size, dtype=bool)
            first = np.full(active.size, block - 1)
        sup[active] = np.maximum(sup[active], paths.max(axis=1))
        inf[active] = np.minimum(inf[active], paths.min(axis=1))
        w[active] = paths[np.arange(active.size), first]
        if record:
            trace.append(paths[0, : first[0] + 1] if any_cross[0] else paths[0])
        hit[active[any_cross]] = k + 1 + first[any_cross]
        active = active[~any_cross]
        k += block

    truncated = np.zeros(n, dtype=bool)
    if barrier:
        truncated[active] = True
    batch = ExtremesBatch(sup, inf, hit, truncated, w.copy())
    return batch, (np.concatenate(trace) if record else None)


def simulate_model(model: MartingaleModel, rng) -> PathRecord:
    """Simulate one grid path of ``model``.

    Barrier models stop at the first grid crossing; if the horizon comes
    first the record is flagged ``truncated`` (no exception).
    """
    batch, values = _run_paths(model, _gen(rng), 1, record=True)
    hit = int(batch.hit[0])
    return PathRecord(
        dt=float(model.dt),
        values=values,
        running_sup=float(values.max()),
        running_inf=float(values.min()),
        hit_index=hit if hit >= 0 else None,
        truncated=bool(batch.truncated[0]),
    )


def simulate_extremes(model: MartingaleModel, rng: RngStream, n: int) -> ExtremesBatch:
    """Extremes of ``n`` independent grid paths; chunk ``j`` of ``PATH_CHUNK``
    paths draws from ``rng.substream(j)``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    parts = []
    for j, start in enumerate(range(0, n, PATH_CHUNK)):
        m = min(PATH_CHUNK, n - start)
        parts.append(_run_paths(model, rng.substream(j).generator(), m, record=False)[0])
    return ExtremesBatch.concat(parts)


# -- Gronwall scenarios -----------------------------------------------------


@dataclass(frozen=True)
class PiecewiseDrift:
    """Deterministic drift ``a(s) = values[j]`` on ``[breaks[j], breaks[j+1])``."""

    breaks: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (0.0,)

    deterministic = True

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.breaks) != len(self.values) or not self.breaks:
            raise ValueError("breaks and values must be non-empty and of equal length")
        if self.breaks[0] != 0.0 or any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError(f"breaks must start at 0 and increase strictly, got {self.breaks}")
        if any(v < 0 for v in self.values):
            raise ValueError("drift values must be nonnegative (psi = 2a >= 0)")

    def grid(self, k: int, dt: float) -> np.ndarray:
        t = np.arange(k) * dt
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right") - 1
        return np.asarray(self.values)[idx]


@dataclass(frozen=True)
class SignFeedbackDrift:
    """Adapted drift ``a(s) = abar * 1{X(s) >= 0}``; ``psi`` is random."""

    abar: float = 1.0

    deterministic = False

    def __post_init__(self):
        if self.abar < 0:
            raise ValueError(f"abar must be nonnegative, got {self.abar}")


@dataclass(frozen=True)
class GronwallScenario:
    """``dX = a X ds + dW`` with ``Z = X**2``, ``psi = 2a``, ``M = 2 int X dW`` and
    ``H(t) = x0**2 + t`` (+ ``h_noise * |W'(t)|`` for an independent ``W'``).

    Ito's formula gives ``Z(t) = int psi Z ds + M(t) + x0**2 + t``, so the
    integral inequality holds with equality when ``h_noise = 0`` and strictly
    otherwise.
    """

    x0: float = 1.0
    drift: Union[PiecewiseDrift, SignFeedbackDrift] = field(default_factory=PiecewiseDrift)
    horizon: float = 1.0
    dt: float = 1e-3
    h_noise: float = 0.0
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if self.h_noise < 0:
            raise ValueError(f"h_noise must be nonnegative, got {self.h_noise}")
        _steps(self.horizon, self.dt, self.step_budget)

    @property
    def deterministic_psi(self) -> bool:
        return self.drift.deterministic

    @property
    def steps(self) -> int:
        return _steps(self.horizon, self.dt, self.step_budget)

    def psi_integral(self) -> float:
        """Rectangle-rule ``int_0^T psi`` for deterministic drift."""
        if not self.deterministic_psi:
            raise ValueError("psi is random for feedback drift")
        return float(np.sum(2.0 * self.drift.grid(self.steps, self.dt)) * self.dt)

    def mean_z(self) -> float:
        """Closed-form ``E Z(T)`` for constant drift: solves ``m' = 2 a m + 1``."""
        if not (isinstance(self.drift, PiecewiseDrift) and len(self.drift.values) == 1):
            raise ValueError("closed form available for constant drift only")
        a, t = self.drift.values[0], self.horizon
        if a == 0.0:
            return self.x0**2 + t
        return self.x0**2 * math.exp(2 * a * t) + math.expm1(2 * a * t) / (2 * a)


@dataclass(frozen=True, eq=False)
class ScenarioPath:
    z: PathRecord
    h: np.ndarray
    l: np.ndarray
    m: np.ndarray
    psi_integral: np.ndarray

    def __iter__(self):
        return iter((self.z, self.h, self.l, self.m, self.psi_integral))


@dataclass
class ScenarioBatch:
    """Per-path summaries at the horizon and pathwise check violations."""

    sup_z: np.ndarray
    z_final: np.ndarray
    hstar_final: np.ndarray
    psi_integral: np.ndarray
    estim_violation: np.ndarray
    sign_violation: np.ndarray
    qv_residual: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sup_z.size)

    @classmethod
    def concat(cls, parts: list["ScenarioBatch"]) -> "ScenarioBatch":
        names = cls.__dataclass_fields__.keys()
        return cls(**{f: np.concatenate([getattr(p, f) for p in parts]) for f in names})


def _scenario_kernel(scn: GronwallScenario, gen: np.random.Generator, n: int, record: bool):
    k_total, dt = scn.steps, scn.dt
    sqdt = math.sqrt(dt)
    det = scn.deterministic_psi
    a_grid = scn.drift.grid(k_total, dt) if det else None
    h0 = scn.x0**2

    x = np.full(n, float(scn.x0))
    psi_int = np.zeros(n)
    m = np.zeros(n)
    l = np.zeros(n)
    w_noise = np.zeros(n)
    qv = np.zeros(n)
    hstar = np.full(n, h0)
    sup_z = x * x
    estim = np.full(n, -np.inf)
    sign = np.full(n, -np.inf)
    if record:
        rec = {key: np.empty(k_total + 1) for key in ("x", "h", "l", "m", "psi")}
        rec["x"][0], rec["h"][0], rec["l"][0], rec["m"][0], rec["psi"][0] = scn.x0, h0, 0.0, 0.0, 0.0

    for k in range(k_total):
        a = a_grid[k] if det else scn.drift.abar * (x >= 0.0)
        dw = gen.standard_normal(n) * sqdt
        dm = 2.0 * x * dw
        l += np.exp(-psi_int) * dm
        m += dm
        qv += dw * dw
        x = x + a * x * dt + dw
        psi_int = psi_int + 2.0 * a * dt
        h = h0 + (k + 1) * dt
        if scn.h_noise:
            w_noise += gen.standard_normal(n) * sqdt
            h = h + scn.h_noise * np.abs(w_noise)
        hstar = np.maximum(hstar, h)
        z = x * x
        np.maximum(sup_z, z, out=sup_z)
        np.maximum(estim, z - np.exp(psi_int) * (l + hstar), out=estim)
        np.maximum(sign, -l - hstar, out=sign)
        if record:
            rec["x"][k + 1], rec["h"][k + 1] = x[0], np.broadcast_to(h, (n,))[0]
            rec["l"][k + 1], rec["m"][k + 1], rec["psi"][k + 1] = l[0], m[0], psi_int[0]

    batch = ScenarioBatch(
        sup_z=sup_z,
        z_final=x * x,
        hstar_final=hstar,
        psi_integral=np.broadcast_to(psi_int, (n,)).copy(),
        estim_violation=np.maximum(estim, 0.0),
        sign_violation=np.maximum(sign, 0.0),
        qv_residual=qv - k_total * dt,
    )
    return batch, (rec if record else None)


def simulate_scenario(scn: GronwallScenario, rng) -> ScenarioPath:
    """One Euler-Maruyama path of the scenario.

    Returns ``(Z, H, L, M, psi_integral)`` on the common grid, where ``L`` is
    the left-point sum of ``exp(-int psi) dM``.
    """
    _, rec = _scenario_kernel(scn, _gen(rng), 1, record=True)
    z = PathRecord.from_values(scn.dt, rec["x"] ** 2)
    return ScenarioPath(z, rec["h"], rec["l"], rec["m"], rec["psi"])


def simulate_scenario_batch(scn: GronwallScenario, rng: RngStream, n: int) -> ScenarioBatch:
    """Summaries of ``n`` scenario paths, chunked over ``rng.substream(j)``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    parts = []
    for j, start in enumerate(range(0, n, PATH_CHUNK)):
        cnt = min(PATH_CHUNK, n - start)
        parts.append(_scenario_kernel(scn, rng.substream(j).generator(), cnt, record=False)[0])
    return ScenarioBatch.concat(parts)
