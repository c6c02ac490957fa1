"""Closed-form quantities: the Burkholder-type constant, the ladder moments used
to derive it, extremal laws, the two counterexample families, and the
coefficients of the stochastic Gronwall bounds.

Every function here is pure and thread-safe.  Exponents may be passed either as
plain floats or as :class:`Exponent` instances; both are validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureError, integrate

__all__ = [
    "Exponent",
    "HolderPair",
    "GeometricLadder",
    "BracketError",
    "QuadratureError",
    "pi_p_over_sin",
    "tail_integral_oracle",
    "burkholder_constant",
    "gamma_objective",
    "gamma_prefactor",
    "optimize_prefactor",
    "ladder_moment",
    "StoppedSupLaw",
    "stopped_sup_law",
    "jump_counterexample_ratio",
    "bound_eins",
    "bound_zwei",
    "bound_drei",
]


@dataclass(frozen=True)
class Exponent:
    """Moment exponent ``p``, restricted to the open unit interval."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 < p < 1.0):
            raise ValueError(f"exponent p must satisfy 0 < p < 1, got {self.p!r}")
        object.__setattr__(self, "p", p)

    def __float__(self) -> float:
        return self.p


def _p(p: float | Exponent) -> float:
    return Exponent(float(p)).p


@dataclass(frozen=True)
class HolderPair:
    """Conjugate exponents with ``1/mu + 1/nu = 1``."""

    mu: float
    nu: float

    def __post_init__(self):
        mu, nu = float(self.mu), float(self.nu)
        if not (mu > 1.0 and nu > 1.0):
            raise ValueError(f"Hölder exponents must exceed 1, got mu={mu}, nu={nu}")
        if abs(1.0 / mu + 1.0 / nu - 1.0) > 1e-12:
            raise ValueError(f"1/mu + 1/nu must equal 1, got {1.0 / mu + 1.0 / nu!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def from_nu(cls, nu: float) -> "HolderPair":
        return cls(nu / (nu - 1.0), nu)

    @classmethod
    def from_mu(cls, mu: float) -> "HolderPair":
        return cls(mu, mu / (mu - 1.0))


@dataclass(frozen=True)
class GeometricLadder:
    """Levels ``a_i = c * gamma**i`` for ``i = 1..depth`` with implicit ``a_0 = 0``."""

    c: float
    gamma: float
    depth: int

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"ladder base c must be positive, got {self.c}")
        if not self.gamma > 1:
            raise ValueError(f"ladder ratio gamma must exceed 1, got {self.gamma}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError(f"ladder depth must be a positive integer, got {self.depth}")

    def levels(self) -> np.ndarray:
        """Array ``[a_0, a_1, ..., a_depth]`` including the leading zero."""
        i = np.arange(1, self.depth + 1, dtype=float)
        return np.concatenate([[0.0], self.c * self.gamma**i])


class BracketError(RuntimeError):
    """No unimodal bracket could be established."""


# x / sin(x) = 1 + x^2/6 + 7x^4/360 + O(x^6)
_SERIES_CUTOFF = 1e-3


def _x_over_sin(x: float) -> float:
    if x < _SERIES_CUTOFF:
        x2 = x * x
        return 1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    return x / math.sin(x)


def pi_p_over_sin(p: float | Exponent) -> float:
    """``pi p / sin(pi p)``, accurate near both ends of (0, 1)."""
    p = _p(p)
    if p <= 0.5:
        return _x_over_sin(math.pi * p)
    # sin(pi p) = sin(pi (1 - p)); 1 - p is exact for p in [1/2, 1)
    return math.pi * p / math.sin(math.pi * (1.0 - p))


def _unit_tail(alpha: float, tol: float) -> float:
    """``int_0^1 du / (1 + u**alpha)``."""
    value, _ = integrate(lambda u: 1.0 / (1.0 + u**alpha), 0.0, 1.0, tol)
    return value


def tail_integral_oracle(p: float | Exponent, tol: float = 1e-10) -> float:
    """Evaluate ``int_0^inf dy / (1 + y**(1/p))`` by quadrature.

    With ``y = t**p`` the integrand becomes ``p t**(p-1) / (1 + t)``.  The range
    is split at ``t = 1`` and ``[1, inf)`` is reflected by ``t -> 1/t``.  Both
    compact pieces still carry an integrable power singularity at the origin,
    which the further substitutions ``u = t**p`` and ``v = s**(1-p)`` remove::

        I = int_0^1 du / (1 + u**(1/p)) + p/(1-p) int_0^1 dv / (1 + v**(1/(1-p)))

    Raises :class:`QuadratureError` if ``tol`` cannot be met.
    """
    p = _p(p)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    weight = p / (1.0 - p)
    head = _unit_tail(1.0 / p, 0.5 * tol)
    tail = _unit_tail(1.0 / (1.0 - p), 0.5 * tol / weight)
    return head + weight * tail


def burkholder_constant(p: float | Exponent) -> float:
    """``c_p = min(4, 1/p) * pi p / sin(pi p)``."""
    p = _p(p)
    return min(4.0, 1.0 / p) * pi_p_over_sin(p)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    return gamma


def _log_gamma(gamma: float) -> float:
    return math.log1p(gamma - 1.0)


def gamma_objective(gamma: float, p: float | Exponent) -> float:
    """``gamma**(2p) / (gamma**p - 1)``; its infimum over gamma > 1 is 4."""
    gamma, p = _check_gamma(gamma), _p(p)
    x = p * _log_gamma(gamma)
    return math.exp(2.0 * x) / math.expm1(x)


def gamma_prefactor(gamma: float, p: float | Exponent) -> float:
    """Coefficient ``(1 - 1/gamma) gamma**(2p) / (gamma**p - 1)`` in front of
    the negative-infimum moment; tends to ``1/p`` as gamma -> 1+."""
    gamma, p = _check_gamma(gamma), _p(p)
    return _prefactor_log(_log_gamma(gamma), p)


def _prefactor_log(lg: float, p: float) -> float:
    # lg = log(gamma) > 0
    return -math.expm1(-lg) * math.exp(2.0 * p * lg) / math.expm1(p * lg)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_LOG_FLOOR = 1e-12
_LOG_CEIL = 700.0


def optimize_prefactor(p: float | Exponent, tol: float = 1e-10) -> tuple[float, float]:
    """Minimise :func:`gamma_prefactor` over gamma > 1.

    Golden-section search in ``x = log(gamma)``, seeded at ``gamma = 2**(1/p)``
    with the bracket widened by factors of 4.  For ``p >= 1/3`` the infimum sits
    at the boundary ``gamma -> 1+`` and the search walks down to a floor of
    ``log(gamma) = 1e-12``, where the prefactor equals ``1/p`` to ~1e-12.

    Returns ``(gamma_star, value)``; ``value`` is the smallest prefactor seen,
    so it never exceeds the seed value ``4 (1 - 2**(-1/p))``.
    """
    p = _p(p)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    f = lambda x: _prefactor_log(x, p)  # noqa: E731

    seen: list[tuple[float, float]] = []

    def ev(x: float) -> float:
        v = f(x)
        seen.append((v, x))
        return v

    mid = math.log(2.0) / p
    lo, hi = mid / 4.0, min(mid * 4.0, _LOG_CEIL)
    f_lo, f_mid, f_hi = ev(lo), ev(mid), ev(hi)
    while f_lo < f_mid:
        if lo <= _LOG_FLOOR:
            break
        hi, f_hi = mid, f_mid
        mid, f_mid = lo, f_lo
        lo = max(lo / 4.0, _LOG_FLOOR)
        f_lo = ev(lo)
    while f_hi < f_mid:
        if hi >= _LOG_CEIL:
            raise BracketError(f"prefactor still decreasing at log(gamma) = {hi}")
        lo, f_lo = mid, f_mid
        mid, f_mid = hi, f_hi
        hi = min(hi * 4.0, _LOG_CEIL)
        f_hi = ev(hi)

    # golden section on [lo, hi]; stop on relative width in x, which keeps the
    # value error quadratic at interior minima and linear (tiny) at the floor
    a, b = lo, hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = ev(x1), ev(x2)
    for _ in range(400):
        if b - a <= tol * max(a, _LOG_FLOOR) or b - a <= _LOG_FLOOR:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = ev(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = ev(x2)
    value, x_star = min(seen)
    return math.exp(x_star), value


def ladder_moment(p: float | Exponent, a_prev: float, a_cur: float) -> float:
    """``E (Y v 0)**p`` for the supremum of Brownian motion between the hitting
    times of ``-a_prev`` and ``-a_cur``:
    ``(a_cur - a_prev) * a_cur**(p-1) * pi p / sin(pi p)``."""
    p = _p(p)
    if not (0.0 <= a_prev < a_cur):
        raise ValueError(f"ladder levels must satisfy 0 <= a_prev < a_cur, got {a_prev}, {a_cur}")
    return (a_cur - a_prev) * a_cur ** (p - 1.0) * pi_p_over_sin(p)


@dataclass(frozen=True)
class StoppedSupLaw:
    """Law of ``A = sup_t W(tau_{-b} ^ t)`` for Brownian motion stopped at ``-b``.

    ``P(A >= a) = b / (a + b)`` (gambler's ruin), a Pareto-type tail with index 1.
    The negative infimum equals ``b`` almost surely.
    """

    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"barrier b must be positive, got {self.b}")

    def tail(self, a):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0):
            raise ValueError("tail is defined for a >= 0")
        out = self.b / (a + self.b)
        return float(out) if out.ndim == 0 else out

    def cdf(self, a):
        a = np.maximum(np.asarray(a, dtype=float), 0.0)
        out = a / (a + self.b)
        return float(out) if out.ndim == 0 else out

    def ppf(self, u):
        """Inverse CDF ``b u / (1 - u)`` on [0, 1)."""
        u = np.asarray(u, dtype=float)
        out = self.b * u / (1.0 - u)
        return float(out) if out.ndim == 0 else out

    def moment(self, p: float | Exponent) -> float:
        """``E A**p = b**p * pi p / sin(pi p)``, finite only for p < 1."""
        p = _p(p)
        return self.b**p * pi_p_over_sin(p)

    def truncated_moment(self, q: float, K: float, tol: float = 1e-10) -> float:
        """``E[(A ^ K)**q]`` for any ``q > 0``.

        Layer-cake form ``int_0^K q a**(q-1) P(A > a) da`` (the atom at ``K`` is
        already counted), evaluated after ``u = a**q``.
        """
        if not q > 0:
            raise ValueError(f"q must be positive, got {q}")
        if not K > 0:
            raise ValueError(f"truncation level K must be positive, got {K}")
        b = self.b
        inv_q = 1.0 / q
        value, _ = integrate(lambda u: b / (b + u**inv_q), 0.0, K**q, tol)
        return value


def stopped_sup_law(b: float = 1.0) -> StoppedSupLaw:
    return StoppedSupLaw(float(b))


def jump_counterexample_ratio(delta: float, p: float | Exponent, q: float) -> float:
    """``(E sup**p)**(1/p) / (E (-inf)**q)**(1/q)`` for the martingale with one
    jump of ``+1`` (probability delta) or ``-delta/(1-delta)``.

    Closed form ``delta**(1/p - 1) * (1 - delta)**((q - 1)/q)``, evaluated in
    log space.
    """
    p = _p(p)
    delta, q = float(delta), float(q)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    log_ratio = (1.0 / p - 1.0) * math.log(delta) + (q - 1.0) / q * math.log1p(-delta)
    return math.exp(log_ratio)


def bound_eins(
    p: float | Exponent,
    pair: HolderPair,
    exp_moment: float,
    hstar_moment: float,
) -> float:
    """Bound on ``E sup Z**p`` for random rate ``psi``.

    ``(c_{p nu} + 1)**(1/nu) * exp_moment**(1/mu) * hstar_moment**(1/nu)`` where
    ``exp_moment = E exp(p mu int psi)`` and ``hstar_moment = E (H*)**(p nu)``.
    """
    p = _p(p)
    if p * pair.nu >= 1.0:
        raise ValueError(f"need p * nu < 1, got p={p}, nu={pair.nu} (p*nu={p * pair.nu})")
    if not exp_moment > 0:
        raise ValueError(f"exp_moment must be positive, got {exp_moment}")
    if hstar_moment < 0:
        raise ValueError(f"hstar_moment must be nonnegative, got {hstar_moment}")
    coeff = (burkholder_constant(p * pair.nu) + 1.0) ** (1.0 / pair.nu)
    return coeff * exp_moment ** (1.0 / pair.mu) * hstar_moment ** (1.0 / pair.nu)


def bound_zwei(p: float | Exponent, psi_integral: float, hstar_p_moment: float) -> float:
    """``(c_p + 1) exp(p int psi) E (H*)**p`` for deterministic ``psi``."""
    p = _p(p)
    if psi_integral < 0 or hstar_p_moment < 0:
        raise ValueError("psi_integral and hstar_p_moment must be nonnegative")
    return (burkholder_constant(p) + 1.0) * math.exp(p * psi_integral) * hstar_p_moment


def bound_drei(psi_integral: float, hstar_mean: float) -> float:
    """``exp(int psi) E H*`` bounding ``E Z(t)`` for deterministic ``psi``."""
    if psi_integral < 0 or hstar_mean < 0:
        raise ValueError("psi_integral and hstar_mean must be nonnegative")
    return math.exp(psi_integral) * hstar_mean
