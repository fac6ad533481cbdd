"""Numerical checks of convergence conditions and parameter thresholds.

Everything here is arithmetic on closed-form expressions, evaluated with
``mpmath`` at 50 significant digits; pass/fail decisions are additionally
confirmed with interval arithmetic so rounding cannot flip them.

* Loop-polymer convergence: ``sum_k n_k (e^c/gamma)^k`` over exact loop counts
  plus the geometric tail ``t^(K+2) / (1 - t^2)`` with ``t = 2 e^c / gamma``,
  compared with ``c``.
* High-temperature convergence: ``sum_k m_k u^k`` over exact even-set counts
  plus ``(5u)^(K+1) / (5 (1 - 5u))`` with ``u = |z| e^(5a)``, compared with
  ``a``.
* Compression thresholds on ``alpha`` in the large-``gamma`` and
  near-one-``gamma`` regimes, the separation inequality in ``(alpha, beta,
  delta, gamma)``, and the integration window for ``gamma`` in terms of
  ``epsilon`` and ``delta``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Literal, Mapping

from mpmath import iv, mp, mpf

PRECISION_DIGITS = 50

#: Exact loop counts n_6..n_14: the five-term truncation with the tail from k = 16.
PROOF_LOOP_COUNTS: dict[int, int] = {6: 2, 8: 0, 10: 10, 12: 8, 14: 56}
#: Default exact terms: every count the loop enumerator verifies (through
#: k = 16), so the tail starts at k = 18.  The bound stays valid and is tighter.
LOOP_COUNTS: dict[int, int] = {**PROOF_LOOP_COUNTS, 16: 96}
#: Exact connected even-set counts m_3..m_5 used by the high-temperature bound.
EVEN_SET_COUNTS: dict[int, int] = {3: 2, 4: 4, 5: 10}

LOOP_C = mpf("1e-4")
HT_A = mpf("1e-5")
NEAR_ONE_LOW = mpf(79) / 81
NEAR_ONE_HIGH = mpf(81) / 79


def _mp(x) -> mpf:
    return mpf(repr(x)) if isinstance(x, float) else mpf(x)


def _iv(x):
    return iv.mpf(repr(x)) if isinstance(x, float) else iv.mpf(x)


@dataclass(frozen=True)
class KPLoopCheck:
    gamma: float
    c: float
    lhs: float
    passed: bool
    tail_valid: bool
    terms_through: int
    decided_by_interval: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class KPHighTempCheck:
    z: float
    a: float
    lhs: float
    passed: bool
    tail_valid: bool
    terms_through: int
    decided_by_interval: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _loop_lhs(ctx, gamma, c, counts: Mapping[int, int]):
    r = ctx.exp(c) / gamma
    t = 2 * ctx.exp(c) / gamma
    top = max(counts)
    total = sum(counts[k] * r ** k for k in sorted(counts))
    return total + t ** (top + 2) / (1 - t ** 2)


def kp_loop_check(gamma, c, counts: Mapping[int, int] | None = None) -> KPLoopCheck:
    """Evaluate the loop-polymer convergence bound and compare with ``c``.

    ``counts`` defaults to :data:`LOOP_COUNTS` (exact through ``k = 16``);
    pass :data:`PROOF_LOOP_COUNTS` for the five-term truncation.  The tail
    ``t^(K+2) / (1 - t^2)`` starts after the largest exact term ``K``.  It
    needs ``gamma > 2 e^c``; otherwise the check is reported as not passed
    with ``tail_valid = False``.
    """
    counts = dict(LOOP_COUNTS if counts is None else counts)
    if gamma <= 0 or c <= 0:
        raise ValueError("gamma and c must be positive")
    with mp.workdps(PRECISION_DIGITS):
        g, cc = _mp(gamma), _mp(c)
        valid = g > 2 * mp.exp(cc)
        if not valid:
            return KPLoopCheck(float(gamma), float(c), float("inf"), False, False, max(counts), False)
        lhs = _loop_lhs(mp, g, cc, counts)
    iv.prec = 4 * PRECISION_DIGITS
    box = _loop_lhs(iv, _iv(gamma), _iv(c), counts)
    ok_iv = box.b <= _iv(c).a
    fail_iv = box.a > _iv(c).b
    return KPLoopCheck(float(gamma), float(c), float(lhs), bool(lhs <= cc and ok_iv), True,
                       max(counts), bool(ok_iv or fail_iv))


def _ht_lhs(ctx, z, a, counts: Mapping[int, int]):
    u = abs(z) * ctx.exp(5 * a)
    top = max(counts)
    total = sum(counts[k] * u ** k for k in sorted(counts))
    return total + (5 * u) ** (top + 1) / (5 * (1 - 5 * u))


def kp_ht_check(z, a, counts: Mapping[int, int] | None = None) -> KPHighTempCheck:
    """Evaluate the high-temperature convergence bound and compare with ``a``.

    The tail uses ``m_k <= 5^(k-1)`` and needs ``5 |z| e^(5a) < 1``.
    """
    counts = dict(EVEN_SET_COUNTS if counts is None else counts)
    if not abs(z) < 1:
        raise ValueError("|z| must be below 1")
    if a <= 0:
        raise ValueError("a must be positive")
    with mp.workdps(PRECISION_DIGITS):
        zz, aa = _mp(z), _mp(a)
        valid = 5 * abs(zz) * mp.exp(5 * aa) < 1
        if not valid:
            return KPHighTempCheck(float(z), float(a), float("inf"), False, False, max(counts), False)
        lhs = _ht_lhs(mp, zz, aa, counts)
    iv.prec = 4 * PRECISION_DIGITS
    box = _ht_lhs(iv, _iv(abs(z)), _iv(a), counts)
    ok_iv = box.b <= _iv(a).a
    fail_iv = box.a > _iv(a).b
    return KPHighTempCheck(float(z), float(a), float(lhs), bool(lhs <= aa and ok_iv), True,
                           max(counts), bool(ok_iv or fail_iv))


def z_of_gamma(gamma) -> float:
    """High-temperature variable ``(gamma - 1) / (gamma + 1)``."""
    return (gamma - 1) / (gamma + 1)


# -- thresholds ---------------------------------------------------------------


Regime = Literal["large_gamma", "near_one"]


def compression_alpha_threshold(lam, gamma, regime: Regime = "large_gamma",
                                c=None, a=None) -> float | None:
    """Smallest ``alpha`` (exclusive) the compression results guarantee.

    ``large_gamma``: needs ``gamma > 4^(5/4)`` and
    ``lam*gamma > 2(2+sqrt2) e^(3c)``; returns
    ``ln(e^(3c) lam gamma^2) / ln(lam gamma / (2(2+sqrt2) e^(3c)))``.

    ``near_one``: needs ``79/81 < gamma < 81/79`` and
    ``lam(gamma+1) > 2(2+sqrt2) e^(3a)``; returns
    ``ln(lam(gamma+1) / (2 e^(-3a) 79/81)) / ln(lam(gamma+1) / (2(2+sqrt2) e^(3a)))``.

    ``None`` when the regime's preconditions fail.
    """
    with mp.workdps(PRECISION_DIGITS):
        lam_, g = _mp(lam), _mp(gamma)
        if regime == "large_gamma":
            cc = LOOP_C if c is None else _mp(c)
            base = 2 * (2 + mp.sqrt(2)) * mp.exp(3 * cc)
            if not (g > mpf(4) ** mpf(1.25) and lam_ * g > base):
                return None
            return float(mp.log(mp.exp(3 * cc) * lam_ * g ** 2) / mp.log(lam_ * g / base))
        if regime == "near_one":
            aa = HT_A if a is None else _mp(a)
            base = 2 * (2 + mp.sqrt(2)) * mp.exp(3 * aa)
            if not (NEAR_ONE_LOW < g < NEAR_ONE_HIGH and lam_ * (g + 1) > base):
                return None
            num = mp.log(lam_ * (g + 1) / (2 * mp.exp(-3 * aa) * NEAR_ONE_LOW))
            return float(num / mp.log(lam_ * (g + 1) / base))
    raise ValueError(f"unknown regime {regime!r}")


def _bridge_exponent(delta) -> mpf:
    return (1 + 3 * delta) / (4 * delta)


def separation_log_lhs(alpha, beta, delta, gamma, bridge_exponent=None) -> mpf:
    """Natural log of ``3^x 4^b gamma^(x-1)`` with ``x = 2 sqrt3 alpha / beta``
    and ``b = (1 + 3 delta) / (4 delta)`` unless ``bridge_exponent`` is given."""
    with mp.workdps(PRECISION_DIGITS):
        al, be, de, g = _mp(alpha), _mp(beta), _mp(delta), _mp(gamma)
        b = _bridge_exponent(de) if bridge_exponent is None else _mp(bridge_exponent)
        x = 2 * mp.sqrt(3) * al / be
        return x * mp.log(3) + b * mp.log(4) + (x - 1) * mp.log(g)


def separation_condition(alpha, beta, delta, gamma) -> bool:
    """Whether ``3^x 4^((1+3delta)/(4delta)) gamma^(x-1) < 1`` with
    ``x = 2 sqrt3 alpha / beta``; requires ``beta > 2 sqrt3 alpha`` and
    ``0 < delta < 1/2``."""
    with mp.workdps(PRECISION_DIGITS):
        if not _mp(beta) > 2 * mp.sqrt(3) * _mp(alpha):
            raise ValueError("beta must exceed 2*sqrt(3)*alpha")
        if not 0 < _mp(delta) < mpf(1) / 2:
            raise ValueError("delta must lie in (0, 1/2)")
        if not _mp(gamma) > 0:
            raise ValueError("gamma must be positive")
        return bool(separation_log_lhs(alpha, beta, delta, gamma) < 0)


def separation_beta_threshold(alpha, delta, gamma, bridge_exponent=None) -> float | None:
    """The ``beta`` at which the separation inequality switches to true.

    Solves ``x (ln 3 + ln gamma) = ln gamma - b ln 4`` for
    ``x = 2 sqrt3 alpha / beta``.  ``None`` when no ``beta`` works (the
    right-hand side is not positive).
    """
    with mp.workdps(PRECISION_DIGITS):
        al, de, g = _mp(alpha), _mp(delta), _mp(gamma)
        b = _bridge_exponent(de) if bridge_exponent is None else _mp(bridge_exponent)
        rhs = mp.log(g) - b * mp.log(4)
        if rhs <= 0 or g <= 1:
            return None
        x = rhs / (mp.log(3) + mp.log(g))
        return float(2 * mp.sqrt(3) * al / x)


def min_separation_delta(gamma) -> float | None:
    """Infimum of ``delta`` with ``4^((1+3delta)/(4delta)) < gamma``."""
    with mp.workdps(PRECISION_DIGITS):
        g = _mp(gamma)
        k = mp.log(g) / mp.log(4)  # need (1 + 3 delta) / (4 delta) < k
        if 4 * k - 3 <= 0:
            return None
        d = 1 / (4 * k - 3)
        return float(d) if d < mpf(1) / 2 else None


# -- integration window ---------------------------------------------------------


@dataclass(frozen=True)
class EpsilonWindow:
    """Range of ``epsilon`` for which ``gamma`` lies strictly inside
    ``((eps/(1-eps))^w, ((1-eps)/eps)^w)`` with ``w = (eps - delta')/11``."""

    gamma: float
    delta: float
    eps_low: float
    eps_high: float
    eps_best: float
    gamma_upper_at_best: float

    def to_dict(self) -> dict:
        return asdict(self)


def _delta_prime(delta) -> mpf:
    return delta / (1 - 2 * delta)


def _log_upper(eps, dp) -> mpf:
    return (eps - dp) / 11 * mp.log((1 - eps) / eps)


def integration_gamma_bounds(eps, delta) -> tuple[float, float]:
    """Lower and upper bounds on ``gamma`` for a given ``epsilon``."""
    with mp.workdps(PRECISION_DIGITS):
        lu = _log_upper(_mp(eps), _delta_prime(_mp(delta)))
        return float(mp.exp(-lu)), float(mp.exp(lu))


def integration_optimum(delta=0.0) -> tuple[float, float]:
    """``(eps*, upper(eps*))`` maximizing the upper bound on ``gamma``.

    ``delta = 0`` is the limiting case of arbitrarily small ``delta``.
    """
    with mp.workdps(PRECISION_DIGITS):
        dp = _delta_prime(_mp(delta))
        lo, hi = dp + mpf("1e-30"), mpf(1) / 2
        f = lambda e: -_log_upper(e, dp)  # noqa: E731
        # golden-section search on the unimodal objective
        phi = (mp.sqrt(5) - 1) / 2
        a, b = lo, hi
        x1, x2 = b - phi * (b - a), a + phi * (b - a)
        f1, f2 = f(x1), f(x2)
        for _ in range(200):
            if f1 < f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - phi * (b - a)
                f1 = f(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + phi * (b - a)
                f2 = f(x2)
        eps = (a + b) / 2
        return float(eps), float(mp.exp(_log_upper(eps, dp)))


def integration_condition(gamma, delta, step: float = 1e-4) -> EpsilonWindow | None:
    """Search ``epsilon`` in ``(delta', 1/2)`` where ``gamma`` is feasible.

    A grid with the given step locates feasible ``epsilon``; the window's
    ends are then refined by bisection.  ``delta = 0`` is accepted as the
    small-``delta`` limit.  Returns ``None`` when no grid point is feasible.
    """
    if not 0 <= delta < 0.25:
        raise ValueError("delta must lie in [0, 1/4)")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    with mp.workdps(PRECISION_DIGITS):
        dp = _delta_prime(_mp(delta))
        target = abs(mp.log(_mp(gamma)))
        ok = lambda e: _log_upper(e, dp) > target  # noqa: E731
        n = int((mpf(1) / 2 - dp) / step)
        grid = [dp + (i + 1) * (mpf(1) / 2 - dp) / (n + 1) for i in range(n)]
        feas = [e for e in grid if ok(e)]
        if not feas:
            return None

        def refine(inside, outside):
            for _ in range(100):
                mid = (inside + outside) / 2
                if ok(mid):
                    inside = mid
                else:
                    outside = mid
            return inside

        i_lo = grid.index(feas[0])
        i_hi = grid.index(feas[-1])
        lo = refine(feas[0], grid[i_lo - 1] if i_lo > 0 else dp)
        hi = refine(feas[-1], grid[i_hi + 1] if i_hi + 1 < len(grid) else mpf(1) / 2)
    best, upper = integration_optimum(delta)
    return EpsilonWindow(float(gamma), float(delta), float(lo), float(hi), best, upper)


@dataclass(frozen=True)
class RegimeReport:
    lam: float
    gamma: float
    separation_alpha_min: float | None
    integration_alpha_min: float | None
    integration_window: EpsilonWindow | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["integration_window"] = None if self.integration_window is None else self.integration_window.to_dict()
        return d


def regime_report(lam, gamma, delta: float = 0.0) -> RegimeReport:
    """Which proven regimes apply to ``(lam, gamma)``."""
    return RegimeReport(
        float(lam), float(gamma),
        compression_alpha_threshold(lam, gamma, "large_gamma"),
        compression_alpha_threshold(lam, gamma, "near_one"),
        integration_condition(gamma, delta),
    )


def report_json(obj) -> str:
    return json.dumps(obj.to_dict() if hasattr(obj, "to_dict") else obj, indent=2)
