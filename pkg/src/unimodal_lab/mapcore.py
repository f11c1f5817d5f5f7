"""The symmetric unimodal family ``f(x) = a * (1 - |2x - 1|**alpha)`` on [0, 1].

Every real is a ``gmpy2.mpfr`` at the precision carried by a
:class:`NumericContext`.  Public functions enter that precision themselves;
the underscore methods on :class:`UnimodalMap` assume the caller already did
(they sit in hot loops).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError, NoFixedPoint, PeriodicAttractorSuspected

LEFT, CRIT, RIGHT = "L", "C", "R"


@dataclass(frozen=True)
class NumericContext:
    precision_bits: int = 256
    eq_tolerance: object = None
    horizon_default: int = 10_000

    def __post_init__(self):
        if int(self.precision_bits) < 64:
            raise DomainError("precision_bits must be at least 64")
        object.__setattr__(self, "precision_bits", int(self.precision_bits))
        with self.precise():
            if self.eq_tolerance is None:
                tol = gmpy2.exp2(-(self.precision_bits - 64))
            else:
                tol = mpfr(self.eq_tolerance)
            if tol < gmpy2.exp2(-self.precision_bits + 16):
                raise DomainError("eq_tolerance is finer than the arithmetic noise floor")
        object.__setattr__(self, "eq_tolerance", tol)
        if self.horizon_default < 1:
            raise DomainError("horizon_default must be positive")

    def precise(self):
        return gmpy2.context(precision=self.precision_bits)

    def mpf(self, value):
        with self.precise():
            return mpfr(value)

    @property
    def digits(self) -> int:
        """Decimal digits that the working precision supports."""
        return int(self.precision_bits * math.log10(2))

    def to_str(self, x, digits: int | None = None) -> str:
        with self.precise():
            return sci(mpfr(x), digits or self.digits)


def sci(x, digits: int) -> str:
    """``x`` in scientific notation with ``digits`` significant digits, correctly rounded."""
    if digits < 2:
        raise DomainError("need at least 2 significant digits")
    if not gmpy2.is_finite(x):
        return str(x)
    if x == 0:
        return "0." + "0" * (digits - 1) + "e+00"
    mant, exp, _ = gmpy2.digits(x, 10, digits)
    sign = ""
    if mant[0] == "-":
        sign, mant = "-", mant[1:]
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{'-' if e < 0 else '+'}{abs(e):02d}"


def precise(fn):
    """Run ``fn(m, ...)`` at the precision of the map ``m``."""

    @functools.wraps(fn)
    def wrapper(m, *args, **kwargs):
        with m.ctx.precise():
            return fn(m, *args, **kwargs)

    return wrapper


@dataclass(frozen=True)
class UnimodalMap:
    """Member of the family, fixed by the critical order and the height."""

    alpha: object = 2
    a: object = 1
    ctx: NumericContext = field(default_factory=NumericContext)

    def __post_init__(self):
        with self.ctx.precise():
            alpha = mpfr(self.alpha)
            a = mpfr(self.a)
            if not alpha >= 2:
                raise DomainError(f"critical order must be >= 2, got {alpha}")
            if not (0 < a <= 1):
                raise DomainError(f"height must lie in (0, 1], got {a}")
            object.__setattr__(self, "alpha", alpha)
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "c", mpfr(1) / 2)
            object.__setattr__(self, "sup_deriv", 2 * a * alpha)
            object.__setattr__(self, "_quadratic", alpha == 2)
            object.__setattr__(self, "_inv_alpha", 1 / alpha)

    @property
    def tol(self):
        return self.ctx.eq_tolerance

    @property
    def trusted_horizon(self) -> int:
        """Orbit length after which forward iterates keep fewer than 64 good bits."""
        bits_per_step = max(math.log2(float(self.sup_deriv)), 1e-9)
        return max(int((self.ctx.precision_bits - 64) / bits_per_step), 1)

    # -- raw arithmetic (caller holds the precision context) -------------
    def _f(self, x):
        u = 2 * x - 1
        if self._quadratic:
            return self.a * (1 - u * u)
        return self.a * (1 - abs(u) ** self.alpha)

    def _df(self, x):
        u = 2 * x - 1
        if u == 0:
            return mpfr(0)
        if self._quadratic:
            return -4 * self.a * u
        s = 1 if u > 0 else -1
        return -2 * self.a * self.alpha * s * abs(u) ** (self.alpha - 1)

    def _inv(self, z, side):
        """Preimage of ``z`` on the ``side`` branch; requires ``z <= a``."""
        w = 1 - z / self.a
        if w < 0:
            if w > -self.tol:
                w = mpfr(0)
            else:
                raise DomainError(f"{z} exceeds the critical value and has no preimage")
        r = gmpy2.sqrt(w) if self._quadratic else w ** self._inv_alpha
        return (1 - r) / 2 if side == LEFT else (1 + r) / 2

    def _pullback(self, z, word):
        """Point ``y`` with ``f^len(word)(y) = z`` whose itinerary is ``word``."""
        for side in reversed(word):
            z = self._inv(z, side)
        return z

    def _side(self, y):
        if y < self.c - self.tol:
            return LEFT
        if y > self.c + self.tol:
            return RIGHT
        return CRIT

    def _check_domain(self, x):
        if x < -self.tol or x > 1 + self.tol:
            raise DomainError(f"point {x} lies outside [0, 1]")


@precise
def eval_map(m: UnimodalMap, x):
    x = mpfr(x)
    m._check_domain(x)
    return m._f(x)


@precise
def deriv(m: UnimodalMap, x):
    x = mpfr(x)
    m._check_domain(x)
    return m._df(x)


@precise
def tau(m: UnimodalMap, x):
    """Involution ``x -> 1 - x``; swaps the two preimages of every value."""
    x = mpfr(x)
    m._check_domain(x)
    return 1 - x


@precise
def orbit(m: UnimodalMap, x, n: int) -> list:
    if n < 0:
        raise DomainError("orbit length must be non-negative")
    x = mpfr(x)
    m._check_domain(x)
    out = [x]
    for _ in range(n):
        x = m._f(x)
        out.append(x)
    return out


@precise
def critical_orbit(m: UnimodalMap, n: int) -> list:
    """``[c, c_1, ..., c_n]``."""
    return orbit(m, m.c, n)


@precise
def inverse_branch(m: UnimodalMap, z, side: str):
    return m._inv(mpfr(z), side)


@precise
def pullback(m: UnimodalMap, z, word):
    return m._pullback(mpfr(z), word)


@precise
def reversing_fixed_point(m: UnimodalMap):
    """Fixed point in (c, 1]; exists iff ``f(c) > c``."""
    if not m.a > m.c:
        raise NoFixedPoint(f"height {m.a} <= 1/2 leaves no fixed point right of c")
    if m._quadratic:
        # 4a p (1 - p) = p
        return 1 - 1 / (4 * m.a)
    lo, hi = m.c, mpfr(1)
    while True:
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            return mid
        if m._f(mid) > mid:
            lo = mid
        else:
            hi = mid


@dataclass(frozen=True)
class AdmissibilityReport:
    passed: bool
    max_schwarzian: object
    argmax: object
    unimodal: bool
    samples: int
    reasons: tuple = ()


def _schwarzian(m, x):
    u = 2 * x - 1
    s = 1 if u > 0 else -1
    au = abs(u)
    al = m.alpha
    d1 = -2 * m.a * al * s * au ** (al - 1)
    d2 = -4 * m.a * al * (al - 1) * au ** (al - 2)
    d3 = -8 * m.a * al * (al - 1) * (al - 2) * s * au ** (al - 3)
    return d3 / d1 - mpfr(1.5) * (d2 / d1) ** 2


@precise
def admissibility_check(m: UnimodalMap, sample_count: int) -> AdmissibilityReport:
    """Sample the Schwarzian derivative and the derivative sign pattern."""
    if sample_count < 3:
        raise DomainError("admissibility needs at least 3 samples")
    worst, worst_x = None, None
    unimodal = True
    reasons = []
    for k in range(1, sample_count + 1):
        x = mpfr(k) / (sample_count + 1)
        if abs(x - m.c) <= m.tol:
            continue
        d = m._df(x)
        if (x < m.c and not d > 0) or (x > m.c and not d < 0):
            unimodal = False
            reasons.append(f"derivative sign wrong at {float(x):.6g}")
        sf = _schwarzian(m, x)
        if worst is None or sf > worst:
            worst, worst_x = sf, x
    if not worst < 0:
        reasons.append(f"SchwarzianPositive({float(worst_x):.6g})")
    return AdmissibilityReport(
        passed=bool(worst < 0 and unimodal),
        max_schwarzian=worst,
        argmax=worst_x,
        unimodal=unimodal,
        samples=sample_count,
        reasons=tuple(reasons),
    )


@precise
def detect_periodic_attractor(m: UnimodalMap, transient: int = 2000, max_period: int = 64):
    """Raise :class:`PeriodicAttractorSuspected` if the critical orbit settles on a cycle.

    Works in double precision on purpose: an attracting cycle is stable, so
    rounding cannot hide it, while a chaotic orbit never closes up.
    """
    a, al = float(m.a), float(m.alpha)

    def f(x):
        return a * (1 - abs(2 * x - 1) ** al)

    def df(x):
        u = 2 * x - 1
        return -2 * a * al * math.copysign(abs(u) ** (al - 1), u) if u else 0.0

    x = 0.5
    for _ in range(transient):
        x = f(x)
    base = x
    y = x
    for p in range(1, max_period + 1):
        y = f(y)
        if abs(y - base) < 1e-10:
            mult, z = 1.0, base
            for _ in range(p):
                mult *= df(z)
                z = f(z)
            if abs(mult) < 1:
                raise PeriodicAttractorSuspected(p, abs(mult))
            return None
    return None
