"""Itineraries, maximal monotone branches of iterates, distortion and Koebe space."""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import (
    CriticalOnOrbit,
    DegenerateInterval,
    DomainError,
    NotMonotoneOnCore,
    NotNested,
)
from .mapcore import CRIT, LEFT, RIGHT, UnimodalMap, precise


def _at_least(x):
    """Context with at least the precision of ``x``; guards arithmetic done outside ``precise``."""
    bits = max(getattr(x, "precision", 0), gmpy2.get_context().precision)
    return gmpy2.context(gmpy2.get_context(), precision=bits)


@dataclass(frozen=True)
class Interval:
    lo: object
    hi: object
    lo_open: bool = True
    hi_open: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DegenerateInterval(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def hull(cls, *points, open_ends=True):
        return cls(min(points), max(points), open_ends, open_ends)

    @property
    def length(self):
        with _at_least(self.lo):
            return self.hi - self.lo

    @property
    def mid(self):
        with _at_least(self.lo):
            return (self.lo + self.hi) / 2

    def contains_point(self, x, tol=0):
        """Strict membership shrunk by ``tol`` for open ends, widened for closed ones."""
        if tol:
            with _at_least(self.lo):
                return self._contains_point(x, tol)
        return self._contains_point(x, tol)

    def _contains_point(self, x, tol):
        lo_ok = x > self.lo + tol if self.lo_open else x >= self.lo - tol
        hi_ok = x < self.hi - tol if self.hi_open else x <= self.hi + tol
        return lo_ok and hi_ok

    def contains(self, other: "Interval", tol=0) -> bool:
        if not tol:
            return other.lo >= self.lo and other.hi <= self.hi
        with _at_least(self.lo):
            return other.lo >= self.lo - tol and other.hi <= self.hi + tol

    def overlap(self, other: "Interval"):
        with _at_least(self.lo):
            return min(self.hi, other.hi) - max(self.lo, other.lo)

    def mirrored(self) -> "Interval":
        with _at_least(self.lo):
            return Interval(1 - self.hi, 1 - self.lo, self.hi_open, self.lo_open)

    def as_floats(self):
        return float(self.lo), float(self.hi)


@dataclass(frozen=True)
class Branch:
    domain: Interval
    n: int
    itinerary: str
    orientation: int
    image: Interval | None = None


@dataclass(frozen=True)
class MonotoneExtension:
    core: Interval
    ext: Interval
    n: int
    image: Interval
    core_image: Interval
    orientation: int = 1


@dataclass(frozen=True)
class DistortionEstimate:
    K: object
    grid: int
    converged: bool


@precise
def itinerary(m: UnimodalMap, x, n: int) -> str:
    """Sides of ``x, f(x), ..., f^(n-1)(x)``; stops after the first ``C``."""
    if n < 1:
        raise DomainError("itinerary length must be at least 1")
    y = mpfr(x)
    word = []
    for _ in range(n):
        s = m._side(y)
        word.append(s)
        if s == CRIT:
            break
        y = m._f(y)
    return "".join(word)


def _sweep(m, x, n, known_word=None):
    """Forward sweep for the maximal monotone branch of ``f^n`` around ``x``.

    Tracks the domain ``[lo, hi]`` with the values ``f^j(lo), f^j(hi)``; when
    ``c`` falls strictly inside the current image the domain is cut at the
    preimage of ``c`` on the side of ``f^j(x)``.  With ``known_word`` the sides
    are read from it instead of from the forward orbit of ``x``.
    """
    lo, hi = mpfr(0), mpfr(1)
    vlo, vhi = lo, hi
    orient = 1
    word = []
    y = x
    c, tol = m.c, m.tol
    for j in range(n):
        s = known_word[j] if known_word is not None else m._side(y)
        if s == CRIT:
            raise CriticalOnOrbit(j)
        ilo, ihi = (vlo, vhi) if vlo < vhi else (vhi, vlo)
        if ilo < c - tol and ihi > c + tol:
            cut = m._pullback(c, word)
            # keep the part of the image on the side of f^j(x)
            keep_low_image = s == LEFT
            if (orient > 0) == keep_low_image:
                hi, vhi = cut, c
            else:
                lo, vlo = cut, c
        word.append(s)
        if s != LEFT:
            orient = -orient
        vlo, vhi = m._f(vlo), m._f(vhi)
        if known_word is None:
            y = m._f(y)
    return lo, hi, vlo, vhi, "".join(word), orient


@precise
def monotone_branch_at(m: UnimodalMap, x, n: int) -> Branch:
    if n < 0:
        raise DomainError("iterate count must be non-negative")
    x = mpfr(x)
    m._check_domain(x)
    lo, hi, vlo, vhi, word, orient = _sweep(m, x, n)
    return Branch(
        domain=Interval(lo, hi, False, False),
        n=n,
        itinerary=word,
        orientation=orient,
        image=Interval.hull(vlo, vhi, open_ends=False),
    )


@precise
def monotone_extension(m: UnimodalMap, core: Interval, n: int) -> MonotoneExtension:
    if n == 0:
        whole = Interval(mpfr(0), mpfr(1), False, False)
        return MonotoneExtension(core, whole, 0, whole, core, 1)
    try:
        b = monotone_branch_at(m, core.mid, n)
    except CriticalOnOrbit as err:
        raise NotMonotoneOnCore(f"midpoint of core hits c at step {err.step}") from err
    if not b.domain.contains(core, m.tol):
        raise NotMonotoneOnCore("core is not inside one monotone branch")
    lo_img = _iterate(m, core.lo, n)
    hi_img = _iterate(m, core.hi, n)
    return MonotoneExtension(
        core=core,
        ext=b.domain,
        n=n,
        image=b.image,
        core_image=Interval.hull(lo_img, hi_img),
        orientation=b.orientation,
    )


@precise
def branch_of_word(m: UnimodalMap, word: str) -> Branch:
    """Maximal monotone branch of ``f^len(word)`` whose points follow ``word``."""
    lo, hi, vlo, vhi, w, orient = _sweep(m, None, len(word), word)
    return Branch(Interval(lo, hi, False, False), len(word), w, orient,
                  Interval.hull(vlo, vhi, open_ends=False))


@precise
def monotone_branches(m: UnimodalMap, n: int) -> list:
    """All maximal monotone branches of ``f^n``, left to right.

    Each level splits the pieces whose image straddles ``c``; the cut points
    are exact preimages of ``c``.
    """
    if n < 0:
        raise DomainError("iterate count must be non-negative")
    c, tol = m.c, m.tol
    level = [(mpfr(0), mpfr(1), mpfr(0), mpfr(1), "", 1)]
    for _ in range(n):
        nxt = []
        for lo, hi, vlo, vhi, word, orient in level:
            ilo, ihi = (vlo, vhi) if vlo < vhi else (vhi, vlo)
            if ilo < c - tol and ihi > c + tol:
                cut = m._pullback(c, word)
                pieces = [(lo, cut, vlo, c), (cut, hi, c, vhi)]
            else:
                pieces = [(lo, hi, vlo, vhi)]
            for plo, phi, pvlo, pvhi in pieces:
                side = LEFT if pvlo + pvhi < 2 * c else RIGHT
                o = orient if side == LEFT else -orient
                nxt.append((plo, phi, m._f(pvlo), m._f(pvhi), word + side, o))
        level = nxt
    return [
        Branch(Interval(lo, hi, False, False), n, word, orient,
               Interval.hull(vlo, vhi, open_ends=False))
        for lo, hi, vlo, vhi, word, orient in level
    ]


def _iterate(m, x, n):
    for _ in range(n):
        x = m._f(x)
    return x


def _abs_deriv_iter(m, x, n):
    d = mpfr(1)
    for _ in range(n):
        d *= m._df(x)
        x = m._f(x)
    return abs(d)


@precise
def deriv_iter(m: UnimodalMap, x, n: int):
    """Chain-rule product of ``Df`` along the first ``n`` orbit points of ``x``."""
    if n < 0:
        raise DomainError("iterate count must be non-negative")
    x = mpfr(x)
    d = mpfr(1)
    for _ in range(n):
        d *= m._df(x)
        x = m._f(x)
    return d


def _lobatto(lo, hi, g, k):
    return lo + (hi - lo) * (1 - gmpy2.cos(gmpy2.const_pi() * k / g)) / 2


@precise
def estimate_distortion(
    m: UnimodalMap, core: Interval, n: int, grid: int = 8, max_grid: int = 4096, rel_tol=0.01
) -> DistortionEstimate:
    """max/min of ``|Df^n|`` on Lobatto nodes, doubling until the ratio settles.

    Lobatto nodes cluster at the endpoints, which is where the extremes of a
    monotone branch with negative Schwarzian sit.
    """
    if grid < 2:
        raise DomainError("grid must be at least 2")
    if core.length < m.tol:
        raise DegenerateInterval("interval shorter than eq_tolerance")
    if n == 0:
        return DistortionEstimate(mpfr(1), grid, True)
    monotone_extension(m, core, n)
    g = grid
    values = [_abs_deriv_iter(m, _lobatto(core.lo, core.hi, g, k), n) for k in range(g + 1)]
    prev = None
    while True:
        lo_v, hi_v = min(values), max(values)
        K = hi_v / lo_v if lo_v > 0 else mpfr("inf")
        if prev is not None and gmpy2.is_finite(K) and abs(K - prev) < rel_tol * prev:
            return DistortionEstimate(max(K, mpfr(1)), g, True)
        if g * 2 > max_grid:
            return DistortionEstimate(max(K, mpfr(1)), g, False)
        prev = K
        fresh = [
            _abs_deriv_iter(m, _lobatto(core.lo, core.hi, 2 * g, 2 * k + 1), n) for k in range(g)
        ]
        values = values + fresh
        g *= 2


def distortion_estimate(m: UnimodalMap, core: Interval, n: int, grid: int = 8):
    return estimate_distortion(m, core, n, grid).K


def scaled_factor(outer: Interval, inner: Interval, tol=0):
    """Largest ``delta`` such that ``outer`` is a delta-scaled neighbourhood of ``inner``."""
    with _at_least(inner.lo):
        if inner.lo < outer.lo - tol or inner.hi > outer.hi + tol:
            raise NotNested("inner interval sticks out of the outer one")
        gap = min(inner.lo - outer.lo, outer.hi - inner.hi)
        if gap < 0:
            gap = gap * 0
        return gap / inner.length


def koebe_bound(delta):
    """Distortion bound ``((1 + delta) / delta)**2`` for negative-Schwarzian branches."""
    if not delta > 0:
        raise DomainError("Koebe space must be positive")
    return ((1 + delta) / delta) ** 2
