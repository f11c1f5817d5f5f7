"""Nice points, first-return and first-entry structures to the windows ``V_x``.

``V_x`` is the open interval between ``x`` and ``1 - x``.  A point is nice when
its forward orbit never enters ``V_x``.  The components of the first-return
and first-entry domains are enumerated by a forward partition: every piece
carries its itinerary, so its endpoints are exact pullbacks of ``dV_x`` through
the inverse branches of ``f``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum

import gmpy2
from gmpy2 import mpfr

from .branches import Interval, _at_least
from .errors import DomainError, NoFixedPoint, NoReturn
from .mapcore import CRIT, LEFT, RIGHT, UnimodalMap, precise, reversing_fixed_point


class NiceKind(str, Enum):
    NICE_CERTIFIED = "NICE_CERTIFIED"
    NICE_UPTO = "NICE_UPTO"
    NOT_NICE = "NOT_NICE"


@dataclass(frozen=True)
class NiceVerdict:
    kind: NiceKind
    step: int

    @property
    def nice(self) -> bool:
        return self.kind is not NiceKind.NOT_NICE


@dataclass(frozen=True)
class Candidate:
    point: object
    word: str

    @property
    def depth(self) -> int:
        return len(self.word)


@dataclass(frozen=True)
class Component:
    interval: Interval
    time: int
    itinerary: str = ""


@dataclass(frozen=True)
class CentralDomain:
    U: Interval
    psi: object
    time: int
    boundary_image: object
    critical_image: object
    word: str


@dataclass(frozen=True)
class ReturnStructure:
    x: object
    V: Interval
    components: tuple
    U: Interval | None
    psi: object
    central_time: int | None
    coverage: object
    max_time: int
    min_width: object

    def component_at(self, y):
        return _locate(self.components, y)


@dataclass(frozen=True)
class TransferStructure:
    x: object
    V: Interval
    components: tuple
    S: Interval | None
    S_time: int | None
    coverage: object
    max_time: int
    min_width: object
    S_onto: bool = True

    def component_at(self, y):
        return _locate(self.components, y)


def _locate(components, y):
    los = [comp.interval.lo for comp in components]
    k = bisect.bisect_right(los, y) - 1
    if k >= 0 and components[k].interval.contains_point(y):
        return components[k]
    return None


def _window(m, x):
    if abs(x - m.c) <= m.tol:
        raise DomainError("the window of the critical point is empty")
    lo, hi = (x, 1 - x) if x < m.c else (1 - x, x)
    return Interval(lo, hi, True, True)


@precise
def window(m: UnimodalMap, x) -> Interval:
    """The symmetric open neighbourhood ``V_x`` of ``c`` bounded by ``x`` and ``1 - x``."""
    return _window(m, mpfr(x))


def _inside(V, y, tol):
    return V.lo + tol < y < V.hi - tol


@precise
def first_entry_time(m: UnimodalMap, y, V: Interval, horizon: int, first_return: bool = False):
    """Least ``k`` (``k >= 1`` for returns) with ``f^k(y)`` in the open window, else ``None``."""
    if horizon < 0:
        raise DomainError("horizon must be non-negative")
    y = mpfr(y)
    k = 0
    if first_return:
        y = m._f(y)
        k = 1
    while k <= horizon:
        if _inside(V, y, m.tol):
            return k
        y = m._f(y)
        k += 1
    return None


def _fixed_points(m):
    pts = [mpfr(0)]
    try:
        pts.append(reversing_fixed_point(m))
    except NoFixedPoint:
        pass
    return pts


@precise
def is_nice(m: UnimodalMap, x, horizon: int) -> NiceVerdict:
    """Check ``f^i(x)`` stays out of open ``V_x``; certify when the orbit lands on a fixed point.

    Landing is accepted within ``eq_tolerance * max(1, |Df^i(x)|)``, the
    forward error budget of the iterate.
    """
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    x = mpfr(x)
    V = _window(m, x)
    fixed = _fixed_points(m)
    y, d = x, mpfr(1)
    for i in range(0, horizon + 1):
        if i > 0 and _inside(V, y, m.tol):
            return NiceVerdict(NiceKind.NOT_NICE, i)
        slack = m.tol * max(mpfr(1), abs(d))
        for p in fixed:
            if abs(y - p) <= slack:
                if _inside(V, p, m.tol):
                    return NiceVerdict(NiceKind.NOT_NICE, i + 1)
                return NiceVerdict(NiceKind.NICE_CERTIFIED, i)
        d *= m._df(y)
        y = m._f(y)
    return NiceVerdict(NiceKind.NICE_UPTO, horizon)


def _exact_orbit(m, target, word):
    """``[y, f(y), ..., f^k(y) = target]`` for ``y = pullback(target, word)``."""
    pts = [target]
    z = target
    for side in reversed(word):
        z = m._inv(z, side)
        pts.append(z)
    pts.reverse()
    return pts


def _certify(m, cand: Candidate, p0) -> bool:
    y = cand.point
    if abs(y - m.c) <= m.tol:
        return False
    V = _window(m, y)
    if _inside(V, p0, m.tol):
        return False
    pts = _exact_orbit(m, p0, cand.word)
    return not any(_inside(V, z, m.tol) for z in pts[1:])


@precise
def certify_candidate(m: UnimodalMap, cand: Candidate) -> bool:
    """Exact niceness of an eventually fixed point, using its preimage word."""
    return _certify(m, cand, reversing_fixed_point(m))


@precise
def nice_candidates(m: UnimodalMap, depth: int) -> list:
    """Certified-nice preimages of the reversing fixed point up to ``depth``, ascending."""
    if depth < 0:
        raise DomainError("depth must be non-negative")
    p0 = reversing_fixed_point(m)
    level = [Candidate(p0, "")]
    found = list(level)
    for _ in range(depth):
        nxt = []
        for cand in level:
            z = cand.point
            if z > m.a + m.tol or abs(z - m.a) <= m.tol:
                continue
            for side in (LEFT, RIGHT):
                if side == RIGHT and cand.word == "":
                    continue  # the right preimage of p0 is p0
                nxt.append(Candidate(m._inv(z, side), side + cand.word))
        found.extend(nxt)
        level = nxt
    nice = [cand for cand in found if _certify(m, cand, p0)]
    nice.sort(key=lambda cand: cand.point)
    return nice


@dataclass(frozen=True)
class SearchResult:
    best: Candidate | None
    nodes: int
    exhausted: bool


@precise
def largest_nice_in(m: UnimodalMap, lo, hi, depth: int, node_budget: int = 200_000, start=None):
    """Largest certified-nice preimage of the fixed point in ``(lo, hi)`` with ``hi <= c``.

    Depth-first over the monotone pieces of ``f^j`` on the window, right piece
    first, with two prunes: pieces left of the incumbent, and pieces whose
    ``j``-th image already sits inside ``V`` of their right endpoint (no point
    of such a piece can be nice).
    """
    lo, hi = mpfr(lo), mpfr(hi)
    if not lo < hi <= m.c:
        raise DomainError("search window must lie left of c")
    p0 = reversing_fixed_point(m)
    best = start
    best_pt = start.point if start is not None else lo
    c, tol = m.c, m.tol
    stack = [(lo, hi, lo, hi, "")]
    nodes = 0
    while stack:
        dlo, dhi, vlo, vhi, word = stack.pop()
        if dhi <= best_pt:
            continue
        nodes += 1
        if nodes > node_budget:
            return SearchResult(best, nodes, True)
        j = len(word)
        ilo, ihi = (vlo, vhi) if vlo < vhi else (vhi, vlo)
        if j > 0 and ilo > dhi + tol and ihi < 1 - dhi - tol:
            continue
        if ilo - tol <= p0 <= ihi + tol and j > 0:
            y = m._pullback(p0, word)
            if best_pt < y < hi and _certify(m, Candidate(y, word), p0):
                best, best_pt = Candidate(y, word), y
        if j == depth:
            continue
        inc = vlo <= vhi
        if ilo < c - tol and ihi > c + tol:
            cut = m._pullback(c, word)
            low_piece = (dlo, cut, vlo, c) if inc else (cut, dhi, c, vhi)
            high_piece = (cut, dhi, c, vhi) if inc else (dlo, cut, vlo, c)
            # image pieces below/above c, sides L/R
            children = [(low_piece, LEFT), (high_piece, RIGHT)]
        else:
            side = m._side((ilo + ihi) / 2)
            children = [((dlo, dhi, vlo, vhi), side)]
        children.sort(key=lambda ch: ch[0][0])
        for (a_lo, a_hi, b_lo, b_hi), side in children:
            stack.append((a_lo, a_hi, m._f(b_lo), m._f(b_hi), word + side))
    return SearchResult(best, nodes, False)


@precise
def central_domain(m: UnimodalMap, x, horizon: int | None = None) -> CentralDomain:
    """Central component ``U_x`` of the first-return domain and its return time."""
    x = mpfr(x)
    V = _window(m, x)
    horizon = horizon or m.ctx.horizon_default
    y = m.a
    sides = []
    for k in range(1, horizon + 1):
        if _inside(V, y, m.tol):
            break
        sides.append(m._side(y))
        y = m._f(y)
    else:
        raise NoReturn(horizon)
    time = k
    word = LEFT + "".join(sides)
    orient = 1
    for s in sides:
        if s == RIGHT:
            orient = -orient
    z = V.lo if orient > 0 else V.hi
    psi = m._pullback(z, word)
    return CentralDomain(
        U=Interval(psi, 1 - psi, True, True),
        psi=psi,
        time=time,
        boundary_image=z,
        critical_image=y,
        word=word,
    )


def _mirror_word(word):
    """Itinerary of ``1 - y`` given that of ``y``: only the first symbol flips."""
    if not word:
        return word
    return (RIGHT if word[0] == LEFT else LEFT) + word[1:]


def _central_or_none(m, x, horizon):
    """Central domain, or ``None`` when the critical orbit never comes back."""
    try:
        return central_domain(m, x, horizon)
    except NoReturn:
        return None


def _domain_of(m, value, vlo, vhi, dlo, dhi, word):
    if value == vlo:
        return dlo
    if value == vhi:
        return dhi
    return m._pullback(value, word)


def _partition(m, V, seeds, max_time, min_width, first_entry_step):
    """Split the seed pieces into first-entry components.

    Returns ``(components, lost)`` where components are ``(dlo, dhi, time,
    word, touches_c)`` and ``lost`` is the measure that was discarded.
    """
    tol = m.tol
    comps = []
    lost = mpfr(0)
    stack = list(seeds)
    while stack:
        dlo, dhi, vlo, vhi, word = stack.pop()
        width = dhi - dlo
        if width < min_width:
            lost += width
            continue
        j = len(word)
        ilo, ihi = (vlo, vhi) if vlo <= vhi else (vhi, vlo)
        rest = []
        if j >= first_entry_step and ilo < V.hi - tol and ihi > V.lo + tol:
            elo, ehi = max(ilo, V.lo), min(ihi, V.hi)
            a = _domain_of(m, elo, vlo, vhi, dlo, dhi, word)
            b = _domain_of(m, ehi, vlo, vhi, dlo, dhi, word)
            clo, chi = (a, b) if a < b else (b, a)
            if chi - clo < min_width:
                lost += chi - clo
            else:
                comps.append((clo, chi, j, word))
            if ilo < V.lo - tol:
                rest.append((ilo, V.lo))
            if ihi > V.hi + tol:
                rest.append((V.hi, ihi))
        else:
            rest.append((ilo, ihi))
        for plo, phi in rest:
            a = _domain_of(m, plo, vlo, vhi, dlo, dhi, word)
            b = _domain_of(m, phi, vlo, vhi, dlo, dhi, word)
            if a < b:
                nlo, nhi, nvlo, nvhi = a, b, plo, phi
            else:
                nlo, nhi, nvlo, nvhi = b, a, phi, plo
            if j >= max_time:
                lost += nhi - nlo
                continue
            side = m._side((plo + phi) / 2)
            if side == CRIT:
                side = LEFT if phi <= m.c else RIGHT
            stack.append((nlo, nhi, m._f(nvlo), m._f(nvhi), word + side))
    return comps, lost


@precise
def return_components(m: UnimodalMap, x, max_time: int, min_width=None) -> ReturnStructure:
    """First-return components inside ``V_x`` with return time at most ``max_time``.

    Only the left half of ``V_x`` is swept; return times are invariant under
    ``y -> 1 - y``, so the right half is its mirror image.
    """
    if max_time < 1:
        raise DomainError("max_time must be at least 1")
    x = mpfr(x)
    min_width = mpfr(min_width if min_width is not None else 0)
    V = _window(m, x)
    cd = _central_or_none(m, x, max(max_time, m.ctx.horizon_default))
    U, psi, ctime = (cd.U, cd.psi, cd.time) if cd else (None, None, None)
    if min_width >= V.length:
        return ReturnStructure(x, V, (), U, psi, ctime, mpfr(0), max_time, min_width)
    raw, _ = _partition(m, V, [(V.lo, m.c, V.lo, m.c, "")], max_time, min_width, 1)
    comps = []
    for lo, hi, t, word in raw:
        if hi == m.c:
            comps.append(Component(Interval(lo, 1 - lo), t, word))
            continue
        comps.append(Component(Interval(lo, hi), t, word))
        comps.append(Component(Interval(1 - hi, 1 - lo), t, _mirror_word(word)))
    comps.sort(key=lambda comp: comp.interval.lo)
    covered = sum((comp.interval.length for comp in comps), mpfr(0))
    return ReturnStructure(
        x=x,
        V=V,
        components=tuple(comps),
        U=U,
        psi=psi,
        central_time=ctime,
        coverage=covered / V.length,
        max_time=max_time,
        min_width=min_width,
    )


@precise
def entry_component(m: UnimodalMap, y, V: Interval, horizon: int):
    """Component of the first-entry domain of ``V`` containing ``y``.

    Returns ``(interval, time, word)`` or ``None`` when ``y`` does not enter
    within ``horizon``.  The interval is the pullback of ``V`` along the
    itinerary of ``y``.
    """
    y = mpfr(y)
    t = first_entry_time(m, y, V, horizon)
    if t is None:
        return None
    if t == 0:
        return V, 0, ""
    word = []
    z = y
    for _ in range(t):
        word.append(m._side(z))
        z = m._f(z)
    word = "".join(word)
    a = m._pullback(V.lo, word)
    b = m._pullback(V.hi, word)
    return Interval.hull(a, b), t, word


@precise
def transfer_components(m: UnimodalMap, x, max_time: int, min_width=None) -> TransferStructure:
    """First-entry components of ``V_x`` over [0, 1]; ``V_x`` itself has time 0."""
    if max_time < 0:
        raise DomainError("max_time must be non-negative")
    x = mpfr(x)
    min_width = mpfr(min_width if min_width is not None else 0)
    V = _window(m, x)
    cd = _central_or_none(m, x, max(max_time, m.ctx.horizon_default))
    comps = [Component(V, 0, "")]
    if max_time > 0:
        raw, _ = _partition(m, V, [(mpfr(0), V.lo, mpfr(0), V.lo, "")], max_time, min_width, 0)
        for lo, hi, t, word in raw:
            comps.append(Component(Interval(lo, hi), t, word))
            comps.append(Component(Interval(1 - hi, 1 - lo), t, _mirror_word(word)))
    comps.sort(key=lambda comp: comp.interval.lo)
    covered = sum((comp.interval.length for comp in comps), mpfr(0))
    S, n, onto = None, None, False
    if cd is not None:
        n = cd.time - 1
        word = cd.word[1:]
        S = Interval.hull(m._pullback(V.lo, word), m._pullback(V.hi, word))
        onto = _maps_onto(m, S, n, V)
    return TransferStructure(
        x=x,
        V=V,
        components=tuple(comps),
        S=S,
        S_time=n,
        coverage=covered,
        max_time=max_time,
        min_width=min_width,
        S_onto=onto,
    )


def _maps_onto(m, J, n, V):
    """``f^n`` carries the endpoints of ``J`` to those of ``V`` (derivative-scaled tolerance)."""
    ends = []
    for e in (J.lo, J.hi):
        y, d = e, mpfr(1)
        for _ in range(n):
            d *= m._df(y)
            y = m._f(y)
        ends.append((y, max(mpfr(1), abs(d))))
    ok = True
    for (y, scale) in ends:
        slack = m.tol * scale
        if not (abs(y - V.lo) <= slack or abs(y - V.hi) <= slack):
            ok = False
    if ok and abs(ends[0][0] - ends[1][0]) <= m.tol:
        ok = False
    return ok


@precise
def central_image_orbit(m: UnimodalMap, cd: CentralDomain) -> list:
    """Intervals ``f^i(M)``, ``i = 0..n``, for ``M = f(U_x)`` and ``n = time - 1``."""
    word = cd.word
    z = cd.boundary_image
    # f^(i+1)(psi) for i = 0..n via exact pullback of the boundary image
    suffix_pts = [z]
    for side in reversed(word[1:]):
        z = m._inv(z, side)
        suffix_pts.append(z)
    suffix_pts.reverse()  # suffix_pts[i] = f^(i+1)(psi)
    out = []
    y = m.a
    for i in range(cd.time):
        out.append(Interval.hull(suffix_pts[i], y))
        y = m._f(y)
    return out


def disjointness_violations(intervals, tol) -> int:
    """Number of overlaps (beyond ``tol``) between neighbours after sorting."""
    ordered = sorted(intervals, key=lambda I: I.lo)
    bad = 0
    reach = None
    with _at_least(ordered[0].lo if ordered else tol):
        for I in ordered:
            if reach is not None and I.lo < reach - tol:
                bad += 1
            reach = I.hi if reach is None else max(reach, I.hi)
    return bad
