"""Orientation and in-circle predicates with exact fallback.

Each predicate first evaluates in double precision and accepts the sign when
the result clears a forward error bound (the static bounds from Shewchuk's
adaptive predicates). Otherwise the determinant is recomputed exactly with
:class:`fractions.Fraction`, which represents every finite double exactly.
"""

from __future__ import annotations

from fractions import Fraction

_EPS = 2.0**-53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def orient2d_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    return _sign((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def orient2d(a, b, c) -> int:
    """+1 if ``a, b, c`` turn counter-clockwise, -1 if clockwise, 0 if collinear."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _CCW_BOUND * (abs(detleft) + abs(detright))
    if det > bound or -det > bound:
        return _sign(det)
    return orient2d_exact(a, b, c)


def incircle_exact(a, b, c, d) -> int:
    rows = []
    for p in (a, b, c):
        x = Fraction(p[0]) - Fraction(d[0])
        y = Fraction(p[1]) - Fraction(d[1])
        rows.append((x, y, x * x + y * y))
    (ax, ay, al), (bx, by, bl), (cx, cy, cl) = rows
    det = (
        al * (bx * cy - cx * by)
        + bl * (cx * ay - ax * cy)
        + cl * (ax * by - bx * ay)
    )
    return _sign(det)


def incircle(a, b, c, d) -> int:
    """+1 if ``d`` lies inside the circle through ``a, b, c`` (given CCW), -1 outside, 0 on it."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady)
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    bound = _ICC_BOUND * permanent
    if det > bound or -det > bound:
        return _sign(det)
    return incircle_exact(a, b, c, d)


def _det3(m) -> Fraction:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def incircle_perturbed(pts, ia: int, ib: int, ic: int, id_: int) -> int:
    """In-circle sign with ties broken by symbolic lifting perturbation.

    Point ``k`` is lifted to ``x**2 + y**2 - eps_k`` with ``eps_k`` decreasing
    steeply in ``k``. On an exact tie the lowest-index point of the four
    decides, which makes a cocircular quadrilateral take the diagonal through
    its lowest-index vertex. Never returns 0 for four distinct points of
    which ``a, b, c`` are not collinear.
    """
    s = incircle(pts[ia], pts[ib], pts[ic], pts[id_])
    if s:
        return s
    order = (ia, ib, ic, id_)
    for m in sorted(order):
        row = order.index(m)
        # cofactor of the lift entry in the 4x4 [x, y, lift, 1] determinant
        minor = [
            (Fraction(pts[k][0]), Fraction(pts[k][1]), Fraction(1))
            for r, k in enumerate(order)
            if r != row
        ]
        cof = _det3(minor) * (1 if (row + 2) % 2 == 0 else -1)
        if cof:
            # d(det)/d(eps_m) = -cofactor
            return -_sign(cof)
    return 0
