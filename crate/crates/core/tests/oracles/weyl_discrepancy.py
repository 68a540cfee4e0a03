"""Independent oracle for star discrepancies of (s_i * alpha mod 1).

Fractional parts are evaluated with mpmath at 60 significant digits, then the
classical sorted-points formula is applied.
"""
import sys

import mpmath

mpmath.mp.dps = 60


def star_discrepancy(points):
    pts = sorted(points)
    n = len(pts)
    best = mpmath.mpf(0)
    for i, x in enumerate(pts, start=1):
        best = max(best, mpmath.mpf(i) / n - x, x - mpmath.mpf(i - 1) / n)
    return best


def frac_points(seq, alpha, count):
    out = []
    for i in range(1, count + 1):
        s = i * i if seq == "squares" else i
        v = s * alpha
        out.append(v - mpmath.floor(v))
    return out


if __name__ == "__main__":
    cases = [
        ("squares", "sqrt2", mpmath.sqrt(2), 100),
        ("squares", "sqrt2", mpmath.sqrt(2), 100000),
        ("naturals", "golden", (mpmath.sqrt(5) - 1) / 2, 10000),
    ]
    for seq, name, alpha, n in cases:
        d = star_discrepancy(frac_points(seq, alpha, n))
        print(seq, name, n, mpmath.nstr(d, 20))
