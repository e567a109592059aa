"""Slow, obviously-correct reference implementations used to check the fast paths."""

import math
from fractions import Fraction


def lcg_sequence(seed, n):
    state = seed % 2**32
    out = []
    for _ in range(n):
        state = (1664525 * state + 1013904223) % 2**32
        out.append(state)
    return out


def box_blur(rows, radius):
    h, w = len(rows), len(rows[0])
    out = []
    for i in range(h):
        line = []
        for j in range(w):
            total = count = 0
            for di in range(-radius, radius + 1):
                for dj in range(-radius, radius + 1):
                    y, x = i + di, j + dj
                    if 0 <= y < h and 0 <= x < w:
                        total += rows[y][x]
                        count += 1
            line.append(math.floor(Fraction(total, count) + Fraction(1, 2)))
        out.append(line)
    return out


def rasterize(width, height, mpp, rear, front, top, bottom):
    """Pixel (i, j) is inside iff its centre lies in [rear, front) x [top, bottom)."""
    cells = set()
    for i in range(height):
        for j in range(width):
            x, y = (j + 0.5) * mpp, (i + 0.5) * mpp
            if rear <= x < front and top <= y < bottom:
                cells.add((i, j))
    return cells


def mean_of_ones(rows):
    sx = sy = n = 0
    for y, row in enumerate(rows):
        for x, v in enumerate(row):
            if v:
                sx += x
                sy += y
                n += 1
    if n == 0:
        return None, None, 0
    return sx / n, sy / n, n
