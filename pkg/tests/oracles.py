"""Slow, obviously-correct reference implementations used only by the tests."""

from collections import deque

import numpy as np


def hit_offsets(hits):
    h, w = hits.shape
    return [(r - h // 2, c - w // 2) for r in range(h) for c in range(w) if hits[r, c]]


def brute_erode(x, hits):
    """min over p+b, out-of-frame samples skipped (they are neutral)."""
    h, w = x.shape
    offs = hit_offsets(hits)
    out = np.empty_like(x)
    for r in range(h):
        for c in range(w):
            vals = [x[r + dr, c + dc] for dr, dc in offs if 0 <= r + dr < h and 0 <= c + dc < w]
            if x.dtype == bool:
                out[r, c] = all(vals)
            else:
                out[r, c] = min(vals) if vals else 255
    return out


def brute_dilate(x, hits):
    """max over p-b, out-of-frame samples skipped."""
    h, w = x.shape
    offs = hit_offsets(hits)
    out = np.empty_like(x)
    for r in range(h):
        for c in range(w):
            vals = [x[r - dr, c - dc] for dr, dc in offs if 0 <= r - dr < h and 0 <= c - dc < w]
            if x.dtype == bool:
                out[r, c] = any(vals)
            else:
                out[r, c] = max(vals) if vals else 0
    return out


def brute_open(x, hits):
    return brute_dilate(brute_erode(x, hits), hits)


def brute_close(x, hits):
    return brute_erode(brute_dilate(x, hits), hits)


def brute_top_hat(x, hits):
    opened = brute_open(x, hits).astype(int)
    return np.maximum(x.astype(int) - opened, 0).astype(np.uint8)


NEIGHBORS_8 = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
NEIGHBORS_4 = [(-1, 0), (1, 0), (0, -1), (0, 1)]


def flood_components(mask, neighbors=NEIGHBORS_8):
    """List of pixel sets, one per connected component (BFS)."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for r in range(h):
        for c in range(w):
            if mask[r, c] and not seen[r, c]:
                comp = set()
                queue = deque([(r, c)])
                seen[r, c] = True
                while queue:
                    pr, pc = queue.popleft()
                    comp.add((pr, pc))
                    for dr, dc in neighbors:
                        qr, qc = pr + dr, pc + dc
                        if 0 <= qr < h and 0 <= qc < w and mask[qr, qc] and not seen[qr, qc]:
                            seen[qr, qc] = True
                            queue.append((qr, qc))
                comps.append(comp)
    return comps


def boundary_count(pixels, shape):
    h, w = shape
    count = 0
    for r, c in pixels:
        for dr, dc in NEIGHBORS_4:
            q = (r + dr, c + dc)
            if not (0 <= q[0] < h and 0 <= q[1] < w) or q not in pixels:
                count += 1
                break
    return count


def point_in_ellipse_count(shape, center, radii):
    cr, cc = center
    ry, rx = radii
    n = 0
    for r in range(shape[0]):
        for c in range(shape[1]):
            if ((r - cr) / ry) ** 2 + ((c - cc) / rx) ** 2 <= 1.0:
                n += 1
    return n


def pearson_spreadsheet(xs, ys):
    """Textbook formula in plain Python floats."""
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    syy = sum(y * y for y in ys)
    sxy = sum(x * y for x, y in zip(xs, ys))
    num = n * sxy - sx * sy
    den = ((n * sxx - sx * sx) * (n * syy - sy * sy)) ** 0.5
    return num / den


def disc_mask(shape, center, radius):
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    return (yy - center[0]) ** 2 + (xx - center[1]) ** 2 <= radius * radius
