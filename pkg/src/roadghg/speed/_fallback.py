"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and bit-identical output; 50 to 75 times
slower on large masks (see ``benchmarks/bench_kernels.py``).
"""
from collections import deque

import numpy as np

_NEIGHBOURS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


def label_components(mask):
    m = np.asarray(mask, dtype=bool)
    rows, cols = m.shape
    fg = m.tolist()
    labels = [[0] * cols for _ in range(rows)]
    n = 0
    for r in range(rows):
        row = fg[r]
        for c in range(cols):
            if not row[c] or labels[r][c]:
                continue
            n += 1
            labels[r][c] = n
            queue = deque([(r, c)])
            while queue:
                pr, pc = queue.popleft()
                for dr, dc in _NEIGHBOURS:
                    rr, cc = pr + dr, pc + dc
                    if 0 <= rr < rows and 0 <= cc < cols and fg[rr][cc] and not labels[rr][cc]:
                        labels[rr][cc] = n
                        queue.append((rr, cc))
    return np.array(labels, dtype=np.int32).reshape(rows, cols), n


def component_stats(labels, n):
    lab = np.asarray(labels, dtype=np.int32)
    rows, cols = lab.shape
    area = [0] * n
    perim = [0] * n
    sr = [0.0] * n
    sc = [0.0] * n
    rmin, rmax = [rows] * n, [-1] * n
    cmin, cmax = [cols] * n, [-1] * n
    grid = lab.tolist()
    for r in range(rows):
        row = grid[r]
        for c in range(cols):
            v = row[c]
            if v <= 0:
                continue
            k = v - 1
            area[k] += 1
            sr[k] += r
            sc[k] += c
            rmin[k] = min(rmin[k], r)
            rmax[k] = max(rmax[k], r)
            cmin[k] = min(cmin[k], c)
            cmax[k] = max(cmax[k], c)
            perim[k] += (
                (r == 0 or grid[r - 1][c] != v)
                + (r == rows - 1 or grid[r + 1][c] != v)
                + (c == 0 or row[c - 1] != v)
                + (c == cols - 1 or row[c + 1] != v)
            )
    i64 = np.int64
    return {
        "area": np.array(area, dtype=i64), "perimeter": np.array(perim, dtype=i64),
        "sum_row": np.array(sr, dtype=np.float64), "sum_col": np.array(sc, dtype=np.float64),
        "row_min": np.array(rmin, dtype=i64), "row_max": np.array(rmax, dtype=i64),
        "col_min": np.array(cmin, dtype=i64), "col_max": np.array(cmax, dtype=i64),
    }
