# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled connected-component kernels.

Labels are numbered 1..n in raster order of each component's first pixel,
matching the pure-Python fallback exactly.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    cdef Py_ssize_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef void _union(Py_ssize_t[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label_components(mask):
    """8-connected labeling of a boolean 2-D mask. Returns (labels int32, n)."""
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1]
    cdef Py_ssize_t r, c, dr, dc, rr, cc, idx
    labels_arr = np.zeros((rows, cols), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    parent_arr = np.arange(rows * cols, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef cnp.int32_t next_label = 0

    with nogil:
        # first pass: union each foreground pixel with its already-visited neighbours
        for r in range(rows):
            for c in range(cols):
                if not m[r, c]:
                    continue
                idx = r * cols + c
                for dr in range(-1, 1):
                    for dc in range(-1, 2):
                        if dr == 0 and dc >= 0:
                            continue
                        rr = r + dr
                        cc = c + dc
                        if rr < 0 or cc < 0 or cc >= cols:
                            continue
                        if m[rr, cc]:
                            _union(parent, idx, rr * cols + cc)
        # second pass: roots are the minimum index of each component, i.e. its first raster pixel
        for r in range(rows):
            for c in range(cols):
                if not m[r, c]:
                    continue
                idx = r * cols + c
                rr = _find(parent, idx)
                if rr == idx:
                    next_label += 1
                    labels[r, c] = next_label
                else:
                    labels[r, c] = labels[rr // cols, rr % cols]
    return labels_arr, int(next_label)


def component_stats(labels, Py_ssize_t n):
    """Per-label area, centroid sums, crack perimeter and bounding box.

    Returns a dict of 1-D arrays indexed by label - 1.
    """
    cdef cnp.int32_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int32)
    cdef Py_ssize_t rows = lab.shape[0], cols = lab.shape[1]
    area_a = np.zeros(n, dtype=np.int64)
    perim_a = np.zeros(n, dtype=np.int64)
    sr_a = np.zeros(n, dtype=np.float64)
    sc_a = np.zeros(n, dtype=np.float64)
    rmin_a = np.full(n, rows, dtype=np.int64)
    rmax_a = np.full(n, -1, dtype=np.int64)
    cmin_a = np.full(n, cols, dtype=np.int64)
    cmax_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] area = area_a, perim = perim_a
    cdef cnp.float64_t[::1] sr = sr_a, sc = sc_a
    cdef cnp.int64_t[::1] rmin = rmin_a, rmax = rmax_a, cmin = cmin_a, cmax = cmax_a
    cdef Py_ssize_t r, c, k
    cdef cnp.int32_t v

    with nogil:
        for r in range(rows):
            for c in range(cols):
                v = lab[r, c]
                if v <= 0:
                    continue
                k = v - 1
                area[k] += 1
                sr[k] += r
                sc[k] += c
                if r < rmin[k]:
                    rmin[k] = r
                if r > rmax[k]:
                    rmax[k] = r
                if c < cmin[k]:
                    cmin[k] = c
                if c > cmax[k]:
                    cmax[k] = c
                # pixel edges not shared with the same component
                if r == 0 or lab[r - 1, c] != v:
                    perim[k] += 1
                if r == rows - 1 or lab[r + 1, c] != v:
                    perim[k] += 1
                if c == 0 or lab[r, c - 1] != v:
                    perim[k] += 1
                if c == cols - 1 or lab[r, c + 1] != v:
                    perim[k] += 1
    return {
        "area": area_a, "perimeter": perim_a, "sum_row": sr_a, "sum_col": sc_a,
        "row_min": rmin_a, "row_max": rmax_a, "col_min": cmin_a, "col_max": cmax_a,
    }
