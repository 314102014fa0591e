"""Vectorized F_p evaluation of F_x over many pencils at once.

A batch is an integer array of shape (N, ncoords) with entries in [0, p),
columns in ``coordinates(case)`` order.  These routines mirror the scalar
ones in ``pencils`` and are cross-checked against them in the tests.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .pencils import matching_terms, permutation_terms
from .weights import CaseId, CoordinateId, coordinates

MAX_PRIME = 1 << 10  # keeps every intermediate product inside int64


@lru_cache(maxsize=None)
def column_index(case: CaseId) -> dict[CoordinateId, int]:
    return {c: n for n, c in enumerate(coordinates(case))}


@lru_cache(maxsize=None)
def _entry_map(case: CaseId) -> tuple:
    """For each matrix slot (i, a, b): (column, sign) or None when structurally zero."""
    n = case.matrix_size
    idx = column_index(case)
    out = {}
    for i in (1, 2):
        for a in range(n):
            for b in range(n):
                if case.alternating:
                    if a > b:
                        out[i, a, b] = (idx[CoordinateId(i, a + 1, b + 1)], 1)
                    elif a < b:
                        out[i, a, b] = (idx[CoordinateId(i, b + 1, a + 1)], -1)
                    else:
                        out[i, a, b] = None
                else:
                    out[i, a, b] = (idx[CoordinateId(i, a + 1, b + 1)], 1)
    return tuple(sorted(out.items()))


def _entry(case: CaseId, x: np.ndarray, i: int, a: int, b: int) -> np.ndarray | None:
    spec = dict(_entry_map(case))[i, a, b]
    if spec is None:
        return None
    col, sign = spec
    return x[:, col] if sign > 0 else -x[:, col]


def form_coefficients(case: CaseId, x: np.ndarray, p: int) -> np.ndarray:
    """Coefficients of F_x mod p, shape (N, deg + 1); index m multiplies v1^(deg-m) v2^m."""
    if p >= MAX_PRIME:
        raise ValueError(f"batch arithmetic supports p < {MAX_PRIME}")
    x = np.asarray(x, dtype=np.int64)
    n = case.matrix_size
    deg = case.form_degree
    entries = dict(_entry_map(case))
    lin = {}
    for a in range(n):
        for b in range(n):
            if entries[1, a, b] is None:
                continue
            lin[a, b] = (_entry(case, x, 1, a, b), _entry(case, x, 2, a, b))
    if case.alternating:
        terms = [(s, pairs) for s, pairs in matching_terms(n)]
    else:
        terms = [(s, tuple((r, perm[r]) for r in range(n))) for s, perm in permutation_terms(n)]
    total = np.zeros((x.shape[0], deg + 1), dtype=np.int64)
    for sign, pairs in terms:
        poly = [np.full(x.shape[0], sign % p, dtype=np.int64)]
        for a, b in pairs:
            u, v = lin[a, b]
            nxt = [None] * (len(poly) + 1)
            for m, c in enumerate(poly):
                hi = (c * u) % p
                lo = (c * v) % p
                nxt[m] = hi if nxt[m] is None else (nxt[m] + hi) % p
                nxt[m + 1] = lo if nxt[m + 1] is None else (nxt[m + 1] + lo) % p
            poly = nxt
        for m in range(deg + 1):
            total[:, m] += poly[m]
    return total % p


def discriminant(coeffs: np.ndarray, p: int) -> np.ndarray:
    c = coeffs % p
    if c.shape[1] == 3:
        a, b, cc = c[:, 0], c[:, 1], c[:, 2]
        return (b * b - 4 * a % p * cc) % p
    a, b, cc, d = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    bc = b * cc % p
    terms = (
        bc * bc,
        -4 * (a * cc % p) * (cc * cc % p),
        -4 * (b * b % p) * (b * d % p),
        -27 * (a * d % p) * (a * d % p),
        18 * (a * b % p) * (cc * d % p),
    )
    out = np.zeros(c.shape[0], dtype=np.int64)
    for t in terms:
        out = (out + t) % p
    return out


def semistable(coeffs: np.ndarray, p: int) -> np.ndarray:
    return (discriminant(coeffs, p) != 0) & (coeffs.any(axis=1))


def root_free(coeffs: np.ndarray, p: int) -> np.ndarray:
    """No zero of F on P^1(F_p): test (1:0) and (t:1) for every t."""
    deg = coeffs.shape[1] - 1
    ok = coeffs[:, 0] % p != 0
    for t in range(p):
        val = np.zeros(coeffs.shape[0], dtype=np.int64)
        for m in range(deg + 1):
            val = (val + coeffs[:, m] * pow(t, deg - m, p)) % p
        ok &= val != 0
    return ok


def in_L0(case: CaseId, x: np.ndarray, p: int) -> np.ndarray:
    coeffs = form_coefficients(case, x, p)
    ok = semistable(coeffs, p)
    if case is not CaseId.CASE4:
        ok &= root_free(coeffs, p)
    return ok


def enumerate_block(ncoords: int, p: int, start: int, stop: int) -> np.ndarray:
    """Pencils number start..stop-1 in base-p order (coordinate 0 most significant)."""
    n = np.arange(start, stop, dtype=np.int64)
    out = np.empty((n.size, ncoords), dtype=np.int64)
    for col in range(ncoords - 1, -1, -1):
        out[:, col] = n % p
        n //= p
    return out


def enumerate_all(ncoords: int, p: int, chunk: int = 1 << 16):
    total = p ** ncoords
    for start in range(0, total, chunk):
        yield enumerate_block(ncoords, p, start, min(total, start + chunk))
