"""Exact rational linear algebra and linear feasibility.

Everything here works on tuples of ``fractions.Fraction``.  The linear
programs are solved by a dense two-phase simplex with Bland's rule, so
results are exact and reproducible for a fixed input order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Rat = Fraction
RVector = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class InputError(ValueError):
    """Raised on malformed input (dimension mismatch, empty lists, ...)."""


def rat(value) -> Fraction:
    """Coerce an int, Fraction or "p/q" string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a rational: {value!r}")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {value!r}") from exc
    raise InputError(f"not a rational: {value!r}")


def rat_str(q: Fraction) -> str:
    return str(q)


def vec(values: Iterable) -> RVector:
    return tuple(rat(v) for v in values)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v) if a and b), ZERO)


def _common_dim(points: Sequence[Sequence[Fraction]]) -> int:
    if not points:
        raise InputError("point list is empty")
    dim = len(points[0])
    if dim < 1:
        raise InputError("points must have dimension >= 1")
    for p in points:
        if len(p) != dim:
            raise InputError(f"dimension mismatch: {len(p)} != {dim}")
    return dim


# ---------------------------------------------------------------------------
# Gaussian elimination


def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and the pivot columns."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    if not vectors:
        return 0
    return len(rref(vectors, len(vectors[0]))[1])


def nullspace(vectors: Sequence[Sequence[Fraction]], dim: int) -> list[RVector]:
    """Basis of {l : l . v = 0 for every v}."""
    reduced, pivots = rref(vectors, dim) if vectors else ([], [])
    free = [c for c in range(dim) if c not in pivots]
    basis = []
    for f in free:
        l = [ZERO] * dim
        l[f] = ONE
        for row, pc in zip(reduced, pivots):
            l[pc] = -row[f]
        basis.append(tuple(l))
    return basis


def solve_linear(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> RVector | None:
    """One solution of a x = b (free variables set to 0), or None."""
    n = len(a[0]) if a else 0
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    reduced, pivots = rref(aug, n + 1)
    if n in pivots:
        return None
    x = [ZERO] * n
    for row, pc in zip(reduced, pivots):
        x[pc] = row[n]
    return tuple(x)


# ---------------------------------------------------------------------------
# Simplex


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: RVector = ()
    value: Fraction | None = None


class _Tableau:
    """Integer tableau with a common denominator (fraction-free pivoting).

    The rational tableau is ``rows / det``.  Pivoting uses the Edmonds update
    ``(t_ij * p - t_ic * t_rj) // det``, which divides exactly.
    """

    def __init__(self, rows: list[list[int]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.det = 1

    def pivot(self, r: int, c: int, obj: list[int]) -> None:
        prow = self.rows[r]
        p = prow[c]
        det = self.det
        nz = [j for j, v in enumerate(prow) if v]
        for row in self.rows + [obj]:
            if row is prow:
                continue
            f = row[c]
            if f:
                for j in range(len(row)):
                    row[j] *= p
                for j in nz:
                    row[j] -= f * prow[j]
                if det != 1:
                    for j in range(len(row)):
                        row[j] //= det
            elif p != det:
                for j in range(len(row)):
                    row[j] = row[j] * p // det
        self.det = p
        self.basis[r] = c
        if p < 0:
            for row in self.rows + [obj]:
                for j in range(len(row)):
                    row[j] = -row[j]
            self.det = -p

    def run(self, obj: list[int], allowed) -> str:
        """Maximize; obj holds det * reduced costs (negative entries improve)."""
        rows, basis = self.rows, self.basis
        while True:
            entering = next((j for j in allowed if obj[j] < 0), None)
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(rows):
                a = row[entering]
                if a > 0:
                    if best is None:
                        best = i
                        continue
                    b = rows[best]
                    lhs, rhs = row[-1] * b[entering], b[-1] * a
                    if lhs < rhs or (lhs == rhs and basis[i] < basis[best]):
                        best = i
            if best is None:
                return "unbounded"
            self.pivot(best, entering, obj)


def _integer_row(values: Sequence[Fraction]) -> tuple[list[int], int]:
    scale = 1
    for v in values:
        d = v.denominator
        if scale % d:
            scale = scale * d // gcd(scale, d)
    return [int(v * scale) for v in values], scale


def linprog_exact(
    c: Sequence,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximize c.x subject to a_ub x <= b_ub, a_eq x = b_eq, x >= 0.

    Two-phase simplex with Bland's rule in exact arithmetic.  Each
    constraint row is scaled to integers (slack and artificial variables
    absorb the scale), so pivoting runs on Python ints.
    """
    n = len(c)
    c = [rat(v) for v in c]
    rows_spec = []
    for row, rhs in zip(a_ub, b_ub):
        rows_spec.append(([rat(v) for v in row], rat(rhs), "ub"))
    for row, rhs in zip(a_eq, b_eq):
        rows_spec.append(([rat(v) for v in row], rat(rhs), "eq"))
    for coeffs, _, _ in rows_spec:
        if len(coeffs) != n:
            raise InputError("constraint width does not match objective")

    # columns: originals, one slack per inequality, artificials, rhs
    n_slack = sum(1 for _, _, kind in rows_spec if kind == "ub")
    n_art = sum(1 for _, rhs, kind in rows_spec if kind == "eq" or rhs < 0)
    width = n + n_slack + n_art
    rows: list[list[int]] = []
    basis: list[int] = []
    slack_col, art_col = n, n + n_slack
    for coeffs, rhs, kind in rows_spec:
        ints, _ = _integer_row(coeffs + [rhs])
        sign = -1 if rhs < 0 else 1
        row = [sign * v for v in ints[:-1]] + [0] * (width - n) + [sign * ints[-1]]
        if kind == "ub":
            row[slack_col] = sign
            if sign > 0:
                basis.append(slack_col)
            slack_col += 1
        if kind == "eq" or rhs < 0:
            row[art_col] = 1
            basis.append(art_col)
            art_col += 1
        rows.append(row)
    tab = _Tableau(rows, basis)

    if n_art:
        obj = [0] * (n + n_slack) + [1] * n_art + [0]
        for i, b in enumerate(basis):
            if b >= n + n_slack:
                obj = [o - v for o, v in zip(obj, rows[i])]
        tab.run(obj, range(width))
        if obj[-1] != 0:
            return LPResult("infeasible")
        i = 0
        while i < len(rows):
            if basis[i] >= n + n_slack:
                col = next((j for j in range(n + n_slack) if rows[i][j]), None)
                if col is None:
                    del rows[i]
                    del basis[i]
                    continue
                tab.pivot(i, col, obj)
            i += 1

    cint, cscale = _integer_row(c)
    det = tab.det
    obj = [-v * det for v in cint] + [0] * (width - n + 1)
    for i, b in enumerate(basis):
        if b < n and cint[b]:
            cb = cint[b]
            obj = [o + cb * v for o, v in zip(obj, rows[i])]
    status = tab.run(obj, range(n + n_slack))
    if status == "unbounded":
        return LPResult("unbounded")
    det = tab.det
    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = Fraction(rows[i][-1], det)
    value = Fraction(obj[-1], det * cscale)
    assert value == dot(c, x)
    return LPResult("optimal", tuple(x), value)


# ---------------------------------------------------------------------------
# Stiemke alternative


@dataclass(frozen=True)
class LinearForm:
    coefficients: RVector

    def __call__(self, v: Sequence[Fraction]) -> Fraction:
        if len(v) != len(self.coefficients):
            raise InputError("dimension mismatch")
        return dot(self.coefficients, v)

    def is_zero(self) -> bool:
        return not any(self.coefficients)


INTERIOR_YES = "InteriorYes"
INTERIOR_NO = "InteriorNo"


@dataclass(frozen=True)
class StiemkeCertificate:
    verdict: str
    combination: tuple[tuple[int, Fraction], ...] | None = None
    separator: LinearForm | None = None

    def validate(self, points: Sequence[Sequence[Fraction]]) -> bool:
        """Re-check the certificate against the points from scratch."""
        dim = _common_dim(points)
        if self.verdict == INTERIOR_YES:
            if not self.combination or self.separator is not None:
                return False
            total = [ZERO] * dim
            for idx, mu in self.combination:
                if not 0 <= idx < len(points) or mu <= 0:
                    return False
                for j in range(dim):
                    total[j] += mu * points[idx][j]
            if any(total):
                return False
            return rank([points[idx] for idx, _ in self.combination]) == dim
        if self.verdict == INTERIOR_NO:
            if self.separator is None or self.combination is not None:
                return False
            l = self.separator
            if len(l.coefficients) != dim or l.is_zero():
                return False
            return all(l(p) <= 0 for p in points)
        return False

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "combination": None if self.combination is None
            else [[i, rat_str(mu)] for i, mu in self.combination],
            "separator": None if self.separator is None
            else [rat_str(v) for v in self.separator.coefficients],
        }

    @classmethod
    def from_json(cls, data: dict) -> "StiemkeCertificate":
        comb = data.get("combination")
        sep = data.get("separator")
        return cls(
            data["verdict"],
            None if comb is None else tuple((int(i), rat(mu)) for i, mu in comb),
            None if sep is None else LinearForm(vec(sep)),
        )


def max_support_combination(points: Sequence[RVector]) -> dict[int, Fraction]:
    """A zero combination sum mu_p p = 0, mu >= 0, with the largest possible support.

    Variables are t_p in [0, 1] and s_p >= 0 with mu_p = t_p + s_p; the LP
    maximizes sum t_p, which at the optimum is the size of the largest support.
    """
    dim = _common_dim(points)
    m = len(points)
    a_eq = [[p[j] for p in points] * 2 for j in range(dim)]
    a_ub = [[ONE if col == i else ZERO for col in range(2 * m)] for i in range(m)]
    res = linprog_exact([ONE] * m + [ZERO] * m, a_ub, [ONE] * m, a_eq, [ZERO] * dim)
    assert res.status == "optimal", res.status
    mu = {}
    for i in range(m):
        v = res.x[i] + res.x[m + i]
        if v:
            mu[i] = v
    return mu


def _separator_lp(points: Sequence[RVector], weights: Sequence[int]) -> LinearForm:
    """Minimize sum_p w_p l.p over {l : l.p <= 0 for all p, -1 <= l_j <= 1}."""
    dim = len(points[0])
    a_ub = [list(p) + [-v for v in p] for p in points]
    b_ub = [ZERO] * len(points)
    for j in range(2 * dim):
        a_ub.append([ONE if col == j else ZERO for col in range(2 * dim)])
        b_ub.append(ONE)
    objective = [ZERO] * dim
    for w, p in zip(weights, points):
        if w:
            for j in range(dim):
                objective[j] += w * p[j]
    # maximize -(objective . l)
    c = [-v for v in objective] + list(objective)
    res = linprog_exact(c, a_ub, b_ub)
    assert res.status == "optimal", res.status
    return LinearForm(tuple(res.x[j] - res.x[dim + j] for j in range(dim)))


def positive_combination(points: Sequence[Sequence]) -> StiemkeCertificate:
    """Decide the Stiemke alternative for the cone generated by ``points``.

    InteriorYes carries strictly positive weights (summing to 1) on a
    spanning subset whose weighted sum is zero; InteriorNo carries a nonzero
    functional that is <= 0 on every point.
    """
    pts = [vec(p) for p in points]
    dim = _common_dim(pts)
    mu = max_support_combination(pts)
    support = sorted(mu)
    if support and rank([pts[i] for i in support]) == dim:
        total = sum(mu.values())
        cert = StiemkeCertificate(INTERIOR_YES, tuple((i, mu[i] / total) for i in support))
    else:
        outside = [0 if i in mu else 1 for i in range(len(pts))]
        if any(outside):
            sep = _separator_lp(pts, outside)
        else:
            sep = LinearForm(nullspace(pts, dim)[0])
        cert = StiemkeCertificate(INTERIOR_NO, separator=sep)
    if not cert.validate(pts):
        raise AssertionError(f"certificate failed to validate: {cert}")
    return cert


def contains_origin_interior(points: Sequence[Sequence]) -> tuple[bool, StiemkeCertificate]:
    """Is the origin an interior point of conv(points) in the ambient space?"""
    cert = positive_combination(points)
    return cert.verdict == INTERIOR_YES, cert


def find_separator(points: Sequence[Sequence]) -> LinearForm | None:
    """A nonzero l <= 0 on all points, found without looking for combinations.

    Used as the independent half when checking that the two alternatives
    never co-occur.
    """
    pts = [vec(p) for p in points]
    dim = _common_dim(pts)
    l = _separator_lp(pts, [1] * len(pts))
    if not l.is_zero():
        return l
    # optimum 0: every feasible l vanishes on all points
    basis = nullspace(pts, dim)
    return LinearForm(basis[0]) if basis else None


# ---------------------------------------------------------------------------
# Strict feasibility in the positive cone


def strict_cone_feasible(points: Sequence[Sequence]) -> tuple[bool, tuple[tuple[int, Fraction], ...] | None]:
    """Is some convex combination of the points entrywise strictly positive?

    Solves max s subject to sum mu_p p >= s (entrywise), sum mu = 1, mu >= 0.
    The witness lists the nonzero mu_p when the optimum s is positive.
    """
    pts = [vec(p) for p in points]
    dim = _common_dim(pts)
    m = len(pts)
    # variables: mu_0..mu_{m-1}, s_plus, s_minus
    a_ub = [[-p[j] for p in pts] + [ONE, -ONE] for j in range(dim)]
    b_ub = [ZERO] * dim
    a_eq = [[ONE] * m + [ZERO, ZERO]]
    res = linprog_exact([ZERO] * m + [ONE, -ONE], a_ub, b_ub, a_eq, [ONE])
    assert res.status == "optimal", res.status
    if res.value <= 0:
        return False, None
    witness = tuple((i, res.x[i]) for i in range(m) if res.x[i])
    return True, witness


def check_cone_witness(points: Sequence[Sequence], witness) -> bool:
    """Re-validate a strict-cone witness: weights >= 0 sum to 1, sum entrywise > 0."""
    pts = [vec(p) for p in points]
    dim = _common_dim(pts)
    if not witness:
        return False
    if sum(mu for _, mu in witness) != 1 or any(mu < 0 for _, mu in witness):
        return False
    total = [ZERO] * dim
    for i, mu in witness:
        for j in range(dim):
            total[j] += mu * pts[i][j]
    return all(v > 0 for v in total)


# ---------------------------------------------------------------------------
# Plane combination


PLANE_VECTORS: tuple[RVector, RVector, RVector] = (
    (Fraction(-1, 3), Fraction(-2, 3)),
    (Fraction(-1, 3), Fraction(1, 3)),
    (Fraction(2, 3), Fraction(1, 3)),
)


def solve_plane_combination(a, b) -> tuple[Fraction, Fraction, Fraction]:
    """Nonnegative c with c1 u1 + c2 u2 + c3 u3 = (a, b) and c1+c2+c3 minimal.

    u1 + u2 + u3 = 0, so solutions form a line c0 + k(1, 1, 1); the minimal
    sum picks k so that the smallest entry is 0.
    """
    a, b = rat(a), rat(b)
    base = (-a - b, -2 * a + b, ZERO)
    k = min(base)
    c = tuple(v - k for v in base)
    got = tuple(sum(ci * u[j] for ci, u in zip(c, PLANE_VECTORS)) for j in range(2))
    if got != (a, b) or min(c) < 0:
        raise AssertionError(f"plane combination failed for {(a, b)}: {c}")
    return c
