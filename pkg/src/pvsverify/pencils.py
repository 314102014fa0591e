"""Matrix pencils M_x(v) = v1 x1 + v2 x2 and their binary forms F_x.

For 2x2 and 3x3 pencils F_x is det M_x(v); for 4x4 and 6x6 alternating
pencils it is the Pfaffian.  Binary forms store the coefficient of
v1^(deg-m) v2^m at index m.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from math import isqrt
from typing import Mapping, Sequence

from .fields import RATIONALS, Field, GFElement, PrimeField
from .geometry import InputError
from .weights import CaseId, CoordinateId, coordinates

Matrix = tuple[tuple, ...]


def _matrix(rows, field: Field) -> Matrix:
    return tuple(tuple(field(v) for v in row) for row in rows)


def _is_alternating(m: Matrix) -> bool:
    n = len(m)
    return all(not m[j][j] for j in range(n)) and all(
        m[j][k] == -m[k][j] for j in range(n) for k in range(j))


@dataclass(frozen=True)
class MatrixPencil:
    case: CaseId
    field: Field
    x1: Matrix
    x2: Matrix

    def __post_init__(self):
        n = self.case.matrix_size
        for m in (self.x1, self.x2):
            if len(m) != n or any(len(row) != n for row in m):
                raise InputError(f"{self.case.value} needs {n}x{n} matrices")
            if self.case.alternating and not _is_alternating(m):
                raise InputError("matrices must be alternating")

    @property
    def structure(self) -> str:
        return "Alternating" if self.case.alternating else "General"

    @classmethod
    def from_coords(cls, case: CaseId, field: Field, values) -> "MatrixPencil":
        """Build from a mapping CoordinateId -> value, or a sequence in coordinates() order."""
        coords = coordinates(case)
        if not isinstance(values, Mapping):
            values = list(values)
            if len(values) != len(coords):
                raise InputError(f"expected {len(coords)} coordinates")
            values = dict(zip(coords, values))
        n = case.matrix_size
        zero = field.zero
        mats = [[[zero] * n for _ in range(n)] for _ in range(2)]
        for c, v in values.items():
            if c not in coords:
                raise InputError(f"{c} is not a coordinate of {case.value}")
            v = field(v)
            mats[c.i - 1][c.j - 1][c.k - 1] = v
            if case.alternating:
                mats[c.i - 1][c.k - 1][c.j - 1] = -v
        return cls(case, field, tuple(map(tuple, mats[0])), tuple(map(tuple, mats[1])))

    def coordinate(self, c: CoordinateId):
        return (self.x1, self.x2)[c.i - 1][c.j - 1][c.k - 1]

    def coords(self) -> tuple:
        return tuple(self.coordinate(c) for c in coordinates(self.case))

    def nonzero_coordinates(self) -> tuple[CoordinateId, ...]:
        return tuple(c for c in coordinates(self.case) if self.coordinate(c))

    def scale(self, s) -> "MatrixPencil":
        s = self.field(s)
        return MatrixPencil(self.case, self.field,
                            tuple(tuple(s * v for v in row) for row in self.x1),
                            tuple(tuple(s * v for v in row) for row in self.x2))

    def to_json(self) -> dict:
        enc = self.field.encode
        return {
            "case": self.case.value,
            "field": self.field.tag,
            "x1": [[enc(v) for v in row] for row in self.x1],
            "x2": [[enc(v) for v in row] for row in self.x2],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MatrixPencil":
        field = Field.parse(data["field"])
        case = CaseId.parse(data["case"])
        if isinstance(field, PrimeField):
            for m in (data["x1"], data["x2"]):
                for row in m:
                    for v in row:
                        if not isinstance(v, int) or not 0 <= v < field.p:
                            raise InputError(f"F_p entries must be integers in [0, {field.p})")
        return cls(case, field, _matrix(data["x1"], field), _matrix(data["x2"], field))


# ---------------------------------------------------------------------------
# determinants and Pfaffians


def _perm_sign(p: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(p)
    for start in range(len(p)):
        if seen[start]:
            continue
        length, j = 0, start
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def permutation_terms(n: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    return tuple((_perm_sign(p), p) for p in permutations(range(n)))


@lru_cache(maxsize=None)
def matching_terms(n: int) -> tuple[tuple[int, tuple[tuple[int, int], ...]], ...]:
    """Signed perfect matchings of {0..n-1}: Pf = sum sign * prod m[a][b]."""
    if n % 2:
        raise InputError("Pfaffian needs even size")

    def rec(items):
        if not items:
            yield ()
            return
        a, rest = items[0], items[1:]
        for idx, b in enumerate(rest):
            for tail in rec(rest[:idx] + rest[idx + 1:]):
                yield ((a, b),) + tail

    terms = []
    for matching in rec(tuple(range(n))):
        flat = [v for pair in matching for v in pair]
        terms.append((_perm_sign(flat), matching))
    return tuple(terms)


def pfaffian(m: Sequence[Sequence]):
    n = len(m)
    if n % 2 or any(len(row) != n for row in m):
        raise InputError("Pfaffian needs a square matrix of even size")
    if not _is_alternating(tuple(tuple(r) for r in m)):
        raise InputError("Pfaffian needs an alternating matrix")
    zero = m[0][0] - m[0][0]
    total = zero
    for sign, matching in matching_terms(n):
        term = sign
        for a, b in matching:
            term = term * m[a][b]
        total = total + term
    return total


def det_leibniz(m: Sequence[Sequence]):
    n = len(m)
    zero = m[0][0] - m[0][0]
    total = zero
    for sign, p in permutation_terms(n):
        term = sign
        for r in range(n):
            term = term * m[r][p[r]]
        total = total + term
    return total


def det_gauss(m: Sequence[Sequence]):
    """Determinant by exact Gaussian elimination (field elements)."""
    a = [list(row) for row in m]
    n = len(a)
    one = a[0][0] ** 0 if n else 1
    det = one
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return a[0][0] - a[0][0]
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c]
        inv = 1 / a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] * inv
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


# ---------------------------------------------------------------------------
# binary forms


@dataclass(frozen=True)
class BinaryForm:
    field: Field
    coefficients: tuple

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, v1, v2):
        d = self.degree
        total = self.field.zero
        for m, a in enumerate(self.coefficients):
            if a:
                total = total + a * v1 ** (d - m) * v2 ** m
        return total

    def is_zero(self) -> bool:
        return not any(self.coefficients)

    def to_json(self) -> dict:
        return {"field": self.field.tag, "coefficients": [self.field.encode(a) for a in self.coefficients]}


def _poly_mul(a: list, b: list) -> list:
    out = [a[0] - a[0]] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] = out[i + j] + x * y
    return out


def f_x(x: MatrixPencil) -> BinaryForm:
    """F_x expanded symbolically over the signed permutation or matching terms."""
    n = x.case.matrix_size
    field = x.field
    zero = field.zero
    deg = x.case.form_degree
    total = [zero] * (deg + 1)

    def linear(a, b):
        return [x.x1[a][b], x.x2[a][b]]

    if x.case.alternating:
        terms = [(s, list(pairs)) for s, pairs in matching_terms(n)]
    else:
        terms = [(s, [(r, p[r]) for r in range(n)]) for s, p in permutation_terms(n)]
    for sign, pairs in terms:
        poly = [field.one * sign]
        for a, b in pairs:
            poly = _poly_mul(poly, linear(a, b))
            if not any(poly):
                break
        else:
            total = [t + q for t, q in zip(total, poly)]
    return BinaryForm(field, tuple(total))


def discriminant(f: BinaryForm):
    """Discriminant of a binary quadratic or cubic, valid in every characteristic."""
    if f.degree == 2:
        a, b, c = f.coefficients
        return b * b - 4 * a * c
    if f.degree == 3:
        a, b, c, d = f.coefficients
        return (b * b * c * c - 4 * a * c * c * c - 4 * b * b * b * d
                - 27 * a * a * d * d + 18 * a * b * c * d)
    raise InputError("discriminant is implemented for degrees 2 and 3")


def is_semistable_form(f: BinaryForm) -> bool:
    return not f.is_zero() and bool(discriminant(f))


def is_semistable(x: MatrixPencil) -> bool:
    return is_semistable_form(f_x(x))


def _integer_divisors(n: int) -> list[int]:
    n = abs(n)
    out = set()
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            out.add(d)
            out.add(n // d)
    return sorted(out)


def projective_roots(f: BinaryForm) -> list[tuple]:
    """Points (v1 : v2) of P^1 over the base field where f vanishes (f nonzero)."""
    if f.is_zero():
        raise InputError("the zero form vanishes everywhere")
    field = f.field
    coeffs = f.coefficients
    roots = []
    if not coeffs[0]:
        roots.append((field.one, field.zero))
    if isinstance(field, PrimeField):
        for t in field.elements():
            if not f(t, field.one):
                roots.append((t, field.one))
        return roots
    # rationals: t = v1/v2 is a root of sum a_m t^(deg-m); rational root theorem
    scale = 1
    for a in coeffs:
        scale = scale * a.denominator // _gcd(scale, a.denominator)
    ints = [int(a * scale) for a in coeffs]
    while ints and ints[0] == 0:
        ints = ints[1:]  # drop the factors at infinity
    if len(ints) <= 1:
        return roots
    if ints[-1] == 0:
        roots.append((field.zero, field.one))
    low = ints
    while low[-1] == 0:
        low = low[:-1]
    if len(low) > 1:
        seen = set()
        for p in _integer_divisors(low[-1]):
            for q in _integer_divisors(low[0]):
                for t in (Fraction(p, q), Fraction(-p, q)):
                    if t not in seen:
                        seen.add(t)
                        if not f(t, field.one):
                            roots.append((t, field.one))
    return roots


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def rational_root_free(f: BinaryForm) -> bool:
    if f.is_zero():
        return False
    return not projective_roots(f)


def in_L0(x: MatrixPencil) -> bool:
    f = f_x(x)
    if not is_semistable_form(f):
        return False
    if x.case is CaseId.CASE4:
        return True
    return rational_root_free(f)


# ---------------------------------------------------------------------------
# group action


@dataclass(frozen=True)
class GroupElement:
    field: Field
    factors: tuple[Matrix, ...]

    @classmethod
    def make(cls, field: Field, factors) -> "GroupElement":
        mats = tuple(_matrix(f, field) for f in factors)
        for m in mats:
            if not det_gauss(m):
                raise InputError("group factors must be invertible")
        return cls(field, mats)


def identity_element(case: CaseId, field: Field) -> GroupElement:
    mats = []
    for n in case.shape:
        mats.append([[1 if r == c else 0 for c in range(n)] for r in range(n)])
    return GroupElement.make(field, mats)


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    n, m, k = len(a), len(b[0]), len(b)
    zero = a[0][0] - a[0][0]
    out = []
    for r in range(n):
        row = []
        for c in range(m):
            s = zero
            for t in range(k):
                s = s + a[r][t] * b[t][c]
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def _transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def _lincomb(s1, a: Matrix, s2, b: Matrix) -> Matrix:
    return tuple(tuple(s1 * u + s2 * v for u, v in zip(ra, rb)) for ra, rb in zip(a, b))


def act(g: GroupElement, x: MatrixPencil) -> MatrixPencil:
    """g M_x(v) = g1 M_x(v g_last) g_mid^t, with g_mid = g1 for alternating pencils."""
    if g.field != x.field:
        raise InputError("group element and pencil live over different fields")
    shape = x.case.shape
    if len(g.factors) != len(shape) or any(len(f) != n for f, n in zip(g.factors, shape)):
        raise InputError(f"group element does not match shape {shape}")
    g1 = g.factors[0]
    gmid = g1 if x.case.alternating else g.factors[1]
    h = g.factors[-1]
    # M_x(v h) = v1 (h00 x1 + h01 x2) + v2 (h10 x1 + h11 x2)
    y1 = _lincomb(h[0][0], x.x1, h[0][1], x.x2)
    y2 = _lincomb(h[1][0], x.x1, h[1][1], x.x2)
    gt = _transpose(gmid)
    return MatrixPencil(x.case, x.field, _matmul(_matmul(g1, y1), gt), _matmul(_matmul(g1, y2), gt))


def torus_element(case: CaseId, field: Field, diagonals: Sequence[Sequence]) -> GroupElement:
    mats = []
    for n, diag in zip(case.shape, diagonals):
        if len(diag) != n:
            raise InputError("diagonal has the wrong length")
        mats.append([[diag[r] if r == c else 0 for c in range(n)] for r in range(n)])
    return GroupElement.make(field, mats)
