"""Torus characters of the four spaces in d-coordinates.

A character of GL(n_1) x ... x GL(n_f) restricted to the determinant-one
torus is a tuple of trace-zero blocks y_i.  Its d-coordinates are the
partial sums c_im = y_i1 + ... + y_im, so that

    y_i = c_i1 (1, -1, 0, ...) + c_i2 (0, 1, -1, 0, ...) + ...

The last block always belongs to the GL(2) factor acting on (v1, v2).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .geometry import ZERO, InputError, RVector, rat, rat_str, vec

HALF = Fraction(1, 2)


class CaseId(Enum):
    CASE1 = "Case1_D4"
    CASE2 = "Case2_E6"
    CASE3 = "Case3_D5"
    CASE4 = "Case4_E7"

    @property
    def number(self) -> int:
        return int(self.value[4])

    @property
    def label(self) -> str:
        return f"case{self.number}"

    @property
    def shape(self) -> tuple[int, ...]:
        return _SHAPES[self]

    @property
    def alternating(self) -> bool:
        return self in (CaseId.CASE3, CaseId.CASE4)

    @property
    def matrix_size(self) -> int:
        return self.shape[0]

    @property
    def form_degree(self) -> int:
        """Degree of F_x: det for 2x2/3x3 pencils, Pfaffian for 4x4/6x6."""
        n = self.matrix_size
        return n // 2 if self.alternating else n

    @classmethod
    def parse(cls, text: str) -> "CaseId":
        t = str(text).strip()
        for case in cls:
            if t in (case.value, case.label, case.name, str(case.number)):
                return case
        raise InputError(f"unknown case: {text!r}")


_SHAPES = {
    CaseId.CASE1: (2, 2, 2),
    CaseId.CASE2: (3, 3, 2),
    CaseId.CASE3: (4, 2),
    CaseId.CASE4: (6, 2),
}


def block_lengths(shape: Sequence[int]) -> tuple[int, ...]:
    return tuple(n - 1 for n in shape)


@dataclass(frozen=True, order=True)
class CoordinateId:
    i: int
    j: int
    k: int

    @property
    def index(self) -> str:
        return f"{self.i},{self.j}{self.k}"

    def __str__(self) -> str:
        return f"x_{{{self.index}}}"

    def weight_name(self) -> str:
        return f"d_{{{self.index}}}"


def coordinates(case: CaseId) -> tuple[CoordinateId, ...]:
    """All coordinates of the case, ordered by (i, j, k)."""
    n = case.matrix_size
    if case.alternating:
        pairs = [(j, k) for j in range(2, n + 1) for k in range(1, j)]
    else:
        pairs = [(j, k) for j in range(1, n + 1) for k in range(1, n + 1)]
    return tuple(CoordinateId(i, j, k) for i in (1, 2) for j, k in pairs)


def check_coordinate(case: CaseId, c: CoordinateId) -> None:
    n = case.matrix_size
    ok = c.i in (1, 2) and 1 <= c.j <= n and 1 <= c.k <= n
    if case.alternating:
        ok = ok and c.j > c.k
    if not ok:
        raise InputError(f"{c} is not a coordinate of {case.value}")


@dataclass(frozen=True)
class ExponentVector:
    """A point of t* in d-coordinates plus an optional lambda exponent."""

    d_blocks: tuple[RVector, ...]
    lambda_exp: Fraction | None = None

    @classmethod
    def make(cls, blocks: Iterable[Iterable], lambda_exp=None) -> "ExponentVector":
        return cls(tuple(vec(b) for b in blocks), None if lambda_exp is None else rat(lambda_exp))

    @classmethod
    def zero(cls, shape: Sequence[int], lambda_exp=None) -> "ExponentVector":
        return cls(tuple((ZERO,) * m for m in block_lengths(shape)),
                   None if lambda_exp is None else rat(lambda_exp))

    @classmethod
    def from_flat(cls, shape: Sequence[int], values: Sequence, lambda_exp=None) -> "ExponentVector":
        lengths = block_lengths(shape)
        if len(values) != sum(lengths):
            raise InputError("flat vector has the wrong length")
        blocks, pos = [], 0
        for m in lengths:
            blocks.append(vec(values[pos:pos + m]))
            pos += m
        return cls(tuple(blocks), None if lambda_exp is None else rat(lambda_exp))

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.d_blocks)

    def flat(self) -> RVector:
        return tuple(v for b in self.d_blocks for v in b)

    def with_lambda(self, value) -> "ExponentVector":
        return ExponentVector(self.d_blocks, None if value is None else rat(value))

    def _check(self, other: "ExponentVector") -> None:
        if self.lengths != other.lengths:
            raise InputError(f"block shapes differ: {self.lengths} vs {other.lengths}")

    def __add__(self, other: "ExponentVector") -> "ExponentVector":
        self._check(other)
        if self.lambda_exp is None and other.lambda_exp is None:
            lam = None
        else:
            lam = (self.lambda_exp or ZERO) + (other.lambda_exp or ZERO)
        return ExponentVector(
            tuple(tuple(a + b for a, b in zip(x, y)) for x, y in zip(self.d_blocks, other.d_blocks)), lam)

    def __neg__(self) -> "ExponentVector":
        return self.scale(-1)

    def __sub__(self, other: "ExponentVector") -> "ExponentVector":
        return self + (-other)

    def scale(self, q) -> "ExponentVector":
        q = rat(q)
        return ExponentVector(tuple(tuple(q * v for v in b) for b in self.d_blocks),
                              None if self.lambda_exp is None else q * self.lambda_exp)

    def __rmul__(self, q) -> "ExponentVector":
        return self.scale(q)

    def format(self) -> str:
        parts = []
        for b in self.d_blocks:
            if len(b) == 1:
                parts.append(rat_str(b[0]))
            else:
                parts.append("(" + ", ".join(rat_str(v) for v in b) + ")")
        text = "(" + ", ".join(parts) + ")"
        if self.lambda_exp is not None:
            text += f" [lambda {rat_str(self.lambda_exp)}]"
        return text

    def __str__(self) -> str:
        return self.format()

    def to_json(self) -> dict:
        return {
            "d": [[rat_str(v) for v in b] for b in self.d_blocks],
            "lambda": None if self.lambda_exp is None else rat_str(self.lambda_exp),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExponentVector":
        return cls.make(data["d"], data.get("lambda"))


def parse_exponent(text: str, shape: Sequence[int]) -> ExponentVector:
    """Read the nested-tuple notation, e.g. "((2/3, 1/3), (2/3, 1/3), 1/2)"."""
    values = re.findall(r"-?\d+(?:/\d+)?", text.replace("−", "-"))
    return ExponentVector.from_flat(shape, values)


# ---------------------------------------------------------------------------
# w-map


TStar = tuple[RVector, ...]


def w_map(d: ExponentVector, shape: Sequence[int]) -> TStar:
    if d.lengths != block_lengths(shape):
        raise InputError(f"blocks {d.lengths} do not match shape {tuple(shape)}")
    out = []
    for c in d.d_blocks:
        y = [c[0]] + [c[m] - c[m - 1] for m in range(1, len(c))] + [-c[-1]]
        out.append(tuple(y))
    return tuple(out)


def w_inverse(y: Sequence[Sequence]) -> ExponentVector:
    blocks = []
    for block in y:
        block = vec(block)
        if len(block) < 2:
            raise InputError("each block needs at least two entries")
        if sum(block) != 0:
            raise InputError(f"block {block} is not trace-zero")
        partial, acc = [], ZERO
        for v in block[:-1]:
            acc += v
            partial.append(acc)
        blocks.append(tuple(partial))
    return ExponentVector(tuple(blocks))


def trace_zero(block: Sequence) -> RVector:
    block = vec(block)
    mean = sum(block, ZERO) / len(block)
    return tuple(v - mean for v in block)


# ---------------------------------------------------------------------------
# weights from the group action


def character(case: CaseId, c: CoordinateId) -> tuple[tuple[int, ...], ...]:
    """Integer exponents of the diagonal torus entries scaling x_{i,jk}.

    Cases 1-2: g1 M(v g3) g2^t scales x_{i,jk} by a_j b_k c_i.
    Cases 3-4: g1 M(v g2) g1^t scales x_{i,jk} by a_j a_k c_i.
    """
    check_coordinate(case, c)
    shape = case.shape

    def unit(n, *idx):
        e = [0] * n
        for t in idx:
            e[t - 1] += 1
        return tuple(e)

    if case.alternating:
        return unit(shape[0], c.j, c.k), unit(2, c.i)
    return unit(shape[0], c.j), unit(shape[1], c.k), unit(2, c.i)


def derive_weight(case: CaseId, c: CoordinateId) -> ExponentVector:
    return w_inverse(tuple(trace_zero(e) for e in character(case, c)))


def rho_d0(case: CaseId) -> ExponentVector:
    """d-coordinates of -2 rho, rho being half the sum of the positive roots."""
    blocks = []
    for n in case.shape:
        rho = [ZERO] * n
        for j, k in combinations(range(n), 2):
            rho[j] += HALF
            rho[k] -= HALF
        blocks.append(tuple(-2 * v for v in rho))
    return w_inverse(blocks)


# ---------------------------------------------------------------------------
# transcribed tables


def _t(text: str) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in re.findall(r"-?\d+(?:/\d+)?", text))


# i = 1 entries as printed; keys are (j, k)
_TRANSCRIBED: dict[CaseId, dict[tuple[int, int], tuple[Fraction, ...]]] = {
    CaseId.CASE1: {
        (1, 1): _t("(1/2, 1/2, 1/2)"),
        (1, 2): _t("(1/2, -1/2, 1/2)"),
        (2, 1): _t("(-1/2, 1/2, 1/2)"),
    },
    CaseId.CASE2: {
        (1, 1): _t("((2/3, 1/3), (2/3, 1/3), 1/2)"),
        (1, 2): _t("((2/3, 1/3), (-1/3, 1/3), 1/2)"),
        (1, 3): _t("((2/3, 1/3), (-1/3, -2/3), 1/2)"),
        (2, 1): _t("((-1/3, 1/3), (2/3, 1/3), 1/2)"),
        (2, 2): _t("((-1/3, 1/3), (-1/3, 1/3), 1/2)"),
        (3, 1): _t("((-1/3, -2/3), (2/3, 1/3), 1/2)"),
    },
    CaseId.CASE3: {
        (2, 1): _t("((1/2, 1, 1/2), 1/2)"),
        (3, 1): _t("((1/2, 0, 1/2), 1/2)"),
        (4, 1): _t("((1/2, 0, -1/2), 1/2)"),
        (3, 2): _t("((-1/2, 0, 1/2), 1/2)"),
        (4, 2): _t("((-1/2, 0, -1/2), 1/2)"),
        (4, 3): _t("((-1/2, -1, -1/2), 1/2)"),
    },
    CaseId.CASE4: {
        (2, 1): _t("((2/3, 4/3, 1, 2/3, 1/3), 1/2)"),
        (3, 1): _t("((2/3, 1/3, 1, 2/3, 1/3), 1/2)"),
        (4, 1): _t("((2/3, 1/3, 0, 2/3, 1/3), 1/2)"),
        (5, 1): _t("((2/3, 1/3, 0, -1/3, 1/3), 1/2)"),
        (6, 1): _t("((2/3, 1/3, 0, -1/3, -2/3), 1/2)"),
        (3, 2): _t("((-1/3, 1/3, 1, 2/3, 1/3), 1/2)"),
        (4, 2): _t("((-1/3, 1/3, 0, 2/3, 1/3), 1/2)"),
        (5, 2): _t("((-1/3, 1/3, 0, -1/3, 1/3), 1/2)"),
        (6, 2): _t("((-1/3, 1/3, 0, -1/3, -2/3), 1/2)"),
        (4, 3): _t("((-1/3, -2/3, 0, 2/3, 1/3), 1/2)"),
        (5, 3): _t("((-1/3, -2/3, 0, -1/3, 1/3), 1/2)"),
        (6, 3): _t("((-1/3, -2/3, 0, -1/3, -2/3), 1/2)"),
        (5, 4): _t("((-1/3, -2/3, -1, -1/3, 1/3), 1/2)"),
        (6, 4): _t("((-1/3, -2/3, -1, -1/3, -2/3), 1/2)"),
        (6, 5): _t("((-1/3, -2/3, -1, -4/3, -2/3), 1/2)"),
    },
}


def flip_last_half(d: ExponentVector) -> ExponentVector:
    """The i=2 rule: the final entry 1/2 becomes -1/2."""
    last = d.d_blocks[-1]
    if last != (HALF,):
        raise InputError(f"final block of {d} is not (1/2)")
    return ExponentVector(d.d_blocks[:-1] + ((-HALF,),), d.lambda_exp)


@dataclass(frozen=True)
class WeightTable:
    case: CaseId
    entries: dict[CoordinateId, ExponentVector]
    derived_fill: frozenset[CoordinateId] = field(default_factory=frozenset)

    def __getitem__(self, c: CoordinateId) -> ExponentVector:
        check_coordinate(self.case, c)
        return self.entries[c]

    def to_json(self) -> dict:
        rows = []
        for c in coordinates(self.case):
            d = self.entries[c]
            rows.append({
                "i": c.i, "j": c.j, "k": c.k,
                "d": [rat_str(v) for v in d.flat()],
                "lambda": None if d.lambda_exp is None else rat_str(d.lambda_exp),
                "derived_fill": c in self.derived_fill,
            })
        return {"case": self.case.value, "entries": rows}

    @classmethod
    def from_json(cls, data: dict) -> "WeightTable":
        case = CaseId.parse(data["case"])
        entries, filled = {}, set()
        for row in data["entries"]:
            c = CoordinateId(row["i"], row["j"], row["k"])
            entries[c] = ExponentVector.from_flat(case.shape, row["d"], row.get("lambda"))
            if row.get("derived_fill"):
                filled.add(c)
        return cls(case, entries, frozenset(filled))


def transcribed_entries(case: CaseId) -> dict[CoordinateId, ExponentVector]:
    """Only the printed i=1 entries, as printed."""
    return {
        CoordinateId(1, j, k): ExponentVector.from_flat(case.shape, values)
        for (j, k), values in _TRANSCRIBED[case].items()
    }


def transcribed_weight_table(case: CaseId) -> WeightTable:
    """Printed entries, i=2 by the sign-flip rule, omissions filled by derivation."""
    printed = transcribed_entries(case)
    entries, filled = {}, set()
    for c in coordinates(case):
        base = printed.get(CoordinateId(1, c.j, c.k))
        if base is None:
            entries[c] = derive_weight(case, c)
            filled.add(c)
        else:
            entries[c] = base if c.i == 1 else flip_last_half(base)
    return WeightTable(case, entries, frozenset(filled))


def derived_weight_table(case: CaseId) -> WeightTable:
    return WeightTable(case, {c: derive_weight(case, c) for c in coordinates(case)})


@dataclass(frozen=True)
class Discrepancy:
    coordinate: CoordinateId
    source: str  # "printed" or "sign-flip"
    transcribed: ExponentVector
    derived: ExponentVector

    def to_json(self) -> dict:
        return {
            "coordinate": self.coordinate.index,
            "source": self.source,
            "transcribed": self.transcribed.format(),
            "derived": self.derived.format(),
        }


def weight_discrepancies(case: CaseId) -> list[Discrepancy]:
    """Every transcribed or sign-flipped entry that differs from the derivation."""
    table = transcribed_weight_table(case)
    out = []
    for c in coordinates(case):
        if c in table.derived_fill:
            continue
        derived = derive_weight(case, c)
        if table.entries[c] != derived:
            out.append(Discrepancy(c, "printed" if c.i == 1 else "sign-flip", table.entries[c], derived))
    return out


# ---------------------------------------------------------------------------
# Weyl group


Permutation = tuple[int, ...]


def _check_perm(p: Sequence[int], n: int) -> None:
    if sorted(p) != list(range(n)):
        raise InputError(f"{tuple(p)} is not a permutation of degree {n}")


def weyl_act(perms: Sequence[Permutation], y: TStar) -> TStar:
    """Entry j of block i moves to position perms[i][j]."""
    if len(perms) != len(y):
        raise InputError("one permutation per block is required")
    out = []
    for p, block in zip(perms, y):
        _check_perm(p, len(block))
        moved = [ZERO] * len(block)
        for j, v in enumerate(block):
            moved[p[j]] = v
        out.append(tuple(moved))
    return tuple(out)


def compose(p: Permutation, q: Permutation) -> Permutation:
    """(p o q)(j) = p[q[j]]."""
    return tuple(p[q[j]] for j in range(len(q)))


def sorting_permutations(y: TStar) -> tuple[Permutation, ...]:
    """Permutations that make every block weakly decreasing (stable order)."""
    perms = []
    for block in y:
        order = sorted(range(len(block)), key=lambda j: -block[j])
        p = [0] * len(block)
        for pos, j in enumerate(order):
            p[j] = pos
        perms.append(tuple(p))
    return tuple(perms)


def relabel(case: CaseId, perms: Sequence[Permutation], c: CoordinateId) -> CoordinateId:
    """The coordinate whose weight is the Weyl image of the weight of c."""
    if case.alternating:
        p1, p2 = perms
        a, b = p1[c.j - 1] + 1, p1[c.k - 1] + 1
        return CoordinateId(p2[c.i - 1] + 1, max(a, b), min(a, b))
    p1, p2, p3 = perms
    return CoordinateId(p3[c.i - 1] + 1, p1[c.j - 1] + 1, p2[c.k - 1] + 1)


def weight_sum(table: WeightTable, combo: Sequence[tuple[CoordinateId, object]]) -> ExponentVector:
    total = ExponentVector.zero(table.case.shape)
    for c, q in combo:
        total = total + table[c].scale(rat(q))
    return total


def total_weight(case: CaseId) -> ExponentVector:
    table = derived_weight_table(case)
    return weight_sum(table, [(c, 1) for c in coordinates(case)])


_TERM = re.compile(r"([+-]?)\s*(\d+(?:/\d+)?)?\s*d_\{?(\d),(\d)(\d)\}?")


def parse_combo(text: str) -> list[tuple[CoordinateId, Fraction]]:
    """Read "3d_{1,43} + 2d_{2,21}" into (coordinate, coefficient) pairs."""
    cleaned = text.replace("−", "-").replace(" ", "")
    combo, pos = [], 0
    for m in _TERM.finditer(cleaned):
        if m.start() != pos:
            raise InputError(f"cannot parse combination {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        coeff = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        combo.append((CoordinateId(int(m.group(3)), int(m.group(4)), int(m.group(5))), sign * coeff))
        pos = m.end()
    if pos != len(cleaned) or not combo:
        raise InputError(f"cannot parse combination {text!r}")
    return combo


def format_combo(combo: Sequence[tuple[CoordinateId, Fraction]]) -> str:
    parts = []
    for n, (c, q) in enumerate(combo):
        q = rat(q)
        sign = "-" if q < 0 else "+"
        mag = abs(q)
        coeff = "" if mag == 1 else rat_str(mag)
        term = f"{coeff}{c.weight_name()}"
        if n == 0:
            parts.append(term if q > 0 else f"-{term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts)
