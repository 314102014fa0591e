"""Exponent calculus for the D5 and E7 strata.

Everything here lives in exponent space: a d-vector (the t-exponent in
d-coordinates, GL(2) slot last) plus a lambda exponent.  On the region
tau >= 0 a monomial t^{w(c)} is dominated by t^{w(c')} exactly when
c <= c' entrywise, so every bound below is an entrywise sign condition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .geometry import (
    ZERO,
    InputError,
    dot,
    linprog_exact,
    rat,
    rat_str,
    solve_plane_combination,
    PLANE_VECTORS,
)
from .weights import (
    CaseId,
    CoordinateId,
    ExponentVector,
    coordinates,
    derived_weight_table,
    format_combo,
    parse_combo,
    rho_d0,
    transcribed_weight_table,
    weight_sum,
)

F = Fraction


def _x(label: str) -> CoordinateId:
    i, jk = label.split(",")
    return CoordinateId(int(i), int(jk[0]), int(jk[1]))


def _xs(labels: str) -> frozenset[CoordinateId]:
    return frozenset(_x(s) for s in labels.split())


def _ev(shape_case: CaseId, text: str, lam=None) -> ExponentVector:
    values = [F(v) for v in text.replace(",", " ").split()]
    return ExponentVector.from_flat(shape_case.shape, values, lam)


def _table(case: CaseId):
    return transcribed_weight_table(case)


# ---------------------------------------------------------------------------
# index sets and h_I


@dataclass(frozen=True)
class IndexSet:
    case: CaseId
    members: frozenset[CoordinateId]

    def __post_init__(self):
        if self.case not in (CaseId.CASE3, CaseId.CASE4):
            raise InputError("index sets are defined for the alternating cases")
        allowed = set(coordinates(self.case))
        bad = [c for c in self.members if c not in allowed]
        if bad:
            raise InputError(f"{bad[0]} is not in I_0 for {self.case.value}")

    def __len__(self) -> int:
        return len(self.members)

    def sorted(self) -> tuple[CoordinateId, ...]:
        return tuple(sorted(self.members))

    def without(self, removed: Sequence[CoordinateId]) -> "IndexSet":
        return IndexSet(self.case, self.members - frozenset(removed))

    def to_json(self) -> list[str]:
        return [c.index for c in self.sorted()]


def full_index_set(case: CaseId) -> IndexSet:
    """I_0: every pair k < j for both matrices."""
    return IndexSet(case, frozenset(coordinates(case)))


def c_I(index_set: IndexSet) -> ExponentVector:
    """Entrywise sum of the negative entries of d_{i,jk} over I; lambda exponent -#I."""
    table = _table(index_set.case)
    n = len(table[coordinates(index_set.case)[0]].flat())
    total = [ZERO] * n
    for c in index_set.members:
        for l, v in enumerate(table[c].flat()):
            if v < 0:
                total[l] += v
    return ExponentVector.from_flat(index_set.case.shape, total, -len(index_set))


@dataclass(frozen=True)
class TorusLogPoint:
    tau: tuple[Fraction, ...]  # one log-ratio per d-coordinate
    ell: Fraction  # log lambda

    def to_json(self) -> dict:
        return {"tau": [rat_str(v) for v in self.tau], "ell": rat_str(self.ell)}


def _hinge_terms(index_set: IndexSet, p: TorusLogPoint) -> list[Fraction]:
    table = _table(index_set.case)
    return [-p.ell - dot(table[c].flat(), p.tau) for c in index_set.sorted()]


def log_h(index_set: IndexSet, p: TorusLogPoint) -> Fraction:
    """log of prod_{I} sup(1, lambda^-1 t^-gamma) at log lambda = ell, log t = tau."""
    return sum((max(ZERO, v) for v in _hinge_terms(index_set, p)), ZERO)


def h_bound(index_set: IndexSet, p: TorusLogPoint) -> Fraction:
    """log of sup(1, lambda^{-#I}) t^{-w(c_I)}."""
    c = c_I(index_set)
    return max(ZERO, -len(index_set) * p.ell) - dot(c.flat(), p.tau)


def _subset_sums_max(terms: Sequence[Fraction]) -> Fraction:
    """max over all subsets of the sum of terms, by brute force over 2^n masks."""
    n = len(terms)
    if n == 0:
        return ZERO
    den = 1
    for v in terms:
        den = den * v.denominator // np.gcd(den, v.denominator)
    ints = np.array([int(v * den) for v in terms], dtype=object if den > 1 << 40 else np.int64)
    masks = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    sums = masks @ ints
    return F(int(sums.max()), den)


H_CHECKS = ("h-monotone", "h-additive", "h-subset-max", "h-bound")
EXHAUSTIVE_SUBSETS = 12


def _random_point(rng: np.random.Generator, dim: int) -> TorusLogPoint:
    tau = tuple(F(int(rng.integers(0, 25)), int(rng.integers(1, 7))) for _ in range(dim))
    ell = F(int(rng.integers(-30, 31)), int(rng.integers(1, 7)))
    return TorusLogPoint(tau, ell)


def _random_subset(rng: np.random.Generator, pool: Sequence[CoordinateId], prob: float) -> frozenset:
    keep = rng.random(len(pool)) < prob
    return frozenset(c for c, k in zip(pool, keep) if k)


def verify_h_lemmas(case: CaseId, trials: int = 1000, seed: int = 1) -> dict:
    """Property checks of log h_I on random points with tau >= 0.

    h-monotone: I1 in I2 gives log_h(I1) <= log_h(I2).
    h-additive: log_h is additive over a disjoint split.
    h-subset-max: log_h(I) is the max over subsets I' of sum_{I'} (-ell - <d, tau>);
    all 2^#I subsets when #I <= 12, else 4096 sampled subsets plus the positive-term one.
    h-bound: log_h(I) <= max(0, -#I ell) + <-c_I, tau>.
    """
    rng = np.random.default_rng([seed, case.number])
    pool = coordinates(case)
    dim = len(_table(case)[pool[0]].flat())
    report = {name: {"tested": 0, "violations": []} for name in H_CHECKS}
    report["h-subset-max"]["exhaustive"] = 0

    def fail(name, **data):
        if len(report[name]["violations"]) < 10:
            report[name]["violations"].append({k: v for k, v in data.items()})
        report[name].setdefault("violation_count", 0)
        report[name]["violation_count"] += 1

    for trial in range(trials):
        p = _random_point(rng, dim)
        # alternate small sets (exhaustive subset check) with large ones
        prob = float(rng.uniform(0.05, 0.4)) if trial % 2 == 0 else float(rng.uniform(0.3, 1.0))
        members = _random_subset(rng, pool, prob)
        if trial == 0:
            members = frozenset(pool)
        big = IndexSet(case, members)
        small = IndexSet(case, _random_subset(rng, sorted(members), 0.5))
        part = _random_subset(rng, sorted(members), 0.5)
        left, right = IndexSet(case, part), IndexSet(case, members - part)
        value = log_h(big, p)
        where = {"I": big.to_json(), "point": p.to_json()}

        report["h-monotone"]["tested"] += 1
        if not log_h(small, p) <= value:
            fail("h-monotone", I1=small.to_json(), **where)

        report["h-additive"]["tested"] += 1
        if log_h(left, p) + log_h(right, p) != value:
            fail("h-additive", split=left.to_json(), **where)

        report["h-subset-max"]["tested"] += 1
        terms = _hinge_terms(big, p)
        if len(big) <= EXHAUSTIVE_SUBSETS:
            report["h-subset-max"]["exhaustive"] += 1
            if _subset_sums_max(terms) != value:
                fail("h-subset-max", **where)
        else:
            masks = rng.random((4096, len(terms))) < 0.5
            best = sum((t for t in terms if t > 0), ZERO)
            den = 1
            for t in terms:
                den = den * t.denominator // np.gcd(den, t.denominator)
            ints = np.array([int(t * den) for t in terms], dtype=np.int64)
            sampled = F(int((masks.astype(np.int64) @ ints).max()), den)
            if best != value or sampled > value:
                fail("h-subset-max", **where)

        report["h-bound"]["tested"] += 1
        if not value <= h_bound(big, p):
            fail("h-bound", **where)

    for name in H_CHECKS:
        report[name].setdefault("violation_count", 0)
    return report


# ---------------------------------------------------------------------------
# identities


@dataclass(frozen=True)
class IdentityCheck:
    label: str
    combo: tuple[tuple[CoordinateId, Fraction], ...]
    expected: ExponentVector
    value: ExponentVector
    holds: bool
    anchor: str
    literal: str | None = None  # the combination as displayed, when it is corrected
    literal_holds: bool | None = None
    note: str = ""

    def to_json(self) -> dict:
        out = {
            "id": f"{self.label}-identity",
            "label": self.label,
            "combo": format_combo(self.combo),
            "expected": self.expected.to_json(),
            "value": self.value.to_json(),
            "holds": self.holds,
            "anchor": self.anchor,
        }
        if self.literal is not None:
            out.update(literal=self.literal, literal_holds=self.literal_holds, note=self.note)
        return out


# (label, combination, expected value, displayed combination if corrected, note)
_IDENTITIES: dict[CaseId, list[tuple]] = {
    CaseId.CASE1: [
        ("case1-interior-three", "d_{1,12} + d_{1,21} + d_{2,11}", "1/2 1/2 1/2", None, ""),
    ],
    CaseId.CASE2: [
        ("case2-pair", "d_{1,12} + d_{1,21}", "1/3 2/3 1/3 2/3 1", None, ""),
        ("case2-shift", "d_{2,11} - d_{2,12}", "0 0 1 0 0", None, ""),
        ("case2-three", "3d_{1,21} + 2d_{1,13} + 2d_{2,12}", "5/3 7/3 2/3 1/3 3/2", None, ""),
        ("case2-four", "d_{1,13} + d_{1,22} + d_{1,31} + d_{2,11}", "2/3 1/3 2/3 1/3 1", None, ""),
        ("case2-five", "d_{1,13} + d_{1,22} + d_{1,31} + d_{2,12} + d_{2,21}", "1/3 2/3 1/3 2/3 1/2", None, ""),
    ],
    CaseId.CASE3: [
        ("case3-L3", "d_{1,32} + d_{1,41}", "0 0 0 1", None, ""),
    ],
    CaseId.CASE4: [
        ("case4-L2", "2d_{1,42} + d_{2,61}", "0 1 0 1 0 1/2", None, ""),
        ("case4-L4", "d_{1,43} + 2d_{1,51}", "1 0 0 0 1 3/2", None, ""),
        ("case4-L5", "d_{1,43} + d_{1,52} + d_{2,61}", "0 0 0 0 0 1/2", None, ""),
        ("case4-L7", "3d_{1,43} + 2d_{1,62} + 4d_{2,51}", "1 0 0 0 1 1/2", None, ""),
        ("case4-L8", "3d_{1,43} + 2d_{2,21}", "1/3 2/3 2 10/3 5/3 1/2", None, ""),
        ("case4-L9", "2d_{1,51} + d_{2,43}", "1 0 0 0 1 1/2", None, ""),
        ("case4-L10", "d_{1,61} + d_{1,52} + d_{2,43}", "0 0 0 0 0 1/2", None, ""),
        ("case4-L11", "3d_{1,52} + 2d_{2,41}", "1/3 5/3 0 1/3 5/3 1/2", "3d_{1,52} + 2d_{1,41}",
         "x_{1,41} vanishes on this stratum and the nonzero coordinate is x_{2,41}; "
         "the displayed d_{1,41} gives last entry 5/2"),
        ("case4-L12-a", "3d_{1,61} + 2d_{1,53} + 4d_{2,42}", "0 1 0 1 0 1/2", None, ""),
        ("case4-L12-b", "4d_{1,61} + 2d_{1,53} + 4d_{2,42}", "2/3 4/3 0 2/3 -2/3 1", None, ""),
        ("case4-L12-c", "d_{1,61} + d_{1,53} + 2d_{2,42}", "-1/3 1/3 0 2/3 1/3 0", None, ""),
        ("case4-L13-a", "3d_{1,61} + 2d_{1,54} + 4d_{2,32}", "0 1 2 1 0 1/2", None, ""),
        ("case4-L13-b", "d_{1,61} + d_{2,32}", "1/3 2/3 1 1/3 -1/3 0", None, ""),
        ("case4-L13-c", "d_{1,61} + d_{1,54} + 2d_{2,32}", "-1/3 1/3 1 2/3 1/3 0", None, ""),
        ("case4-L15", "2d_{1,62} + 2d_{1,53} + 3d_{2,41}", "2/3 1/3 0 2/3 1/3 1/2", None, ""),
        ("case4-L16", "2d_{1,62} + 2d_{1,54} + 3d_{2,31}", "2/3 1/3 1 2/3 1/3 1/2", None, ""),
        ("case4-L17", "3d_{1,53} + 2d_{2,21}", "1/3 2/3 2 1/3 5/3 1/2", None, ""),
        ("case4-L18", "2d_{1,63} + 2d_{1,54} + 3d_{2,21}", "2/3 4/3 1 2/3 1/3 1/2", None, ""),
    ],
}


def _anchor(combo_text: str, expected: ExponentVector) -> str:
    if combo_text == "d_{2,11} - d_{2,12}":
        return "d_{2,11} = d_{2,12} + " + expected.format()
    return f"{combo_text} = {expected.format()}"


def check_identities(case: CaseId) -> list[IdentityCheck]:
    table = _table(case)
    out = []
    for label, text, expected_text, literal, note in _IDENTITIES[case]:
        combo = tuple(parse_combo(text))
        expected = _ev(case, expected_text)
        value = weight_sum(table, combo).with_lambda(None)
        lit_holds = None
        if literal is not None:
            lit_holds = weight_sum(table, parse_combo(literal)).with_lambda(None) == expected
        anchor = _anchor(literal or text, expected)
        out.append(IdentityCheck(label, combo, expected, value, value == expected, anchor,
                                 literal, lit_holds, note))
    return out


# ---------------------------------------------------------------------------
# convergence certificates


@dataclass(frozen=True)
class Direction:
    vector: ExponentVector  # lambda_exp = number of coordinate factors
    label: str
    bounds: str | None = None  # the weight combination this vector bounds from below

    def to_json(self) -> dict:
        out = {"label": self.label, "vector": self.vector.to_json()}
        if self.bounds:
            out["bounds"] = self.bounds
        return out


def _parts(v: ExponentVector) -> tuple[tuple[Fraction, ...], Fraction]:
    return v.flat(), (v.lambda_exp or ZERO)


@dataclass(frozen=True)
class ConvergenceCertificate:
    base: ExponentVector
    directions: tuple[Direction, ...]
    coefficients: tuple[Fraction, ...]
    ray: tuple[Fraction, ...]
    threshold: Fraction | None = None  # inf of sum of coefficients over the closure
    stratum: str | None = None
    vertex: tuple[Fraction, Fraction] | None = None
    form: str | None = None

    def residual(self) -> tuple[tuple[Fraction, ...], Fraction]:
        d, lam = _parts(self.base)
        d = list(d)
        for n, dr in zip(self.coefficients, self.directions):
            dd, dl = _parts(dr.vector)
            d = [a - n * b for a, b in zip(d, dd)]
            lam -= n * dl
        return tuple(d), lam

    def ray_sum(self) -> tuple[tuple[Fraction, ...], Fraction]:
        d = [ZERO] * len(self.base.flat())
        lam = ZERO
        for r, dr in zip(self.ray, self.directions):
            dd, dl = _parts(dr.vector)
            d = [a + r * b for a, b in zip(d, dd)]
            lam += r * dl
        return tuple(d), lam

    def validate(self) -> bool:
        if any(n < 0 for n in self.coefficients) or any(r < 0 for r in self.ray):
            return False
        d, lam = self.residual()
        if not (all(v < 0 for v in d) and lam < 0):
            return False
        rd, rl = self.ray_sum()
        return all(v >= 0 for v in rd) and rl > 0

    def to_json(self) -> dict:
        d, lam = self.residual()
        return {
            "stratum": self.stratum,
            "form": self.form,
            "vertex": None if self.vertex is None else [rat_str(v) for v in self.vertex],
            "base": self.base.to_json(),
            "directions": [dr.to_json() for dr in self.directions],
            "coefficients": [rat_str(v) for v in self.coefficients],
            "residual": {"d": [rat_str(v) for v in d], "lambda": rat_str(lam)},
            "ray": [rat_str(v) for v in self.ray],
            "threshold": None if self.threshold is None else rat_str(self.threshold),
            "valid": self.validate(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvergenceCertificate":
        return cls(
            base=ExponentVector.from_json(data["base"]),
            directions=tuple(Direction(ExponentVector.from_json(d["vector"]), d["label"], d.get("bounds"))
                             for d in data["directions"]),
            coefficients=tuple(rat(v) for v in data["coefficients"]),
            ray=tuple(rat(v) for v in data["ray"]),
            threshold=None if data.get("threshold") is None else rat(data["threshold"]),
            stratum=data.get("stratum"),
            vertex=None if data.get("vertex") is None else tuple(rat(v) for v in data["vertex"]),
            form=data.get("form"),
        )


@dataclass(frozen=True)
class Refutation:
    """y >= 0, y != 0 on the rows (d entries then lambda) with y.dir <= 0 for every
    direction and y.base >= 0, so no nonnegative combination drives base negative.
    For a missing ray: y >= 0 on the d entries with y.dir_d <= -dir_lambda."""

    reason: str
    functional: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {"reason": self.reason, "functional": [rat_str(v) for v in self.functional]}

    def validate(self, base: ExponentVector, directions: Sequence[Direction]) -> bool:
        y = self.functional
        if any(v < 0 for v in y) or not any(y):
            return False
        if self.reason == "no-ray":
            return all(dot(y, _parts(dr.vector)[0]) <= -_parts(dr.vector)[1] for dr in directions)
        rows = lambda v: _parts(v)[0] + (_parts(v)[1],)
        return dot(y, rows(base)) >= 0 and all(dot(y, rows(dr.vector)) <= 0 for dr in directions)


class CertificateError(Exception):
    pass


def _as_direction(d) -> Direction:
    if isinstance(d, Direction):
        return d
    return Direction(d, d.format())


def find_certificate(base: ExponentVector, directions: Sequence) -> ConvergenceCertificate | Refutation:
    """Nonnegative N with base - sum N dir < 0 in every entry (lambda included),
    plus a ray r >= 0 with sum r dir >= 0 in the d entries and positive lambda."""
    dirs = tuple(_as_direction(d) for d in directions)
    if not dirs:
        raise InputError("find_certificate needs at least one direction")
    bd, bl = _parts(base)
    cols = [_parts(dr.vector) for dr in dirs]
    m, n_d = len(dirs), len(bd)
    rows_d = [[-cols[i][0][l] for i in range(m)] for l in range(n_d)]
    row_l = [-cols[i][1] for i in range(m)]

    # A: maximize the uniform slack s <= 1
    a_ub = [r + [1] for r in rows_d] + [row_l + [1], [0] * m + [1]]
    b_ub = [-v for v in bd] + [-bl, 1]
    res = linprog_exact([0] * m + [1], a_ub, b_ub)
    if res.status != "optimal" or res.value <= 0:
        return _refute(base, dirs)
    s = res.value
    # B: smallest total coefficient with that slack
    a_ub = [r for r in rows_d] + [row_l]
    b_ub = [-v - s for v in bd] + [-bl - s]
    res_b = linprog_exact([-1] * m, a_ub, b_ub)
    coeffs = res_b.x
    # threshold: smallest total coefficient on the closure (d entries only)
    res_t = linprog_exact([-1] * m, rows_d, [-v for v in bd])
    threshold = -res_t.value if res_t.status == "optimal" else None

    ray_lp = linprog_exact(
        [c[1] for c in cols],
        [[-cols[i][0][l] for i in range(m)] for l in range(n_d)] + [[1] * m],
        [0] * n_d + [1],
    )
    if ray_lp.status != "optimal" or ray_lp.value <= 0:
        return _refute_ray(dirs)
    cert = ConvergenceCertificate(base, dirs, tuple(coeffs), tuple(ray_lp.x), threshold)
    if not cert.validate():
        raise AssertionError("certificate failed to re-validate")
    return cert


def _refute(base: ExponentVector, dirs: Sequence[Direction]) -> Refutation:
    bd, bl = _parts(base)
    rows = [list(_parts(dr.vector)[0]) + [_parts(dr.vector)[1]] for dr in dirs]
    brow = list(bd) + [bl]
    n = len(brow)
    res = linprog_exact(
        [0] * n,
        a_ub=rows + [[-v for v in brow]],
        b_ub=[0] * len(rows) + [0],
        a_eq=[[1] * n],
        b_eq=[1],
    )
    if res.status != "optimal":
        raise AssertionError("neither a certificate nor a refutation exists")
    ref = Refutation("infeasible", tuple(res.x))
    if not ref.validate(base, dirs):
        raise AssertionError("refutation failed to validate")
    return ref


def _refute_ray(dirs: Sequence[Direction]) -> Refutation:
    n = len(_parts(dirs[0].vector)[0])
    rows = [list(_parts(dr.vector)[0]) for dr in dirs]
    res = linprog_exact([0] * n, rows, [-_parts(dr.vector)[1] for dr in dirs])
    if res.status != "optimal":
        raise AssertionError("neither a ray nor a refutation exists")
    ref = Refutation("no-ray", tuple(res.x))
    if not ref.validate(ExponentVector.make([[0] * n]), dirs):
        raise AssertionError("ray refutation failed to validate")
    return ref


# ---------------------------------------------------------------------------
# per-stratum item manifest


BOX_A = (F(-4, 3), F(4))
BOX_B = (F(-8, 3), F(4, 3))
BOX_VERTICES = tuple(product(BOX_A, BOX_B))
# constant part of the bound on -sum_{I'} d over subsets I' of the middle block
SUBSET_BOUND = "2/3 8/3 2 4/3 4/3 9/2"


@dataclass(frozen=True)
class DirectionSpec:
    combo: str  # weight combination, e.g. "d_{1,43} + 2d_{1,51}"
    bound: str | None = None  # explicit lower bound used in place of the combination


@dataclass(frozen=True)
class Domination:
    dominant: str  # coordinate whose monomial dominates
    dominated: tuple[str, ...]


@dataclass(frozen=True)
class Item:
    case: CaseId
    stratum: int
    base: str  # "residual" (d_0 - c_I) or the family "p" / "q" / "pq"
    removed: frozenset[CoordinateId]  # I = I_0 minus these
    directions: tuple[DirectionSpec, ...]
    dominations: tuple[Domination, ...] = ()
    anchor: str = ""
    plane_order: bool = False  # directions line up with the plane vectors (constructive route)

    @property
    def name(self) -> str:
        return f"L{self.stratum}"

    def to_json(self) -> dict:
        return {
            "case": self.case.value,
            "stratum": self.name,
            "base": self.base,
            "removed": sorted(c.index for c in self.removed),
            "directions": [{"combo": d.combo, "bound": d.bound} for d in self.directions],
            "dominations": [{"dominant": d.dominant, "dominated": list(d.dominated)} for d in self.dominations],
            "anchor": self.anchor,
            "constructive": self.plane_order,
        }


def _dom(dominant: str, dominated: str) -> Domination:
    return Domination(dominant, tuple(dominated.split()))


_C4_ALPHA_BETA = lambda pairs: " ".join(f"2,{a}{b}" for a, b in pairs)

ITEMS: dict[CaseId, tuple[Item, ...]] = {
    CaseId.CASE3: (
        Item(CaseId.CASE3, 1, "residual", _xs("1,21"), (DirectionSpec("d_{1,21}"),),
             anchor="d_0 - c_I - N d_{1,21}"),
        Item(CaseId.CASE3, 2, "residual", _xs("1,21 1,31"), (DirectionSpec("d_{1,31}"),),
             anchor="((0, -2, 0), 2) - N((1/2, 0, 1/2), 1/2)"),
        Item(CaseId.CASE3, 3, "residual", _xs("1,21 1,31 1,32 1,41"), (DirectionSpec("d_{1,32} + d_{1,41}"),),
             anchor="((-1/2, -2, -1/2), 2) - N(d_{1,32} + d_{1,41})"),
    ),
    CaseId.CASE4: (
        Item(CaseId.CASE4, 1, "residual", frozenset(), (DirectionSpec("d_{1,41}"),),
             (_dom("1,41", "1,21 1,31"), _dom("2,41", "2,21 2,31")),
             anchor="d_0 - c_0 - N d_{1,41}"),
        Item(CaseId.CASE4, 2, "pq", _xs("1,21 1,31 1,41"),
             (DirectionSpec("d_{1,42}"), DirectionSpec("d_{2,61}")),
             (_dom("1,42", "1,32"), _dom("2,61", "1,51 1,61 2,21 2,31 2,41 2,51 2,61")),
             anchor="2d_{1,42} + d_{2,61} = ((0, 1, 0, 1, 0), 1/2)"),
        Item(CaseId.CASE4, 4, "residual", _xs("1,21 1,31 1,41 1,51 1,32 1,42 1,43"),
             (DirectionSpec("d_{1,43} + 2d_{1,51}"),),
             anchor="d_{1,43} + 2d_{1,51} = ((1, 0, 0, 0, 1), 3/2)"),
        Item(CaseId.CASE4, 5, "pq", _xs("1,21 1,31 1,41 1,51 1,32 1,42 1,52"),
             (DirectionSpec("d_{1,43}"), DirectionSpec("d_{1,52}"), DirectionSpec("d_{2,61}")),
             (_dom("2,61", " ".join(f"{a},{b}1" for a in (1, 2) for b in range(2, 7))),),
             anchor="d_{1,43} + d_{1,52} + d_{2,61} = ((0, 0, 0, 0, 0), 1/2)", plane_order=True),
        Item(CaseId.CASE4, 6, "pq", _xs("1,21 1,31 1,41 1,32 1,42 1,51 1,52"),
             (DirectionSpec("d_{1,43}"), DirectionSpec("d_{2,52}"), DirectionSpec("d_{1,61}")),
             (_dom("2,52", _C4_ALPHA_BETA([(a, b) for a in range(2, 6) for b in (1, 2) if a > b])),),
             anchor="d_{1,43} + d_{1,61} + d_{2,52}", plane_order=True),
        Item(CaseId.CASE4, 7, "residual", _xs("1,21 1,31 1,41 1,51 1,61 1,32 1,42 1,52 1,62 1,43"),
             (DirectionSpec("3d_{1,43} + 2d_{1,62} + 4d_{2,51}"),),
             (_dom("2,51", _C4_ALPHA_BETA([(a, 1) for a in range(2, 6)])),),
             anchor="3d_{1,43} + 2d_{1,62} + 4d_{2,51} = ((1, 0, 0, 0, 1), 1/2)"),
        Item(CaseId.CASE4, 8, "residual", frozenset(), (DirectionSpec("3d_{1,43} + 2d_{2,21}"),),
             anchor="3d_{1,43} + 2d_{2,21} = ((1/3, 2/3, 2, 10/3, 5/3), 1/2)"),
        Item(CaseId.CASE4, 9, "residual", _xs("1,21 1,31 1,41 1,32 1,42 1,43 1,51"),
             (DirectionSpec("2d_{1,51} + d_{2,43}"),),
             (_dom("2,43", _C4_ALPHA_BETA([(a, b) for a in range(2, 5) for b in range(1, a)])),),
             anchor="2d_{1,51} + d_{2,43} = ((1, 0, 0, 0, 1), 1/2)"),
        Item(CaseId.CASE4, 10, "pq", _xs("1,21 1,31 1,41 1,32 1,42 1,43 1,51"),
             (DirectionSpec("d_{2,43}"), DirectionSpec("d_{1,52}"), DirectionSpec("d_{1,61}")),
             (_dom("2,43", _C4_ALPHA_BETA([(a, b) for a in range(2, 5) for b in range(1, a)])),),
             anchor="d_{1,61} + d_{1,52} + d_{2,43} = ((0, 0, 0, 0, 0), 1/2)", plane_order=True),
        Item(CaseId.CASE4, 11, "residual", frozenset(), (DirectionSpec("3d_{1,52} + 2d_{2,41}"),),
             (_dom("2,41", "2,21 2,31 2,41"),),
             anchor="3d_{1,52} + 2d_{2,41} = ((1/3, 5/3, 0, 1/3, 5/3), 1/2)"),
        Item(CaseId.CASE4, 12, "pq", _xs("1,21 1,31 1,41 1,32 1,42 1,43 1,51 1,52"),
             (DirectionSpec("3d_{1,61} + 2d_{1,53} + 4d_{2,42}"),
              DirectionSpec("4d_{1,61} + 2d_{1,53} + 4d_{2,42}", "2/3 0 0 0 -2/3 0"),
              DirectionSpec("d_{1,61} + d_{1,53} + 2d_{2,42}", "-1/3 0 0 0 1/3 0")),
             (_dom("2,42", _C4_ALPHA_BETA([(a, b) for a in range(2, 5) for b in (1, 2) if a > b])),),
             anchor="3d_{1,61} + 2d_{1,53} + 4d_{2,42} = ((0, 1, 0, 1, 0), 1/2)"),
        Item(CaseId.CASE4, 13, "pq", _xs("1,21 1,31 1,41 1,32 1,42 1,43 1,51 1,52 1,53"),
             (DirectionSpec("3d_{1,61} + 2d_{1,54} + 4d_{2,32}"),
              DirectionSpec("d_{1,61} + d_{2,32}", "1/3 0 0 0 -1/3 0"),
              DirectionSpec("d_{1,61} + d_{1,54} + 2d_{2,32}", "-1/3 0 0 0 1/3 0")),
             (_dom("2,32", "2,21 2,31 2,32"),),
             anchor="3d_{1,61} + 2d_{1,54} + 4d_{2,32} = ((0, 1, 2, 1, 0), 1/2)"),
        Item(CaseId.CASE4, 15, "residual", frozenset(), (DirectionSpec("2d_{1,62} + 2d_{1,53} + 3d_{2,41}"),),
             (_dom("2,41", "2,21 2,31 2,41"),),
             anchor="2d_{1,62} + 2d_{1,53} + 3d_{2,41} = ((2/3, 1/3, 0, 2/3, 1/3), 1/2)"),
        Item(CaseId.CASE4, 16, "residual", frozenset(), (DirectionSpec("2d_{1,62} + 2d_{1,54} + 3d_{2,31}"),),
             (_dom("2,31", "2,21 2,31"),),
             anchor="2d_{1,62} + 2d_{1,54} + 3d_{2,31} = ((2/3, 1/3, 1, 2/3, 1/3), 1/2)"),
        Item(CaseId.CASE4, 17, "residual", frozenset(), (DirectionSpec("3d_{1,53} + 2d_{2,21}"),),
             anchor="3d_{1,53} + 2d_{2,21} = ((1/3, 2/3, 2, 1/3, 5/3), 1/2)"),
        Item(CaseId.CASE4, 18, "residual", frozenset(), (DirectionSpec("2d_{1,63} + 2d_{1,54} + 3d_{2,21}"),),
             anchor="2d_{1,63} + 2d_{1,54} + 3d_{2,21} = ((2/3, 4/3, 1, 2/3, 1/3), 1/2)"),
    ),
}

# stated thresholds: the smallest total coefficient beyond which the residual is negative
STATED_THRESHOLDS = {(CaseId.CASE3, 2): F(4), (CaseId.CASE3, 3): F(2)}


def manifest(cases: Sequence[CaseId] = (CaseId.CASE3, CaseId.CASE4)) -> list[dict]:
    return [item.to_json() for case in cases for item in ITEMS.get(case, ())]


def residual_base(item: Item) -> ExponentVector:
    """d_0 - c_I for I = I_0 minus the removed coordinates, lambda exponent 0."""
    index_set = full_index_set(item.case).without(item.removed)
    return (rho_d0(item.case) - c_I(index_set)).with_lambda(0)


def family_base(form: str, a, b) -> ExponentVector:
    a, b = rat(a), rat(b)
    if form == "p":
        values = [a - F(7, 3), 0, -3, 0, -a + F(1, 3), F(13, 2)]
    else:
        values = [a - F(7, 3), b - F(4, 3), -3, -b - F(8, 3), -a + F(1, 3), F(13, 2)]
    return ExponentVector.from_flat(CaseId.CASE4.shape, values, 0)


def item_directions(item: Item) -> tuple[Direction, ...]:
    table = _table(item.case)
    out = []
    for spec in item.directions:
        combo = parse_combo(spec.combo)
        lam = sum((q for _, q in combo), ZERO)
        if spec.bound is None:
            vector = weight_sum(table, combo).with_lambda(lam)
            out.append(Direction(vector, format_combo(combo)))
        else:
            vector = _ev(item.case, spec.bound, lam)
            out.append(Direction(vector, f"lower bound of {format_combo(combo)}", format_combo(combo)))
    return tuple(out)


@dataclass
class DominationCheck:
    dominant: str
    dominated: str
    difference: ExponentVector
    holds: bool

    def to_json(self) -> dict:
        return {"dominant": self.dominant, "dominated": self.dominated,
                "difference": self.difference.to_json(), "holds": self.holds}


def check_dominations(item: Item) -> list[DominationCheck]:
    """d_dominated - d_dominant >= 0 entrywise, so the dominant monomial is the larger one
    on tau >= 0; also every explicit lower-bound direction sits below its combination."""
    table = _table(item.case)
    out = []
    for dom in item.dominations:
        big = table[_x(dom.dominant)]
        for s in dom.dominated:
            diff = (table[_x(s)] - big).with_lambda(None)
            out.append(DominationCheck(f"d_{{{dom.dominant}}}", f"d_{{{s}}}", diff, all(v >= 0 for v in diff.flat())))
    for spec, dr in zip(item.directions, item_directions(item)):
        if spec.bound is not None:
            combo = weight_sum(table, parse_combo(spec.combo)).with_lambda(None)
            diff = combo - dr.vector.with_lambda(None)
            out.append(DominationCheck(dr.label, format_combo(parse_combo(spec.combo)), diff,
                                       all(v >= 0 for v in diff.flat())))
    return out


@dataclass
class StratumCertificate:
    case: CaseId
    stratum: str
    form: str  # "residual", "p" or "q"
    certificates: list[ConvergenceCertificate]
    dominations: list[DominationCheck]
    anchor: str
    threshold: Fraction | None = None
    stated_threshold: Fraction | None = None
    p_refutations: list[dict] = field(default_factory=list)
    constructive: list[ConvergenceCertificate] = field(default_factory=list)
    vertices_covered: int = 0

    @property
    def ok(self) -> bool:
        good = all(c.validate() for c in self.certificates + self.constructive)
        good &= all(d.holds for d in self.dominations)
        if self.form in ("p", "q"):
            good &= self.vertices_covered == len(BOX_VERTICES)
        if self.stated_threshold is not None:
            good &= self.threshold == self.stated_threshold
        return good and bool(self.certificates)

    @property
    def id(self) -> str:
        return f"{self.case.label}-{self.stratum}-certificate"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "case": self.case.value,
            "stratum": self.stratum,
            "form": self.form,
            "anchor": self.anchor,
            "threshold": None if self.threshold is None else rat_str(self.threshold),
            "stated_threshold": None if self.stated_threshold is None else rat_str(self.stated_threshold),
            "vertices_covered": self.vertices_covered,
            "certificates": [c.to_json() for c in self.certificates],
            "constructive": [c.to_json() for c in self.constructive],
            "p_refutations": self.p_refutations,
            "dominations": [d.to_json() for d in self.dominations],
            "ok": self.ok,
        }


def _tag(cert, stratum: str, form: str, vertex=None) -> ConvergenceCertificate:
    return ConvergenceCertificate(cert.base, cert.directions, cert.coefficients, cert.ray,
                                  cert.threshold, stratum, vertex, form)


def plane_certificate(item: Item, a, b, dirs: Sequence[Direction]) -> ConvergenceCertificate:
    """Explicit coefficients for the three-direction q-family items.

    The d-parts of the three directions are the plane vectors (u, 0, -u
    reversed), their sum is ((0,...,0), 1/2), and the plane combination
    absorbs (a - 4/3, b) so that the residual is
    ((-1, -4/3, -3, -8/3, -1), 13/2 - ...).
    """
    for dr, u in zip(dirs, PLANE_VECTORS):
        d = dr.vector.flat()
        expect = (u[0], u[1], ZERO, -u[1], -u[0])
        if tuple(d[:5]) != expect:
            raise AssertionError(f"{dr.label} is not the plane vector {expect}")
    extra = solve_plane_combination(rat(a) - F(4, 3), b)
    base = family_base("q", a, b)
    last = base.flat()[-1] - sum((n * dr.vector.flat()[-1] for n, dr in zip(extra, dirs)), ZERO)
    # each unit of the common part lowers the GL(2) entry by 1/2
    n4 = max(1, int(2 * last) + 1)
    coeffs = tuple(n4 + n for n in extra)
    cert = ConvergenceCertificate(base, tuple(dirs), coeffs, (F(1, 3),) * 3, None,
                                  f"L{item.stratum}", (rat(a), rat(b)), "q-plane")
    if not cert.validate():
        raise AssertionError(f"plane certificate for L{item.stratum} failed at {(a, b)}")
    return cert


def certify_item(item: Item) -> StratumCertificate:
    dirs = item_directions(item)
    doms = check_dominations(item)
    name = item.name
    stated = STATED_THRESHOLDS.get((item.case, item.stratum))
    if item.base == "residual":
        cert = find_certificate(residual_base(item), dirs)
        if isinstance(cert, Refutation):
            raise CertificateError(f"{item.case.value} {name}: no certificate ({cert.to_json()})")
        cert = _tag(cert, name, "residual")
        return StratumCertificate(item.case, name, "residual", [cert], doms, item.anchor,
                                  cert.threshold, stated)
    results = {}
    refutations = []
    for form in ("p", "q"):
        found = []
        for a, b in BOX_VERTICES:
            cert = find_certificate(family_base(form, a, b), dirs)
            if isinstance(cert, Refutation):
                refutations.append({"form": form, "vertex": [rat_str(a), rat_str(b)], **cert.to_json()})
            else:
                found.append(_tag(cert, name, form, (a, b)))
        results[form] = found
    form = "p" if len(results["p"]) == len(BOX_VERTICES) else "q"
    certs = results[form]
    if len(certs) != len(BOX_VERTICES):
        raise CertificateError(f"{item.case.value} {name}: box vertices without a certificate")
    constructive = [plane_certificate(item, a, b, dirs) for a, b in BOX_VERTICES] if item.plane_order else []
    return StratumCertificate(item.case, name, form, certs, doms, item.anchor,
                              max(c.threshold for c in certs), stated,
                              [r for r in refutations if r["form"] == "p"], constructive, len(certs))


def stratum_certificates(case: CaseId) -> list[StratumCertificate]:
    if case not in ITEMS:
        raise InputError(f"{case.value} has no stratum certificates")
    out = []
    for item in ITEMS[case]:
        sc = certify_item(item)
        if not sc.ok:
            raise CertificateError(f"{case.value} {sc.stratum}: certificate does not validate")
        out.append(sc)
    return out


# ---------------------------------------------------------------------------
# the subset bound behind the p/q families


SPLIT_FIRST = _xs("2,21 2,31 2,41")
SPLIT_MIDDLE = frozenset(CoordinateId(i, j, k) for i in (1, 2)
                         for j, k in ((5, 1), (6, 1), (3, 2), (4, 2), (5, 2), (6, 2), (4, 3), (5, 3), (5, 4)))
SPLIT_LAST = frozenset(CoordinateId(i, 6, k) for i in (1, 2) for k in (3, 4, 5))


@lru_cache(maxsize=None)
def subset_bound_check() -> dict:
    """Check every ingredient of the q/p bound on h_I for I = I_0 minus x_{1,21}, x_{1,31}, x_{1,41}.

    * I splits into the three blocks above;
    * -c of the first and last blocks are ((0,0,0,0,0), 3/2) and ((2,4,4,4,4), 3/2);
    * for each of the 2^18 subsets S of the middle block some (a, b) in the box
      [-4/3, 4] x [-8/3, 4/3] has -sum_S d <= K + (a, b, 0, -b, -a) with K the
      constant bound ((2/3, 8/3, 2, 4/3, 4/3), 9/2);
    * d_0 - c_first - c_last + K + (a, b, 0, -b, -a) is q(a, b), and q <= p on the box;
    * the residual sets of the family items sit inside I, so their h_I is no larger.
    """
    case = CaseId.CASE4
    table = _table(case)
    whole = full_index_set(case).without(_xs("1,21 1,31 1,41"))
    report: dict = {}
    report["split"] = (SPLIT_FIRST | SPLIT_MIDDLE | SPLIT_LAST == whole.members
                       and not SPLIT_FIRST & SPLIT_MIDDLE and not SPLIT_MIDDLE & SPLIT_LAST
                       and not SPLIT_FIRST & SPLIT_LAST)
    c_first = c_I(IndexSet(case, SPLIT_FIRST)).with_lambda(None)
    c_last = c_I(IndexSet(case, SPLIT_LAST)).with_lambda(None)
    report["c_first"] = (-c_first) == _ev(case, "0 0 0 0 0 3/2")
    report["c_last"] = (-c_last) == _ev(case, "2 4 4 4 4 3/2")

    middle = sorted(SPLIT_MIDDLE)
    scale = 6
    d = np.array([[int(v * scale) for v in table[c].flat()] for c in middle], dtype=np.int64)
    k = [int(F(v) * scale) for v in SUBSET_BOUND.split()]
    a_lo, a_hi = int(BOX_A[0] * scale), int(BOX_A[1] * scale)
    b_lo, b_hi = int(BOX_B[0] * scale), int(BOX_B[1] * scale)
    n = len(middle)
    failures = 0
    extremes = {"a_lower": None, "a_upper": None, "b_lower": None, "b_upper": None}
    chunk = 1 << 14
    for start in range(0, 1 << n, chunk):
        masks = (np.arange(start, start + chunk)[:, None] >> np.arange(n)[None, :]) & 1
        s = -(masks @ d)  # -sum_S d, scaled
        lo_a = np.maximum(s[:, 0] - k[0], a_lo)
        hi_a = np.minimum(k[4] - s[:, 4], a_hi)
        lo_b = np.maximum(s[:, 1] - k[1], b_lo)
        hi_b = np.minimum(k[3] - s[:, 3], b_hi)
        ok = (lo_a <= hi_a) & (lo_b <= hi_b) & (s[:, 2] <= k[2]) & (s[:, 5] <= k[5])
        failures += int((~ok).sum())
        # the tightest requirements on (a, b) over all subsets
        for key, arr, fn in (("a_lower", s[:, 0] - k[0], max), ("a_upper", k[4] - s[:, 4], min),
                             ("b_lower", s[:, 1] - k[1], max), ("b_upper", k[3] - s[:, 3], min)):
            v = int(arr.max() if fn is max else arr.min())
            extremes[key] = v if extremes[key] is None else fn(extremes[key], v)
    report["subsets"] = 1 << n
    report["subset_failures"] = failures
    report["extremes"] = {key: rat_str(F(v, scale)) for key, v in extremes.items()}

    d0 = rho_d0(case).with_lambda(None)
    kvec = _ev(case, SUBSET_BOUND)
    formula_ok = True
    for a, b in BOX_VERTICES + ((F(0), F(0)),):
        shift = _ev(case, f"{a} {b} 0 {-b} {-a} 0")
        q = d0 - c_first - c_last + kvec + shift
        formula_ok &= q == family_base("q", a, b).with_lambda(None)
        p = family_base("p", a, b)
        formula_ok &= all(x <= y for x, y in zip(q.flat(), p.flat()))
    report["q_formula"] = formula_ok
    report["family_residuals_inside"] = all(
        whole.members >= full_index_set(case).without(item.removed).members
        for item in ITEMS[case] if item.base == "pq")
    report["ok"] = (report["split"] and report["c_first"] and report["c_last"] and failures == 0
                    and formula_ok and report["family_residuals_inside"])
    return report


def weights_agree(case: CaseId) -> bool:
    """The certificate tables (transcribed with derived fills) equal the derived table."""
    t, d = transcribed_weight_table(case), derived_weight_table(case)
    return all(t[c] == d[c] for c in coordinates(case))
