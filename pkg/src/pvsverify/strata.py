"""Vanishing-pattern strata of the semistable set, the nonvanishing claims,
and strict-cone stability witnesses for the 2x2 and 3x3 pencil spaces.

A stratum is a conjunction of literals on coordinates: some coordinates
vanish, some do not, and for each "any-of" group at least one does not.
The same definition is evaluated on single pencils, on numpy batches and
on abstract zero/nonzero patterns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from . import batch
from .fields import PrimeField
from .geometry import InputError, check_cone_witness, rat_str, strict_cone_feasible
from .pencils import MatrixPencil, f_x, in_L0, is_semistable_form, matching_terms
from .weights import CaseId, CoordinateId, coordinates, derived_weight_table

EXHAUSTIVE_LIMIT = 1 << 24
MAX_LISTED_VIOLATIONS = 10


def _x(label: str) -> CoordinateId:
    """"1,21" -> CoordinateId(1, 2, 1)."""
    i, jk = label.split(",")
    return CoordinateId(int(i), int(jk[0]), int(jk[1]))


def _xs(labels: str) -> frozenset[CoordinateId]:
    return frozenset(_x(s) for s in labels.split()) if labels else frozenset()


@dataclass(frozen=True)
class Stratum:
    case: CaseId
    index: int
    zeros: frozenset[CoordinateId]
    nonzeros: frozenset[CoordinateId]
    any_nonzero: tuple[frozenset[CoordinateId], ...] = ()
    member: bool = True  # False for the intermediate sets L3, L14 of case 4
    definition: str = ""

    @property
    def name(self) -> str:
        return f"L{self.index}"

    @property
    def domain(self) -> str:
        return "semistable" if self.case is CaseId.CASE4 else "L0"

    def holds(self, nonzero: Callable[[CoordinateId], object]):
        """Evaluate on a nonzero-indicator (bools or numpy bool arrays)."""
        result = True
        for c in self.zeros:
            result = result & _not(nonzero(c))
        for c in self.nonzeros:
            result = result & nonzero(c)
        for group in self.any_nonzero:
            g = False
            for c in sorted(group):
                g = g | nonzero(c)
            result = result & g
        return result

    def coordinates(self) -> frozenset[CoordinateId]:
        out = set(self.zeros) | set(self.nonzeros)
        for g in self.any_nonzero:
            out |= g
        return frozenset(out)


def _not(v):
    return (not v) if isinstance(v, (bool, np.bool_)) else ~v


def _build(case: CaseId, rows) -> tuple[Stratum, ...]:
    made: dict[int, Stratum] = {}
    for index, parent, zeros, nonzeros, any_groups, definition in rows:
        z, nz, groups = _xs(zeros), _xs(nonzeros), tuple(_xs(g) for g in any_groups)
        if parent:
            base = made[parent]
            z, nz, groups = base.zeros | z, base.nonzeros | nz, base.any_nonzero + groups
        made[index] = Stratum(case, index, z, nz, groups, index not in (3, 14) or case is CaseId.CASE3,
                              definition)
    return tuple(made[i] for i in sorted(made))


CASE3_STRATA = _build(CaseId.CASE3, [
    (1, None, "", "1,21", [], "x in L0, x_{1,21} != 0"),
    (2, None, "1,21", "1,31", [], "x in L0, x_{1,21} = 0, x_{1,31} != 0"),
    (3, None, "1,21 1,31", "", [], "x in L0, x_{1,21} = x_{1,31} = 0"),
])

CASE4_STRATA = _build(CaseId.CASE4, [
    (1, None, "", "", ["1,21 1,31 1,41"], "x_{1,21} or x_{1,31} or x_{1,41} != 0"),
    (2, None, "1,21 1,31 1,41", "", ["1,32 1,42"],
     "x_{1,21} = x_{1,31} = x_{1,41} = 0, x_{1,32} or x_{1,42} != 0"),
    (3, None, "1,21 1,31 1,41 1,32 1,42", "", [],
     "x_{1,21} = x_{1,31} = x_{1,41} = x_{1,32} = x_{1,42} = 0"),
    (4, 3, "", "1,43 1,51", [], "x in L3, x_{1,43}, x_{1,51} != 0"),
    (5, 3, "1,51", "1,43 1,52", [], "x in L3, x_{1,51} = 0, x_{1,43}, x_{1,52} != 0"),
    (6, 3, "1,51 1,52", "1,43 1,61", [], "x in L3, x_{1,51} = x_{1,52} = 0, x_{1,43}, x_{1,61} != 0"),
    (7, 3, "1,51 1,52 1,61", "1,43 1,62", [],
     "x in L3, x_{1,51} = x_{1,52} = x_{1,61} = 0, x_{1,43}, x_{1,62} != 0"),
    (8, 3, "1,51 1,52 1,61 1,62", "1,43 2,21", [],
     "x in L3, x_{1,51} = x_{1,52} = x_{1,61} = x_{1,62} = 0, x_{1,43}, x_{2,21} != 0"),
    (9, 3, "1,43", "1,51", [], "x in L3, x_{1,43} = 0, x_{1,51} != 0"),
    (10, 3, "1,43 1,51", "1,52 1,61", [], "x in L3, x_{1,43} = x_{1,51} = 0, x_{1,52}, x_{1,61} != 0"),
    (11, 3, "1,43 1,51 1,61", "1,52", [], "x in L3, x_{1,43} = x_{1,51} = x_{1,61} = 0, x_{1,52} != 0"),
    (12, 3, "1,43 1,51 1,52", "1,61 1,53", [],
     "x in L3, x_{1,43} = x_{1,51} = x_{1,52} = 0, x_{1,61}, x_{1,53} != 0"),
    (13, 3, "1,43 1,51 1,52 1,53", "1,61 1,54", [],
     "x in L3, x_{1,43} = x_{1,51} = x_{1,52} = x_{1,53} = 0, x_{1,61}, x_{1,54} != 0"),
    (14, 3, "1,43 1,51 1,52 1,61", "", [], "x in L3, x_{1,43} = x_{1,51} = x_{1,52} = x_{1,61} = 0"),
    (15, 14, "", "1,62 1,53", [], "x in L14, x_{1,62}, x_{1,53} != 0"),
    (16, 14, "1,53", "1,62 1,54", [], "x in L14, x_{1,53} = 0, x_{1,62}, x_{1,54} != 0"),
    (17, 14, "1,62", "1,53", [], "x in L14, x_{1,62} = 0, x_{1,53} != 0"),
    (18, 14, "1,62 1,53", "1,63 1,54", [], "x in L14, x_{1,62} = x_{1,53} = 0, x_{1,63}, x_{1,54} != 0"),
])


def strata(case: CaseId) -> tuple[Stratum, ...]:
    if case is CaseId.CASE3:
        return CASE3_STRATA
    if case is CaseId.CASE4:
        return CASE4_STRATA
    raise InputError(f"{case.value} has no stratification")


def partition_strata(case: CaseId) -> tuple[Stratum, ...]:
    return tuple(s for s in strata(case) if s.member)


def get_stratum(case: CaseId, index: int) -> Stratum:
    for s in strata(case):
        if s.index == index:
            return s
    raise InputError(f"{case.value} has no stratum L{index}")


class ClassificationError(Exception):
    def __init__(self, message: str, pencil: MatrixPencil):
        super().__init__(message)
        self.pencil = pencil


def stratum_of(x: MatrixPencil) -> Stratum:
    members = partition_strata(x.case)
    f = f_x(x)
    if x.case is CaseId.CASE3:
        if not in_L0(x):
            raise ClassificationError("pencil is not in L0", x)
    elif not is_semistable_form(f):
        raise ClassificationError("pencil is not semistable", x)
    hits = [s for s in members if s.holds(lambda c: bool(x.coordinate(c)))]
    if len(hits) != 1:
        names = ", ".join(s.name for s in hits) or "none"
        raise ClassificationError(f"pencil matches {names}", x)
    return hits[0]


# ---------------------------------------------------------------------------
# claims


@dataclass(frozen=True)
class Claim:
    id: str
    hypothesis: tuple[int, ...]  # stratum indices; () means all semistable points
    conclusion: frozenset[CoordinateId]  # at least one of these is nonzero
    statement: str


def _range_coords(i: int, pairs: Iterable[tuple[int, int]]) -> frozenset[CoordinateId]:
    return frozenset(CoordinateId(i, j, k) for j, k in pairs)


CLAIMS: tuple[Claim, ...] = (
    Claim("claim-2", (), _range_coords(1, [(j, 1) for j in range(2, 7)]) | _range_coords(2, [(j, 1) for j in range(2, 7)]),
          "x semistable => some x_{i,j1} != 0 with i in {1,2}, 2 <= j <= 6"),
    Claim("claim-3", (6,), _range_coords(2, [(j, k) for j in range(2, 6) for k in (1, 2) if j > k]),
          "x in L6 => some x_{2,jk} != 0 with 2 <= j <= 5, 1 <= k <= 2, j > k"),
    Claim("claim-4", (7,), _range_coords(2, [(j, 1) for j in range(2, 6)]),
          "x in L7 => some x_{2,j1} != 0 with 2 <= j <= 5"),
    Claim("claim-5", (9, 10), _range_coords(2, [(j, k) for j in range(2, 5) for k in range(1, j)]),
          "x in L9 or L10 => some x_{2,jk} != 0 with 1 <= k < j <= 4"),
    Claim("claim-6", (11,), _xs("2,21 2,31 2,41"), "x in L11 => x_{2,21} or x_{2,31} or x_{2,41} != 0"),
    Claim("claim-7", (12,), _range_coords(2, [(j, k) for j in range(2, 5) for k in (1, 2) if j > k]),
          "x in L12 => some x_{2,jk} != 0 with 2 <= j <= 4, 1 <= k <= 2, j > k"),
    Claim("claim-8", (13,), _xs("2,21 2,31 2,32"), "x in L13 => x_{2,21} or x_{2,31} or x_{2,32} != 0"),
    Claim("claim-9", (15,), _xs("2,21 2,31 2,41"), "x in L15 => x_{2,21} or x_{2,31} or x_{2,41} != 0"),
    Claim("claim-10", (16,), _xs("2,21 2,31"), "x in L16 => x_{2,21} or x_{2,31} != 0"),
    Claim("claim-11", (17, 18), _xs("2,21"), "x in L17 or L18 => x_{2,21} != 0"),
)


def get_claim(claim) -> Claim:
    key = claim if isinstance(claim, str) and claim.startswith("claim-") else f"claim-{claim}"
    for c in CLAIMS:
        if c.id == key:
            return c
    raise InputError(f"unknown claim {claim!r}")


# ---------------------------------------------------------------------------
# sampling


EXHAUSTIVE = "Exhaustive"
RANDOM = "Random"


@dataclass(frozen=True)
class SampleConfig:
    prime: int
    mode: str = RANDOM
    sample_count: int = 100_000
    seed: int = 0

    def __post_init__(self):
        PrimeField(self.prime)
        if self.mode not in (EXHAUSTIVE, RANDOM):
            raise InputError(f"unknown sampling mode {self.mode!r}")
        if self.sample_count < 0:
            raise InputError("sample_count must be >= 0")
        if self.prime >= batch.MAX_PRIME:
            raise InputError(f"sampling supports primes below {batch.MAX_PRIME}")

    def to_json(self) -> dict:
        return {"prime": self.prime, "mode": self.mode, "sample_count": self.sample_count, "seed": self.seed}


@dataclass
class ClaimReport:
    claim: str
    case: str
    prime: int
    mode: str
    seed: int | None
    tested: int = 0
    drawn: int = 0
    violation_count: int = 0
    violations: list[dict] = field(default_factory=list)
    stratum_counts: dict[str, int] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def add_violations(self, case: CaseId, prime: int, rows: np.ndarray) -> None:
        self.violation_count += int(rows.shape[0])
        room = MAX_LISTED_VIOLATIONS - len(self.violations)
        fld = PrimeField(prime)
        for r in rows[:max(room, 0)]:
            self.violations.append(MatrixPencil.from_coords(case, fld, [int(v) for v in r]).to_json())

    def to_json(self) -> dict:
        out = {
            "claim": self.claim,
            "case": self.case,
            "prime": self.prime,
            "mode": self.mode,
            "seed": self.seed,
            "tested": self.tested,
            "drawn": self.drawn,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "stratum_counts": dict(sorted(self.stratum_counts.items(), key=lambda kv: _stratum_key(kv[0]))),
        }
        out.update(self.extra)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ClaimReport":
        known = {"claim", "case", "prime", "mode", "seed", "tested", "drawn", "violation_count",
                 "violations", "stratum_counts"}
        rep = cls(**{k: data[k] for k in known})
        rep.extra = {k: v for k, v in data.items() if k not in known}
        return rep


def _stratum_key(name: str):
    return (0, int(name[1:])) if name[:1] == "L" and name[1:].isdigit() else (1, name)


def _nonzero_fn(case: CaseId, x: np.ndarray):
    idx = batch.column_index(case)
    return lambda c: x[:, idx[c]] != 0


def stream_seed(seed: int, *parts: int) -> np.random.Generator:
    return np.random.default_rng([seed, *parts])


def _draw(case: CaseId, rng: np.random.Generator, p: int, n: int,
          zeros: Iterable[CoordinateId] = (), nonzeros: Iterable[CoordinateId] = ()) -> np.ndarray:
    idx = batch.column_index(case)
    x = rng.integers(0, p, size=(n, len(idx)), dtype=np.int64)
    for c in sorted(zeros):
        x[:, idx[c]] = 0
    nz = sorted(nonzeros)
    if nz:
        x[:, [idx[c] for c in nz]] = rng.integers(1, p, size=(n, len(nz)), dtype=np.int64)
    return x


def _free_enumeration(case: CaseId, p: int, zeros: frozenset[CoordinateId]):
    """All pencils with the given coordinates forced to zero, in chunks."""
    idx = batch.column_index(case)
    free = [idx[c] for c in coordinates(case) if c not in zeros]
    if p ** len(free) > EXHAUSTIVE_LIMIT:
        raise InputError(f"exhaustive search over {len(free)} free coordinates mod {p} exceeds 2^24")
    for block in batch.enumerate_all(len(free), p):
        x = np.zeros((block.shape[0], len(idx)), dtype=np.int64)
        x[:, free] = block
        yield x


def _domain_mask(case: CaseId, x: np.ndarray, p: int) -> np.ndarray:
    coeffs = batch.form_coefficients(case, x, p)
    ok = batch.semistable(coeffs, p)
    if case is not CaseId.CASE4:
        ok &= batch.root_free(coeffs, p)
    return ok


def _membership(case: CaseId, x: np.ndarray) -> np.ndarray:
    """Column s = pencil satisfies partition stratum s (bool array (N, #strata))."""
    nz = _nonzero_fn(case, x)
    return np.stack([np.broadcast_to(s.holds(nz), (x.shape[0],)) for s in partition_strata(case)], axis=1)


BATCH = 1 << 14


def _drive(case: CaseId, cfg: SampleConfig, select, absorb, zero_sets, patterns=None, rng=None) -> tuple[int, int]:
    """Feed pencils through ``select`` (row mask) and ``absorb`` (selected rows).

    Exhaustive mode enumerates every pencil vanishing on each set in
    ``zero_sets``.  Random mode draws batches round-robin over ``patterns``
    (zeros, nonzeros) until sample_count rows are selected; the last batch is
    cut so that exactly sample_count are.  Returns (tested, drawn).
    """
    tested = drawn = 0
    if cfg.mode == EXHAUSTIVE:
        for k, zeros in enumerate(zero_sets):
            for x in _free_enumeration(case, cfg.prime, zeros):
                mask = select(x, k)
                absorb(x[mask])
                tested += int(mask.sum())
                drawn += x.shape[0]
        return tested, drawn
    cap = max(200 * cfg.sample_count, BATCH)
    turn = 0
    while tested < cfg.sample_count and drawn < cap:
        zeros, nonzeros = patterns[turn % len(patterns)]
        turn += 1
        x = _draw(case, rng, cfg.prime, BATCH, zeros, nonzeros)
        mask = select(x, None)
        keep = np.flatnonzero(mask)
        need = cfg.sample_count - tested
        if keep.size > need:
            cut = int(keep[need - 1]) + 1
            x, mask = x[:cut], mask[:cut]
        absorb(x[mask])
        tested += int(mask.sum())
        drawn += x.shape[0]
    return tested, drawn


def _report(name: str, case: CaseId, cfg: SampleConfig) -> ClaimReport:
    return ClaimReport(name, case.value, cfg.prime, cfg.mode, None if cfg.mode == EXHAUSTIVE else cfg.seed)


def verify_partition(case: CaseId, cfg: SampleConfig) -> ClaimReport:
    """Every point of the domain lies in exactly one partition stratum.

    Random draws cycle through the forced-zero sets of all strata (plus the
    unconstrained one) without forcing nonzeros, so boundaries get hit.
    """
    report = _report("partition", case, cfg)
    names = [s.name for s in partition_strata(case)]
    counts = np.zeros(len(names), dtype=np.int64)

    def select(x, _k):
        return _domain_mask(case, x, cfg.prime)

    def absorb(x):
        member = _membership(case, x)
        hits = member.sum(axis=1)
        counts[:] += member[hits == 1].sum(axis=0)
        report.add_violations(case, cfg.prime, x[hits != 1])

    patterns: list[frozenset] = [frozenset()]
    for s in strata(case):
        if s.zeros not in patterns:
            patterns.append(s.zeros)
    rng = stream_seed(cfg.seed, 1, cfg.prime, case.number)
    report.tested, report.drawn = _drive(
        case, cfg, select, absorb, [frozenset()], [(z, frozenset()) for z in patterns], rng)
    report.stratum_counts = {n: int(v) for n, v in zip(names, counts)}
    return report


def verify_claim(claim, cfg: SampleConfig) -> ClaimReport:
    """Check a nonvanishing claim on case-4 pencils from its hypothesis strata.

    Random mode alternates two draw patterns per hypothesis stratum: its
    forced zeros with its required nonzeros drawn from F_p^x, and the same
    with every conclusion coordinate also forced to zero.  Pencils of the
    second kind must all fail semistability, which probes the region where a
    counterexample would live.  Exhaustive mode enumerates every pencil
    vanishing on each hypothesis stratum's zeros.
    """
    spec = get_claim(claim)
    case = CaseId.CASE4
    report = _report(spec.id, case, cfg)
    hyp = [get_stratum(case, i) for i in spec.hypothesis]
    counts = {s.name: 0 for s in hyp} if hyp else {"semistable": 0}
    concl = sorted(spec.conclusion)

    def inside(x, k):
        nz = _nonzero_fn(case, x)
        chosen = hyp if k is None else hyp[k:k + 1]
        m = np.zeros(x.shape[0], dtype=bool) if hyp else np.ones(x.shape[0], dtype=bool)
        for s in chosen:
            m |= np.broadcast_to(s.holds(nz), (x.shape[0],))
        return m

    def select(x, k):
        return _domain_mask(case, x, cfg.prime) & inside(x, k)

    def absorb(x):
        nz = _nonzero_fn(case, x)
        for s in hyp:
            counts[s.name] += int(np.broadcast_to(s.holds(nz), (x.shape[0],)).sum())
        if not hyp:
            counts["semistable"] += x.shape[0]
        ok = np.zeros(x.shape[0], dtype=bool)
        for c in concl:
            ok |= nz(c)
        report.add_violations(case, cfg.prime, x[~ok])

    patterns = []
    for s in hyp or [None]:
        zeros = s.zeros if s else frozenset()
        nonzeros = s.nonzeros if s else frozenset()
        patterns.append((zeros, nonzeros))
        patterns.append((zeros | spec.conclusion, nonzeros))
    zero_sets = [s.zeros for s in hyp] or [frozenset()]
    rng = stream_seed(cfg.seed, int(spec.id.split("-")[1]), cfg.prime)
    report.tested, report.drawn = _drive(case, cfg, select, absorb, zero_sets, patterns, rng)
    report.stratum_counts = counts
    return report


# ---------------------------------------------------------------------------
# symbolic pattern checks


def tracked_coordinates(case: CaseId) -> tuple[CoordinateId, ...]:
    out = set()
    for s in strata(case):
        out |= s.coordinates()
    return tuple(sorted(out))


def _patterns(coords: Sequence[CoordinateId]):
    n = len(coords)
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    pos = {c: t for t, c in enumerate(coords)}
    return bits.astype(bool), (lambda c: bits[:, pos[c]].astype(bool))


def pattern_overlaps(case: CaseId) -> list[tuple[str, str]]:
    """Pairs of partition strata whose defining literals are simultaneously satisfiable."""
    coords = tracked_coordinates(case)
    bits, nz = _patterns(coords)
    members = partition_strata(case)
    masks = [np.broadcast_to(s.holds(nz), (bits.shape[0],)) for s in members]
    out = []
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            if (masks[a] & masks[b]).any():
                out.append((members[a].name, members[b].name))
    return out


@lru_cache(maxsize=None)
def symbolic_form(case: CaseId) -> tuple[dict, ...]:
    """Coefficients of F_x as integer polynomials in the coordinates.

    Each coefficient is a dict mapping a sorted tuple of coordinate columns
    (a monomial) to its integer coefficient.
    """
    entries = dict(batch._entry_map(case))
    n = case.matrix_size
    deg = case.form_degree
    if case.alternating:
        terms = list(matching_terms(n))
    else:
        from .pencils import permutation_terms
        terms = [(s, tuple((r, perm[r]) for r in range(n))) for s, perm in permutation_terms(n)]
    total = [dict() for _ in range(deg + 1)]
    for sign, pairs in terms:
        poly = [{(): sign}]
        for a, b in pairs:
            e1, e2 = entries[1, a, b], entries[2, a, b]
            nxt = [dict() for _ in range(len(poly) + 1)]
            for m, coeff in enumerate(poly):
                for mono, v in coeff.items():
                    for shift, e in ((0, e1), (1, e2)):
                        if e is None:
                            continue
                        col, s = e
                        key = tuple(sorted(mono + (col,)))
                        nxt[m + shift][key] = nxt[m + shift].get(key, 0) + v * s
            poly = nxt
        for m in range(deg + 1):
            for mono, v in poly[m].items():
                total[m][mono] = total[m].get(mono, 0) + v
    return tuple({k: v for k, v in t.items() if v} for t in total)


def forced_degenerate(case: CaseId, zeros: Iterable[CoordinateId]) -> str | None:
    """Why every pencil vanishing on ``zeros`` fails semistability, if a reason exists.

    Checks whether F_x vanishes identically, or whether v2^2 or v1^2
    divides F_x identically once the zero coordinates are substituted.
    """
    idx = batch.column_index(case)
    dead = {idx[c] for c in zeros}
    coeffs = [
        {mono: v for mono, v in poly.items() if not dead.intersection(mono)}
        for poly in symbolic_form(case)
    ]
    alive = [bool(c) for c in coeffs]
    if not any(alive):
        return "F_x vanishes identically"
    if not alive[0] and not alive[1]:
        return "v2^2 divides F_x"
    if not alive[-1] and not alive[-2]:
        return "v1^2 divides F_x"
    return None


def uncovered_patterns(case: CaseId) -> list[dict]:
    """Zero/nonzero patterns of the tracked coordinates outside every partition stratum
    that are not forced out of the domain by the form F_x."""
    coords = tracked_coordinates(case)
    bits, nz = _patterns(coords)
    members = partition_strata(case)
    hits = np.zeros(bits.shape[0], dtype=np.int64)
    for s in members:
        hits += np.broadcast_to(s.holds(nz), (bits.shape[0],))
    escaping = []
    for row in np.flatnonzero(hits == 0):
        zeros = [c for c, b in zip(coords, bits[row]) if not b]
        if forced_degenerate(case, zeros) is None:
            escaping.append({"zeros": [c.index for c in zeros]})
    return escaping


def degenerate_reasons(case: CaseId) -> dict[str, int]:
    """How each uncovered pattern is excluded (counts by reason)."""
    coords = tracked_coordinates(case)
    bits, nz = _patterns(coords)
    hits = np.zeros(bits.shape[0], dtype=np.int64)
    for s in partition_strata(case):
        hits += np.broadcast_to(s.holds(nz), (bits.shape[0],))
    reasons: dict[str, int] = {}
    for row in np.flatnonzero(hits == 0):
        zeros = [c for c, b in zip(coords, bits[row]) if not b]
        r = forced_degenerate(case, zeros) or "not excluded"
        reasons[r] = reasons.get(r, 0) + 1
    return dict(sorted(reasons.items()))


# ---------------------------------------------------------------------------
# stability witnesses


class TheoremViolation(Exception):
    def __init__(self, message: str, pencil: MatrixPencil):
        super().__init__(message)
        self.pencil = pencil


@dataclass(frozen=True)
class StabilityWitness:
    coordinates: tuple[CoordinateId, ...]
    weights: tuple  # Fractions, summing to 1
    total: tuple  # the combined d-vector, entrywise > 0

    def to_json(self) -> dict:
        return {
            "combination": [[c.index, rat_str(w)] for c, w in zip(self.coordinates, self.weights)],
            "sum": [rat_str(v) for v in self.total],
        }


@lru_cache(maxsize=None)
def _flat_weights(case: CaseId) -> dict:
    table = derived_weight_table(case)
    return {c: table[c].flat() for c in coordinates(case)}


@lru_cache(maxsize=None)
def _support_witness(case: CaseId, support: tuple[CoordinateId, ...]):
    flat = _flat_weights(case)
    points = [flat[c] for c in support]
    ok, witness = strict_cone_feasible(points)
    if not ok:
        return None
    if not check_cone_witness(points, witness):
        raise AssertionError("strict-cone witness failed to re-validate")
    coords = tuple(support[i] for i, _ in witness)
    weights = tuple(mu for _, mu in witness)
    total = tuple(sum((mu * points[i][j] for i, mu in witness), 0) for j in range(len(points[0])))
    return StabilityWitness(coords, weights, total)


def k_stable_witness(x: MatrixPencil) -> StabilityWitness:
    """A convex combination of weights of nonzero coordinates with positive d-sum."""
    if x.case not in (CaseId.CASE1, CaseId.CASE2):
        raise InputError("stability witnesses are defined for the 2x2 and 3x3 cases")
    if not in_L0(x):
        raise InputError("pencil is not in L0")
    w = _support_witness(x.case, x.nonzero_coordinates())
    if w is None:
        raise TheoremViolation("no strictly positive combination of weights", x)
    return w


def verify_stability(case: CaseId, cfg: SampleConfig) -> ClaimReport:
    """Witness every L0 pencil: all of them in exhaustive mode, else sample_count members."""
    report = _report("stability", case, cfg)
    coords = coordinates(case)
    supports: set[tuple] = set()

    def select(x, _k):
        return batch.in_L0(case, x, cfg.prime)

    def absorb(x):
        bad = []
        for row in x:
            support = tuple(c for c, v in zip(coords, row) if v)
            supports.add(support)
            w = _support_witness(case, support)
            if w is None or not all(v > 0 for v in w.total):
                bad.append(row)
        if bad:
            report.add_violations(case, cfg.prime, np.array(bad))

    rng = stream_seed(cfg.seed, 0, cfg.prime, case.number)
    report.tested, report.drawn = _drive(
        case, cfg, select, absorb, [frozenset()], [(frozenset(), frozenset())], rng)
    report.stratum_counts = {"L0": report.tested}
    report.extra = {"distinct_supports": len(supports)}
    return report


def default_mode(case: CaseId, prime: int, free: int | None = None) -> str:
    n = len(coordinates(case)) if free is None else free
    return EXHAUSTIVE if prime ** n <= EXHAUSTIVE_LIMIT else RANDOM
