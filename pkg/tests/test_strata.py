from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest

from pvsverify import strata
from pvsverify.fields import RATIONALS, PrimeField
from pvsverify.geometry import InputError, check_cone_witness
from pvsverify.pencils import MatrixPencil, f_x, in_L0, is_semistable
from pvsverify.strata import (
    EXHAUSTIVE,
    RANDOM,
    Claim,
    ClaimReport,
    ClassificationError,
    SampleConfig,
    TheoremViolation,
    k_stable_witness,
    partition_strata,
    pattern_overlaps,
    stratum_of,
    uncovered_patterns,
    verify_claim,
    verify_partition,
    verify_stability,
)
from pvsverify.weights import CaseId, CoordinateId, coordinates, derived_weight_table

F2, F3 = PrimeField(2), PrimeField(3)


def x(index):
    i, jk = index.split(",")
    return CoordinateId(int(i), int(jk[0]), int(jk[1]))


def search(case, field, rng, want, zeros=(), nonzeros=(), tries=20000):
    p = field.p
    for _ in range(tries):
        vals = dict(zip(coordinates(case), (int(v) for v in rng.integers(0, p, len(coordinates(case))))))
        for c in zeros:
            vals[x(c)] = 0
        for c in nonzeros:
            vals[x(c)] = int(rng.integers(1, p))
        pen = MatrixPencil.from_coords(case, field, vals)
        if want(pen):
            return pen
    raise AssertionError("no pencil found")


# ---- strata and classification


def test_partition_members():
    assert [s.index for s in partition_strata(CaseId.CASE3)] == [1, 2, 3]
    idx = [s.index for s in partition_strata(CaseId.CASE4)]
    assert idx == [1, 2] + list(range(4, 14)) + list(range(15, 19))


def test_stratum_of_examples():
    rng = np.random.default_rng(0)
    pen = search(CaseId.CASE3, F3, rng, in_L0, nonzeros=["1,21"])
    assert stratum_of(pen).name == "L1"
    pen = search(CaseId.CASE4, F3, rng, is_semistable, zeros=["1,21", "1,31", "1,41"], nonzeros=["1,32"])
    assert stratum_of(pen).name == "L2"


def test_stratum_of_outside_domain():
    zero = MatrixPencil.from_coords(CaseId.CASE4, F2, [0] * 30)
    with pytest.raises(ClassificationError) as err:
        stratum_of(zero)
    assert err.value.pencil == zero


def test_case3_scalar_classification_exhaustive_f2():
    seen = {}
    for vals in product(range(2), repeat=12):
        pen = MatrixPencil.from_coords(CaseId.CASE3, F2, vals)
        if in_L0(pen):
            name = stratum_of(pen).name
            seen[name] = seen.get(name, 0) + 1
    report = verify_partition(CaseId.CASE3, SampleConfig(2, EXHAUSTIVE))
    assert report.stratum_counts == {k: seen.get(k, 0) for k in report.stratum_counts}


def test_symbolic_disjointness_and_coverage():
    for case in (CaseId.CASE3, CaseId.CASE4):
        assert pattern_overlaps(case) == []
        assert uncovered_patterns(case) == []


# ---- sampling configuration


def test_sample_config_validation():
    with pytest.raises(InputError):
        SampleConfig(4)
    with pytest.raises(InputError):
        SampleConfig(2, "Sometimes")
    with pytest.raises(InputError):
        verify_partition(CaseId.CASE4, SampleConfig(2, EXHAUSTIVE))


# ---- partition and claims


@pytest.mark.parametrize("p", [2, 3])
def test_case3_partition_exhaustive(p):
    report = verify_partition(CaseId.CASE3, SampleConfig(p, EXHAUSTIVE))
    assert report.ok and report.tested == sum(report.stratum_counts.values())
    assert report.drawn == p ** 12


def test_case4_partition_random():
    report = verify_partition(CaseId.CASE4, SampleConfig(2, RANDOM, 100_000, 42))
    assert report.ok and report.tested == 100_000
    assert all(v > 0 for v in report.stratum_counts.values())


def test_claim4_f2():
    report = verify_claim(4, SampleConfig(2, RANDOM, 100_000, 7))
    assert report.ok and report.tested == 100_000 and report.stratum_counts == {"L7": 100_000}


def test_claim8_f3():
    report = verify_claim("claim-8", SampleConfig(3, RANDOM, 100_000, 7))
    assert report.ok and report.tested == 100_000


def test_claim11_exhaustive_f2():
    report = verify_claim(11, SampleConfig(2, EXHAUSTIVE))
    assert report.ok
    assert report.drawn == 2 ** 20 + 2 ** 19


def test_mutated_claim_is_caught(monkeypatch):
    # L17 pencils need not have x_{1,62} != 0, so this false claim must produce counterexamples
    fake = Claim("claim-11", (17,), frozenset({x("1,62")}), "false variant")
    monkeypatch.setattr(strata, "CLAIMS", (fake,))
    report = verify_claim(11, SampleConfig(3, RANDOM, 2000, 1))
    assert not report.ok and report.violation_count > 0
    bad = MatrixPencil.from_json(report.violations[0])
    assert is_semistable(bad) and stratum_of(bad).index == 17 and bad.coordinate(x("1,62")) == 0


def test_semistability_filter_matters():
    # inside L17 with the claimed coordinate x_{2,21} also zero, F_x is divisible by v2^2
    rng = np.random.default_rng(3)
    l17 = strata.get_stratum(CaseId.CASE4, 17)
    for _ in range(200):
        vals = {c: int(rng.integers(0, 5)) for c in coordinates(CaseId.CASE4)}
        for c in l17.zeros | {x("2,21")}:
            vals[c] = 0
        pen = MatrixPencil.from_coords(CaseId.CASE4, RATIONALS, vals)
        f = f_x(pen)
        assert f.coefficients[0] == 0 and f.coefficients[1] == 0
        assert not is_semistable(pen)


def test_reports_are_reproducible():
    cfg = SampleConfig(3, RANDOM, 5000, 99)
    a, b = verify_claim(6, cfg), verify_claim(6, cfg)
    assert a.to_json() == b.to_json()
    assert ClaimReport.from_json(a.to_json()).to_json() == a.to_json()
    c = verify_partition(CaseId.CASE4, cfg)
    assert c.to_json() == verify_partition(CaseId.CASE4, cfg).to_json()


# ---- stability witnesses


def test_witness_all_nonzero():
    pen = MatrixPencil.from_coords(CaseId.CASE1, RATIONALS, [1, 1, 1, 2, 1, 2, 2, 1])
    w = k_stable_witness(pen)
    assert w.coordinates == (x("1,11"),) and w.weights == (1,)
    assert w.total == (F(1, 2),) * 3


def test_witness_three_weights():
    pen = MatrixPencil.from_coords(CaseId.CASE1, RATIONALS, [0, 1, 1, 0, 1, 0, 0, 2])
    w = k_stable_witness(pen)
    assert set(w.coordinates) == {x("1,12"), x("1,21"), x("2,11")}
    assert w.weights == (F(1, 3),) * 3
    table = derived_weight_table(CaseId.CASE1)
    points = [table[c].flat() for c in w.coordinates]
    assert check_cone_witness(points, list(enumerate(w.weights)))


def test_witness_preconditions():
    with pytest.raises(InputError):
        k_stable_witness(MatrixPencil.from_coords(CaseId.CASE3, F2, [0] * 12))
    with pytest.raises(InputError):
        k_stable_witness(MatrixPencil.from_coords(CaseId.CASE1, F2, [0] * 8))
    assert issubclass(TheoremViolation, Exception)


def test_stability_exhaustive_case1():
    for p in (2, 3):
        report = verify_stability(CaseId.CASE1, SampleConfig(p, EXHAUSTIVE))
        assert report.ok
    assert verify_stability(CaseId.CASE1, SampleConfig(2, EXHAUSTIVE)).tested == 12
