from fractions import Fraction as F

import pytest

from pvsverify import certify
from pvsverify.certify import (
    BOX_VERTICES,
    ConvergenceCertificate,
    Direction,
    IndexSet,
    Refutation,
    TorusLogPoint,
    c_I,
    check_identities,
    find_certificate,
    full_index_set,
    log_h,
    stratum_certificates,
    subset_bound_check,
    verify_h_lemmas,
)
from pvsverify.geometry import InputError
from pvsverify.weights import CaseId, CoordinateId, ExponentVector, coordinates, format_combo, parse_combo

C3, C4 = CaseId.CASE3, CaseId.CASE4


def ev(*blocks, lam=None):
    return ExponentVector.make(blocks, lam)


def zero_point(case, ell):
    dim = len(certify._table(case)[coordinates(case)[0]].flat())
    return TorusLogPoint((F(0),) * dim, F(ell))


# ---- c_I and h_I


def test_c0_values():
    assert c_I(full_index_set(C3)) == ev([-3, -2, -3], [-3], lam=-12)
    assert c_I(full_index_set(C4)) == ev([F(-20, 3), -8, -6, -8, F(-20, 3)], [F(-15, 2)], lam=-30)
    empty = c_I(IndexSet(C3, frozenset()))
    assert all(v == 0 for v in empty.flat()) and empty.lambda_exp == 0


def test_index_set_rejects_foreign_coordinates():
    with pytest.raises(InputError):
        IndexSet(C3, frozenset({CoordinateId(1, 6, 1)}))


def test_log_h_examples():
    i0 = full_index_set(C3)
    assert log_h(IndexSet(C3, frozenset()), zero_point(C3, -1)) == 0
    assert log_h(i0, zero_point(C3, -1)) == 12
    big = TorusLogPoint((F(1), F(2), F(1), F(0)), F(1000))
    assert log_h(i0, big) == 0


def test_log_h_hand_points():
    i0 = full_index_set(C3)
    half1 = IndexSet(C3, frozenset(c for c in i0.members if c.i == 1))
    half2 = IndexSet(C3, frozenset(c for c in i0.members if c.i == 2))
    p = zero_point(C3, -1)
    assert log_h(half1, p) == len(half1) == 6 <= log_h(i0, p)
    pt = TorusLogPoint((F(1, 2), F(3), F(0), F(2, 3)), F(-7, 4))
    assert log_h(i0, pt) == log_h(half1, pt) + log_h(half2, pt)


@pytest.mark.parametrize("case", [C3, C4])
def test_h_lemmas(case):
    report = verify_h_lemmas(case, 1000, 1)
    assert set(report) == set(certify.H_CHECKS)
    for name, rep in report.items():
        assert rep["violation_count"] == 0, name
        assert rep["tested"] >= 1000
    if case is C3:
        assert report["h-subset-max"]["exhaustive"] == report["h-subset-max"]["tested"]


# ---- identities


def test_identities_hold():
    for case in CaseId:
        checks = check_identities(case)
        assert checks and all(c.holds for c in checks)
        assert all(c.anchor for c in checks)
    assert sum(len(check_identities(c)) for c in CaseId) >= 20


def test_identity_examples_present():
    combos = {format_combo(c.combo).replace(" ", "") for case in CaseId for c in check_identities(case)}
    for text in ("d_{1,43}+2d_{1,51}", "3d_{1,21}+2d_{1,13}+2d_{2,12}",
                 "d_{1,13}+d_{1,22}+d_{1,31}+d_{2,12}+d_{2,21}", "d_{1,32}+d_{1,41}", "2d_{1,42}+d_{2,61}"):
        assert text in combos, text


# ---- certificate search


def test_case3_l2_threshold():
    cert = find_certificate(ev([0, -2, 0], [2], lam=0), [ev([F(1, 2), 0, F(1, 2)], [F(1, 2)], lam=1)])
    assert isinstance(cert, ConvergenceCertificate) and cert.validate()
    assert cert.threshold == 4


def test_case3_l3_threshold():
    cert = find_certificate(ev([F(-1, 2), -2, F(-1, 2)], [2], lam=0), [ev([0, 0, 0], [1], lam=2)])
    assert cert.validate() and cert.threshold == 2


def test_degenerate_direction():
    d = ev([0, 0], lam=1)
    assert find_certificate(ev([-1, -1], lam=0), [d]).validate()
    ref = find_certificate(ev([0, -1], lam=0), [d])
    assert isinstance(ref, Refutation) and ref.validate(ev([0, -1], lam=0), [Direction(d, "d")])


def test_missing_ray_is_refuted():
    d = ev([1, -1], lam=1)
    ref = find_certificate(ev([-5, -5], lam=0), [d])
    assert isinstance(ref, Refutation) and ref.reason == "no-ray"
    assert ref.validate(ev([-5, -5], lam=0), [Direction(d, "d")])


def test_find_certificate_needs_directions():
    with pytest.raises(InputError):
        find_certificate(ev([-1], lam=0), [])


def test_certificate_round_trip_and_tamper():
    cert = find_certificate(ev([0, -2, 0], [2], lam=0), [ev([F(1, 2), 0, F(1, 2)], [F(1, 2)], lam=1)])
    back = ConvergenceCertificate.from_json(cert.to_json())
    assert back == cert and back.validate()
    bad = ConvergenceCertificate(cert.base, cert.directions, (F(1),), cert.ray, cert.threshold)
    assert not bad.validate()


# ---- per-stratum certificates


def test_case3_certificates():
    certs = stratum_certificates(C3)
    assert [c.stratum for c in certs] == ["L1", "L2", "L3"]
    assert [c.threshold for c in certs] == [4, 4, 2]
    assert all(c.ok for c in certs)


def test_case4_certificates():
    certs = {c.stratum: c for c in stratum_certificates(C4)}
    assert len(certs) == 16 and all(c.ok for c in certs.values())
    for name in ("L2", "L5", "L6", "L10", "L12", "L13"):
        assert certs[name].vertices_covered == len(BOX_VERTICES) == 4
        assert {c.vertex for c in certs[name].certificates} == set(BOX_VERTICES)
    for name in ("L5", "L6", "L10"):
        assert certs[name].form == "q" and len(certs[name].p_refutations) == 4
        assert all(c.validate() for c in certs[name].constructive)


def test_case4_l8_direction_is_positive():
    cert = {c.stratum: c for c in stratum_certificates(C4)}["L8"]
    (only,) = cert.certificates
    (direction,) = only.directions
    assert direction.label.replace(" ", "") == "3d_{1,43}+2d_{2,21}"
    assert all(v > 0 for v in direction.vector.flat())


def test_case4_l1_base():
    cert = {c.stratum: c for c in stratum_certificates(C4)}["L1"]
    (only,) = cert.certificates
    d0_minus_c0 = (certify.rho_d0(C4) - c_I(full_index_set(C4))).with_lambda(0)
    assert only.base == d0_minus_c0
    assert only.directions[0].label == "d_{1,41}"


def test_dominations_hold():
    for case in (C3, C4):
        for item in certify.ITEMS[case]:
            assert all(d.holds for d in certify.check_dominations(item))


def test_subset_bound():
    report = subset_bound_check()
    assert report["ok"] and report["subsets"] == 2 ** 18 and report["subset_failures"] == 0


def test_manifest_is_complete():
    rows = certify.manifest()
    assert len(rows) == 19
    for row in rows:
        for spec in row["directions"]:
            assert parse_combo(spec["combo"])
