from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
import sympy

from pvsverify import batch
from pvsverify.fields import RATIONALS, Field, PrimeField
from pvsverify.geometry import InputError
from pvsverify.pencils import (
    BinaryForm,
    GroupElement,
    MatrixPencil,
    act,
    det_gauss,
    det_leibniz,
    discriminant,
    f_x,
    identity_element,
    in_L0,
    is_semistable,
    is_semistable_form,
    pfaffian,
    rational_root_free,
    torus_element,
)
from pvsverify.weights import CaseId, CoordinateId, character, coordinates

Q = RATIONALS
F2, F3 = PrimeField(2), PrimeField(3)


def form(field, *coeffs):
    return BinaryForm(field, tuple(field(c) for c in coeffs))


def pencil(case, field, x1, x2):
    return MatrixPencil(case, field, tuple(tuple(field(v) for v in r) for r in x1),
                        tuple(tuple(field(v) for v in r) for r in x2))


def random_pencil(case, field, rng):
    p = field.p if isinstance(field, PrimeField) else 7
    return MatrixPencil.from_coords(case, field, [int(v) for v in rng.integers(0, p, len(coordinates(case)))])


def random_group(case, field, rng):
    p = field.p
    factors = []
    for n in case.shape:
        while True:
            m = rng.integers(0, p, (n, n)).tolist()
            if det_gauss([[field(v) for v in row] for row in m]):
                factors.append(m)
                break
    return GroupElement.make(field, factors)


# ---- structure and the action


def test_alternating_structure_enforced():
    with pytest.raises(InputError):
        pencil(CaseId.CASE3, Q, [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], [[0] * 4] * 4)
    with pytest.raises(InputError):
        MatrixPencil.from_coords(CaseId.CASE1, Q, [1, 2, 3])


def test_identity_action():
    rng = np.random.default_rng(0)
    for case in CaseId:
        x = random_pencil(case, F3, rng)
        assert act(identity_element(case, F3), x) == x


def test_case3_gl2_scaling():
    a = F(3, 2)
    rng = np.random.default_rng(1)
    x = random_pencil(CaseId.CASE3, Q, rng)
    g = torus_element(CaseId.CASE3, Q, [[1, 1, 1, 1], [a, 1 / a]])
    y = act(g, x)
    assert y.x1 == tuple(tuple(a * v for v in r) for r in x.x1)
    assert y.x2 == tuple(tuple(v / a for v in r) for r in x.x2)


def test_case1_transposition_swaps_rows():
    x = MatrixPencil.from_coords(CaseId.CASE1, Q, [1, 2, 3, 4, 5, 6, 7, 8])
    swap = [[0, 1], [1, 0]]
    eye = [[1, 0], [0, 1]]
    y = act(GroupElement.make(Q, [swap, eye, eye]), x)
    assert y.x1 == (x.x1[1], x.x1[0]) and y.x2 == (x.x2[1], x.x2[0])


def test_action_shape_mismatch():
    x = MatrixPencil.from_coords(CaseId.CASE1, Q, [1] * 8)
    with pytest.raises(InputError):
        act(identity_element(CaseId.CASE3, Q), x)


def test_pencil_json_round_trip():
    rng = np.random.default_rng(2)
    for case in CaseId:
        for field in (F3, Q):
            x = random_pencil(case, field, rng)
            assert MatrixPencil.from_json(x.to_json()) == x
    with pytest.raises(InputError):
        MatrixPencil.from_json({"case": "Case1_D4", "field": "Fp:2", "x1": [[0, 2], [0, 0]], "x2": [[0, 0], [0, 0]]})


# ---- Pfaffians and determinants


def test_pfaffian_sign_anchor():
    m = [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    assert pfaffian([[F(v) for v in r] for r in m]) == 1
    z = [[F(0)] * 4, [0, 0, -2, 3], [0, 2, 0, -5], [0, -3, 5, 0]]
    assert pfaffian([[F(v) for v in r] for r in z]) == 0
    with pytest.raises(InputError):
        pfaffian([[F(0)] * 3] * 3)
    with pytest.raises(InputError):
        pfaffian([[F(0), F(1)], [F(1), F(0)]])


def _alternating(vals, n, field):
    m = [[field(0)] * n for _ in range(n)]
    it = iter(vals)
    for a in range(n):
        for b in range(a):
            v = field(next(it))
            m[a][b], m[b][a] = v, -v
    return m


def test_pfaffian_squared_is_det_exhaustive_f2():
    for vals in product(range(2), repeat=6):
        m = _alternating(vals, 4, F2)
        assert pfaffian(m) ** 2 == det_leibniz(m)


def test_pfaffian_squared_is_det_sampled_6x6():
    field = PrimeField(1009)
    rng = np.random.default_rng(4)
    for _ in range(200):
        m = _alternating(rng.integers(0, 1009, 15).tolist(), 6, field)
        assert pfaffian(m) ** 2 == det_gauss(m)


# ---- binary forms


def test_f_x_examples():
    x = pencil(CaseId.CASE1, Q, [[1, 0], [0, 1]], [[1, 0], [0, 2]])
    assert f_x(x) == form(Q, 1, 3, 2)
    x = pencil(CaseId.CASE1, Q, [[1, 0], [0, 1]], [[1, 0], [0, 1]])
    assert f_x(x) == form(Q, 1, 2, 1)
    x = MatrixPencil.from_coords(CaseId.CASE3, Q, {CoordinateId(1, 2, 1): 1, CoordinateId(1, 4, 3): 1})
    assert f_x(x) == form(Q, 1, 0, 0)


def test_f_x_against_sympy_determinant():
    v1, v2 = sympy.symbols("v1 v2")
    rng = np.random.default_rng(5)
    for case in CaseId:
        for _ in range(5):
            x = random_pencil(case, Q, rng)
            m = sympy.Matrix(case.matrix_size, case.matrix_size,
                             lambda a, b: v1 * int(x.x1[a][b]) + v2 * int(x.x2[a][b]))
            f = f_x(x)
            poly = sum(int(c) * v1 ** (f.degree - k) * v2 ** k for k, c in enumerate(f.coefficients))
            lhs = poly ** 2 if case.alternating else poly
            assert sympy.expand(lhs - m.det()) == 0


def test_f_x_homogeneity():
    rng = np.random.default_rng(6)
    for case in CaseId:
        x = random_pencil(case, Q, rng)
        lam = F(-3, 2)
        f, g = f_x(x), f_x(x.scale(lam))
        assert g.coefficients == tuple(lam ** f.degree * c for c in f.coefficients)


def test_semistable_examples():
    assert discriminant(form(Q, 1, 3, 2)) == 1 and is_semistable_form(form(Q, 1, 3, 2))
    assert not is_semistable_form(form(Q, 1, 2, 1))
    zero = MatrixPencil.from_coords(CaseId.CASE1, Q, [0] * 8)
    assert not is_semistable(zero)


def test_discriminant_against_sympy():
    t = sympy.symbols("t")
    rng = np.random.default_rng(7)
    for deg in (2, 3):
        for _ in range(100):
            coeffs = [int(v) for v in rng.integers(-6, 7, deg + 1)]
            if coeffs[0] == 0:
                coeffs[0] = 1
            f = sum(c * t ** (deg - k) for k, c in enumerate(coeffs))
            assert discriminant(form(Q, *coeffs)) == sympy.discriminant(f, t)


def _distinct_factors_oracle(coeffs, p):
    """Squarefree over the algebraic closure of F_p, computed without the discriminant."""
    if not any(coeffs):
        return False
    lead_zeros = next(m for m, c in enumerate(coeffs) if c % p)
    if lead_zeros > 1:
        return False  # v2^2 divides F
    t = sympy.symbols("t")
    deg = len(coeffs) - 1
    f = sympy.Poly(sum(c * t ** (deg - k) for k, c in enumerate(coeffs)), t, modulus=p)
    # irreducible polynomials over a finite field are separable, so repeated factors are the only obstruction
    _, factors = f.factor_list()
    return all(mult == 1 for _, mult in factors)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_small_characteristic_discriminant(p):
    field = PrimeField(p)
    for deg in (2, 3):
        for coeffs in product(range(p), repeat=deg + 1):
            assert is_semistable_form(form(field, *coeffs)) == _distinct_factors_oracle(list(coeffs), p), coeffs


def test_rational_root_free_examples():
    assert rational_root_free(form(F2, 1, 1, 1))
    assert not rational_root_free(form(Q, 0, 1, 1))
    assert not rational_root_free(form(F3, 0, 1, 1))
    assert rational_root_free(form(Q, 1, 0, 0, -2))
    assert not rational_root_free(form(Q, 1, 0, -1))
    assert rational_root_free(form(Q, 1, 0, 1))


def test_rational_roots_against_sympy():
    t = sympy.symbols("t")
    rng = np.random.default_rng(8)
    for deg in (2, 3):
        for _ in range(150):
            coeffs = [int(v) for v in rng.integers(-9, 10, deg + 1)]
            if not any(coeffs):
                continue
            f = sum(c * t ** (deg - k) for k, c in enumerate(coeffs))
            # (1:0) is a root exactly when the leading coefficient vanishes
            has_root = coeffs[0] == 0 or bool(sympy.Poly(f, t).ground_roots())
            assert rational_root_free(form(Q, *coeffs)) == (not has_root), coeffs


def test_in_L0_examples():
    x = pencil(CaseId.CASE1, Q, [[1, 0], [0, 1]], [[0, -1], [1, 0]])  # v1^2 + v2^2
    assert f_x(x) == form(Q, 1, 0, 1) and in_L0(x)
    x = pencil(CaseId.CASE1, Q, [[1, 0], [0, 1]], [[0, 1], [1, 0]])  # v1^2 - v2^2
    assert not in_L0(x)


def test_case1_f2_l0_count():
    count = sum(in_L0(MatrixPencil.from_coords(CaseId.CASE1, F2, vals)) for vals in product(range(2), repeat=8))
    assert count == 12


def test_case4_l0_is_semistable():
    rng = np.random.default_rng(9)
    for _ in range(50):
        x = random_pencil(CaseId.CASE4, F3, rng)
        assert in_L0(x) == is_semistable(x)


@pytest.mark.parametrize("case", list(CaseId))
def test_classification_is_group_invariant(case):
    rng = np.random.default_rng(10 + case.number)
    field = F3
    for _ in range(1000):
        x = random_pencil(case, field, rng)
        g = random_group(case, field, rng)
        y = act(g, x)
        assert is_semistable(y) == is_semistable(x)
        assert in_L0(y) == in_L0(x)


@pytest.mark.parametrize("case", list(CaseId))
def test_torus_scales_by_raw_character(case):
    rng = np.random.default_rng(20 + case.number)
    for _ in range(20):
        diag = [[F(int(rng.integers(1, 6)), int(rng.integers(1, 6))) * (1 if rng.random() < 0.5 else -1)
                 for _ in range(n)] for n in case.shape]
        x = random_pencil(case, Q, rng)
        y = act(torus_element(case, Q, diag), x)
        for c in coordinates(case):
            scale = F(1)
            for block, exps in zip(diag, character(case, c)):
                for d, e in zip(block, exps):
                    scale *= d ** e
            assert y.coordinate(c) == scale * x.coordinate(c)


# ---- vectorized evaluation matches the scalar path


@pytest.mark.parametrize("case", list(CaseId))
@pytest.mark.parametrize("p", [2, 3, 5])
def test_batch_matches_scalar(case, p):
    rng = np.random.default_rng(30 + p)
    field = PrimeField(p)
    rows = rng.integers(0, p, (300, len(coordinates(case))))
    # include sparse rows so degenerate forms appear
    rows[::3] *= rng.integers(0, 2, rows[::3].shape)
    coeffs = batch.form_coefficients(case, rows, p)
    semi = batch.semistable(coeffs, p)
    l0 = batch.in_L0(case, rows, p)
    for r in range(rows.shape[0]):
        x = MatrixPencil.from_coords(case, field, [int(v) for v in rows[r]])
        f = f_x(x)
        assert [int(c) for c in f.coefficients] == coeffs[r].tolist()
        assert semi[r] == is_semistable(x)
        assert l0[r] == in_L0(x)


def test_enumeration_order():
    block = batch.enumerate_block(3, 2, 0, 8)
    assert block[5].tolist() == [1, 0, 1]
    assert sum(b.shape[0] for b in batch.enumerate_all(4, 3, chunk=10)) == 81


def test_field_parse():
    assert Field.parse("Q") is RATIONALS
    assert Field.parse("Fp:7") == PrimeField(7)
    with pytest.raises(InputError):
        Field.parse("Fp:8")
