import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stairmul.field import (
    FieldMatrix,
    InconsistentSystemError,
    PrimeField,
    UnderdeterminedSystemError,
    solve_column,
    split_row_blocks,
    stack_row_blocks,
    vandermonde_row,
)

GF5 = PrimeField(5)
GF7 = PrimeField(7)


def test_modulus_must_be_prime():
    with pytest.raises(ValueError):
        PrimeField(6)
    PrimeField(2)
    PrimeField(2147483647)


def test_scalar_ops_gf5():
    assert GF5.mul(3, 4) == 2
    assert GF5.inv(2) == 3
    assert GF5.add(4, 3) == 2
    assert GF5.sub(1, 3) == 3
    assert GF5.div(1, 2) == 3


def test_division_by_zero_is_explicit():
    with pytest.raises(ZeroDivisionError):
        GF5.inv(0)
    with pytest.raises(ZeroDivisionError):
        GF5.div(3, 5)  # 5 = 0 mod 5


@pytest.mark.parametrize(
    "x,width,expected",
    [
        (2, 3, (1, 2, 4)),
        (3, 3, (1, 3, 4)),  # 3^2 = 9 = 4 mod 5
        (0, 3, (1, 0, 0)),
    ],
)
def test_vandermonde_rows(x, width, expected):
    assert vandermonde_row(GF5, x, width) == expected


def test_vandermonde_width_validation():
    with pytest.raises(ValueError):
        vandermonde_row(GF5, 2, 0)


def test_matmul_identity_and_zero():
    rng = random.Random(0)
    a = FieldMatrix.random(GF7, 3, 3, rng)
    eye = FieldMatrix.identity(GF7, 3)
    assert eye @ a == a
    assert a @ eye == a
    z = FieldMatrix.zeros(GF7, 2, 3)
    x = FieldMatrix.random(GF7, 3, 1, rng)
    assert (z @ x).is_zero()


def test_matmul_matches_schoolbook_oracle():
    rng = random.Random(1)
    a = FieldMatrix.random(GF7, 3, 3, rng)
    x = FieldMatrix.random(GF7, 3, 1, rng)
    got = a @ x
    for r in range(3):
        acc = sum(a.at(r, i) * x.at(i, 0) for i in range(3)) % 7
        assert got.at(r, 0) == acc


def test_matmul_dimension_mismatch():
    a = FieldMatrix.zeros(GF7, 2, 3)
    b = FieldMatrix.zeros(GF7, 2, 3)
    with pytest.raises(ValueError):
        a @ b


def _encode_column(field, column, points):
    """Oracle: evaluate sum_j x^j c[j] at each point."""
    out = []
    for x in points:
        powers = vandermonde_row(field, x, len(column))
        acc = column[0].scale(powers[0])
        for j in range(1, len(column)):
            acc = acc.add(column[j].scale(powers[j]))
        out.append((x, acc))
    return out


def test_solve_column_with_known_bottom_row():
    # Height-3 column [A1, A2, R1]; two evaluations plus the known R1 row
    # pin A1 and A2.
    a1 = FieldMatrix.column(GF5, [3])
    a2 = FieldMatrix.column(GF5, [1])
    r1 = FieldMatrix.column(GF5, [4])
    eqs = _encode_column(GF5, [a1, a2, r1], [1, 2])
    got = solve_column(GF5, eqs, [(2, r1)], 3)
    assert got == [a1, a2, r1]


@settings(max_examples=60)
@given(
    st.integers(2, 4),
    st.data(),
)
def test_full_vandermonde_roundtrip(height, data):
    column = [
        FieldMatrix.column(GF5, [data.draw(st.integers(0, 4))]) for _ in range(height)
    ]
    points = data.draw(
        st.lists(st.integers(1, 4), min_size=height, max_size=height, unique=True)
    )
    eqs = _encode_column(GF5, column, points)
    assert solve_column(GF5, eqs, [], height) == column


@pytest.mark.parametrize("height", range(2, 6))
def test_trailing_knowns_reduce_needed_equations(height):
    # With the bottom rows known, exactly height - known equations suffice.
    rng = random.Random(height)
    field = PrimeField(101)
    column = [FieldMatrix.column(field, [rng.randrange(101)]) for _ in range(height)]
    points = rng.sample(range(1, 101), height)
    eqs = _encode_column(field, column, points)
    for known_count in range(height):
        knowns = [(r, column[r]) for r in range(height - known_count, height)]
        need = height - known_count
        got = solve_column(field, eqs[:need], knowns, height)
        assert got == column
        if need > 1:
            with pytest.raises(UnderdeterminedSystemError):
                solve_column(field, eqs[: need - 1], knowns, height)


def test_solve_column_underdetermined():
    v = FieldMatrix.column(GF5, [1])
    with pytest.raises(UnderdeterminedSystemError):
        solve_column(GF5, [(1, v)], [], 3)


def test_solve_column_rejects_duplicate_points():
    v = FieldMatrix.column(GF5, [1])
    with pytest.raises(ValueError):
        solve_column(GF5, [(1, v), (1, v), (2, v)], [], 3)


def test_solve_column_detects_inconsistency():
    column = [FieldMatrix.column(GF5, [2]), FieldMatrix.column(GF5, [3])]
    eqs = _encode_column(GF5, column, [1, 2, 3])
    bad = [(eqs[0][0], eqs[0][1].add(FieldMatrix.column(GF5, [1])))] + eqs[1:]
    with pytest.raises(InconsistentSystemError):
        solve_column(GF5, bad, [], 2)


def test_split_and_stack_roundtrip_with_padding():
    rng = random.Random(3)
    m = FieldMatrix.random(GF7, 7, 2, rng)
    blocks, rows = split_row_blocks(m, 3)
    assert rows == 7
    assert all(b.rows == 3 for b in blocks)  # ceil(7/3) = 3 rows each
    assert stack_row_blocks(blocks, rows=rows) == m
