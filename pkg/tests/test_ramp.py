import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stairmul.field import FieldMatrix, PrimeField, vandermonde_row
from stairmul.ramp import default_ramp_points, ss_decode, ss_encode

GF5 = PrimeField(5)
GF7 = PrimeField(7)


def _mat(field, rows):
    return FieldMatrix.from_rows(field, rows)


def test_three_two_shares_are_r_rpa_rp2a():
    a = _mat(GF5, [[3, 1], [2, 0]])
    r = _mat(GF5, [[4, 4], [1, 2]])
    shares = ss_encode([a], r, (0, 1, 2))
    assert shares[0].block == r
    assert shares[1].block == r.add(a)
    assert shares[2].block == r.add(a.scale(2))


def test_all_zero_inputs_give_zero_shares():
    z = FieldMatrix.zeros(GF5, 2, 2)
    for s in ss_encode([z], z, (0, 1, 2)):
        assert s.block.is_zero()


@settings(max_examples=40)
@given(st.data())
def test_encode_matches_polynomial_evaluation_oracle(data):
    # (4, 3): share_i = R + A1 x + A2 x^2 evaluated directly.
    draw = lambda: _mat(GF5, [[data.draw(st.integers(0, 4))]])
    a1, a2, r = draw(), draw(), draw()
    shares = ss_encode([a1, a2], r, (0, 1, 2, 3))
    for s in shares:
        powers = vandermonde_row(GF5, s.point, 3)
        want = r.add(a1.scale(powers[1])).add(a2.scale(powers[2]))
        assert s.block == want


def test_duplicate_points_rejected():
    a = _mat(GF5, [[1]])
    with pytest.raises(ValueError):
        ss_encode([a], a, (0, 1, 1))


def test_block_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ss_encode([_mat(GF5, [[1, 2]])], _mat(GF5, [[1]]), (0, 1, 2))


def test_decode_is_s2_minus_s1_for_points_zero_one():
    rng = random.Random(5)
    a = FieldMatrix.random(GF5, 3, 2, rng)
    r = FieldMatrix.random(GF5, 3, 2, rng)
    shares = ss_encode([a], r, (0, 1, 2))
    got = ss_decode([(0, shares[0].block), (1, shares[1].block)], 2)
    assert got == [a]
    assert shares[1].block.sub(shares[0].block) == a


def test_every_k_subset_decodes_4_3():
    rng = random.Random(11)
    blocks = [FieldMatrix.random(GF5, 2, 2, rng) for _ in range(2)]
    key = FieldMatrix.random(GF5, 2, 2, rng)
    shares = ss_encode(blocks, key, (0, 1, 2, 3))
    for subset in itertools.combinations(shares, 3):
        got = ss_decode([(s.point, s.block) for s in subset], 3)
        assert got == blocks


def test_too_few_shares_is_an_error():
    a = _mat(GF5, [[1]])
    shares = ss_encode([a], a, (0, 1, 2))
    with pytest.raises(ValueError):
        ss_decode([(shares[0].point, shares[0].block)], 2)


def test_single_share_privacy_exhaustive_3_2():
    # Over all secrets and uniform keys, each share's distribution is uniform
    # and identical for every secret (single-symbol blocks over GF(5)).
    points = (0, 1, 2)
    for worker in range(3):
        dists = []
        for secret in range(5):
            seen = [0] * 5
            for key in range(5):
                share = ss_encode(
                    [_mat(GF5, [[secret]])], _mat(GF5, [[key]]), points
                )[worker]
                seen[share.block.at(0, 0)] += 1
            dists.append(tuple(seen))
        assert len(set(dists)) == 1
        assert dists[0] == (1, 1, 1, 1, 1)


def test_decode_on_products_returns_a_times_x():
    rng = random.Random(21)
    blocks = [FieldMatrix.random(GF7, 2, 3, rng) for _ in range(2)]
    key = FieldMatrix.random(GF7, 2, 3, rng)
    x = FieldMatrix.random(GF7, 3, 1, rng)
    shares = ss_encode(blocks, key, (0, 1, 2, 3))
    products = [(s.point, s.block @ x) for s in shares[:3]]
    got = ss_decode(products, 3)
    assert got == [b @ x for b in blocks]


def test_default_points_match_small_example():
    assert default_ramp_points(GF5, 3) == (0, 1, 2)
    with pytest.raises(ValueError):
        default_ramp_points(GF5, 5)
