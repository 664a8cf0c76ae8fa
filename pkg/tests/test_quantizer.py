from fractions import Fraction
import math

import numpy as np
import pytest

from oracles import fold, rounding_law
from qeclab import quantizer as q
from qeclab.errors import RangeError, ValidationError
from qeclab.rng import stream


def _as_law(atoms):
    return {word.exact_val: p for word, p in atoms}


@pytest.mark.parametrize("w", [2, 3, 5, 8, 12])
def test_atoms_match_rational_oracle(w):
    for v in np.linspace(0.5, q.top_value(w), 37):
        y = float(q.g(v))
        assert y == pytest.approx(float(fold(float(v))), abs=1e-15)
        law = _as_law(q.atom_distribution(v, w))
        assert law == rounding_law(y, w)
        assert sum(law.values()) == 1


def test_g_and_inverse():
    assert q.g(0.5) == 0.0
    assert q.g(1.0) == 1.0
    assert q.g(1.5) == 1.5
    v = np.linspace(0.5, 1.99, 50)
    np.testing.assert_allclose(q.g_inv(q.g(v)), v, rtol=1e-15)
    with pytest.raises(ValidationError):
        q.g(0.0)


def test_g_continuous_at_one():
    assert q.g(1 - 1e-12) == pytest.approx(1.0, abs=1e-11)


@pytest.mark.parametrize("w", range(2, 13))
def test_unbiased_and_variance_bound(w):
    for v in np.linspace(0.5, q.top_value(w), 100):
        atoms = q.atom_distribution(v, w)
        y = Fraction(float(q.g(v)))
        assert q.atoms_mean(atoms) == y
        assert q.atoms_variance(atoms, y) <= Fraction(1, 4**w)


@pytest.mark.parametrize("w", [2, 6, 12])
def test_midpoint_attains_bound(w):
    mid = 1 + Fraction(1, 2**w)
    assert q.atoms_variance(q.h_atoms(float(mid), w), mid) == Fraction(1, 4**w)


def test_grid_points_are_deterministic():
    assert q.h_atoms(1.25, 4) == [(q.WWord(10, 4), Fraction(1))]


def test_empirical_frequency():
    rng = stream(3)
    codes = q.quantize_codes(np.full(40000, 1.3), 4, rng)
    # 1.3 * 8 = 10.4 -> code 11 with probability 0.4
    assert set(np.unique(codes)) == {10, 11}
    assert abs(np.mean(codes == 11) - 0.4) < 4 * math.sqrt(0.24 / 40000)


def test_range_errors():
    with pytest.raises(RangeError):
        q.quantize(2.0, 4, stream(0))
    with pytest.raises(RangeError):
        q.h_w(-0.1, 4, stream(0))
    with pytest.raises(ValidationError):
        q.quantize(1.0, 1, stream(0))


def test_word_bits():
    word = q.WWord(0b1011, 4)
    assert word.val == 1.375
    assert word.bits == (1, 1, 0, 1)  # a_3 .. a_0
    assert q.WWord.from_bits(word.bits) == word
    assert word.encode() == 0b1101
    assert q.WWord.decode(word.encode(), 4) == word
    with pytest.raises(ValidationError):
        q.WWord(16, 4)


def test_tv_distance():
    a = [(q.WWord(1, 3), Fraction(1, 2)), (q.WWord(2, 3), Fraction(1, 2))]
    b = [(q.WWord(2, 3), Fraction(1))]
    assert q.tv_distance(a, b) == Fraction(1, 2)
    assert q.tv_distance(a, a) == 0
