import numpy as np
import pytest
from hypothesis import given, strategies as st

from metapix import pattern as pt


def test_expand_single_bit_mirrors_four_ways():
    g = pt.unpack_genome("8000000000000000")
    assert g[0, 0] and g.sum() == 1
    grid = pt.expand_genome(g)
    assert grid.shape == (16, 16)
    hits = {(0, 0), (0, 15), (15, 0), (15, 15)}
    assert {tuple(rc) for rc in np.argwhere(grid)} == hits
    assert pt.metal_cell_count(g) == 4


def test_expand_is_always_mirror_symmetric():
    rng = np.random.default_rng(8)
    for _ in range(50):
        grid = pt.expand_genome(rng.integers(0, 2, 64))
        assert pt.is_mirror_symmetric(grid)
    asym = np.zeros((16, 16), dtype=bool)
    asym[0, 0] = True
    assert not pt.is_mirror_symmetric(asym)


def test_pack_is_canonical_hex():
    word = 0x15780B2E0C2EC716
    g = pt.genome_from_u64(word)
    assert pt.pack_genome(g) == "15780B2E0C2EC716"
    assert pt.genome_to_u64(g) == word
    np.testing.assert_array_equal(pt.unpack_genome("15780b2e0c2ec716"), g)


@given(st.integers(0, (1 << 64) - 1))
def test_hex_round_trip(word):
    g = pt.genome_from_u64(word)
    assert pt.genome_to_u64(pt.unpack_genome(pt.pack_genome(g))) == word


def test_unpack_rejects_malformed():
    for bad in ("", "123", "15780B2E0C2EC71", "15780B2E0C2EC7160", "15780B2E0C2EC71G"):
        with pytest.raises(ValueError):
            pt.unpack_genome(bad)
    with pytest.raises(ValueError):
        pt.genome_from_u64(1 << 64)
    with pytest.raises(ValueError):
        pt.genome_from_u64(-1)


def test_as_genome_shapes():
    flat = np.arange(64) % 2
    np.testing.assert_array_equal(pt.as_genome(flat), flat.reshape(8, 8).astype(bool))
    with pytest.raises(ValueError):
        pt.as_genome(np.zeros(63))


def test_row_major_bit_order():
    """Bit k of the packed word is genome cell (k // 8, k % 8), MSB first."""
    g = np.zeros(64)
    g[10] = 1  # row 1, col 2
    word = pt.genome_to_u64(g)
    assert word == 1 << (63 - 10)
    back = pt.genome_from_u64(word)
    assert back[1, 2] and back.sum() == 1


def test_render_pbm():
    g = pt.unpack_genome("8000000000000000")
    text = pt.render_pbm(pt.expand_genome(g))
    lines = text.splitlines()
    assert lines[0] == "P1"
    assert lines[1] == "16 16"
    assert len(lines) == 18
    assert lines[2] == "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1"
    assert lines[3] == "0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0"
    assert lines[17] == "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1"
    assert text.endswith("\n")
    with pytest.raises(ValueError):
        pt.render_pbm(np.zeros((8, 8)))


def test_metal_count_is_four_times_popcount():
    rng = np.random.default_rng(9)
    for _ in range(20):
        bits = rng.integers(0, 2, 64)
        assert pt.metal_cell_count(bits) == 4 * bits.sum()
        assert pt.expand_genome(bits).sum() == pt.metal_cell_count(bits)


def test_geometry_defaults_and_validation():
    geom = pt.GeometryMeta()
    assert geom.f0 == 5.8e9
    assert geom.eps_r == 3.5
    with pytest.raises(ValueError):
        pt.GeometryMeta(substrate_h=0.0)
    with pytest.raises(ValueError):
        pt.GeometryMeta(eps_r=-1.0)
