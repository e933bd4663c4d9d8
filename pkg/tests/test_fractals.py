import math
from fractions import Fraction

import numpy as np
import pytest

from holderlevels import errors
from holderlevels.fractals import (IFS, Similarity, SpongeSpec, attractor_diameter, dump_ifs, gap_tail_sum,
                                   ifs_points, ifs_rasterize, load_ifs, minimal_k, rasterize_sponge,
                                   sierpinski_preset, sponge_interval_measure, sponge_membership,
                                   sponge_occupancy_1d, square_ifs, sufficient_kmax)
from holderlevels.grid import cell_count, coarsen, slice


def gaps_oracle(k_max):
    """Every open gap (a, b) of generations 2..k_max inside [0, 1/2], as Fractions."""
    out = []
    for k in range(2, k_max + 1):
        s, w = Fraction(1, 2 ** (k * k)), Fraction(1, 2 ** (k ** 3))
        j = 0
        while j * s <= Fraction(1, 2):
            out.append((j * s, j * s + w))
            j += 1
    return out


def occupancy_oracle(N, k_max):
    """A closed cell is empty only when one open gap swallows it."""
    w = Fraction(1, 2 ** (N + 1))
    gaps = gaps_oracle(k_max)
    occ = []
    for i in range(2 ** N):
        lo, hi = i * w, (i + 1) * w
        occ.append(not any(a < lo and hi < b for a, b in gaps))
    return np.array(occ)


def test_membership_examples():
    spec = SpongeSpec(k_max=4)
    assert sponge_membership(0, spec)
    assert not sponge_membership(Fraction(1, 2 ** 9), spec)
    assert sponge_membership(Fraction(1, 2), spec)


def test_membership_matches_open_gap_oracle():
    spec = SpongeSpec(k_max=3)
    gaps = gaps_oracle(3)
    probes = set()
    for a, b in gaps[:40] + gaps[-40:]:
        probes.update({a, b, (a + b) / 2, a + (b - a) / 1000})
    for x in sorted(probes):
        if x <= Fraction(1, 2):
            assert sponge_membership(x, spec) == (not any(a < x < b for a, b in gaps))


def test_membership_rejects_outside():
    with pytest.raises(errors.InvalidArgument):
        sponge_membership(0.75, SpongeSpec())


@pytest.mark.parametrize("N", [1, 5, 8, 9, 11])
def test_occupancy_matches_interval_oracle(N):
    assert np.array_equal(sponge_occupancy_1d(N, 3), occupancy_oracle(N, 3))


def test_resolution_one_is_full():
    assert cell_count(rasterize_sponge(SpongeSpec(k_max=2), 1)) == 4


def test_kmax_two_at_n8_keeps_every_column():
    assert sponge_occupancy_1d(8, 2).all()


def test_deep_generations_do_not_matter_at_n8():
    assert rasterize_sponge(SpongeSpec(k_max=2), 8) == rasterize_sponge(SpongeSpec(k_max=10), 8)


@pytest.mark.parametrize("N", [1, 7, 8, 26, 27, 63, 64])
def test_sufficient_kmax_is_exact(N):
    k = sufficient_kmax(N)
    if N <= 14:
        assert np.array_equal(sponge_occupancy_1d(N, k), sponge_occupancy_1d(N, k + 3))
    # the next generation is never wide enough to swallow a closed cell
    assert (k + 1) ** 3 >= N + 1


def test_gap_column_slice_is_empty():
    g = rasterize_sponge(SpongeSpec(k_max=3), 9)
    assert cell_count(slice(g, 0, 1)) == 0
    assert cell_count(slice(g, 0, 2)) == 0
    assert cell_count(slice(g, 0, 3)) > 0


def test_sponge_coarsen_equals_direct():
    fine = rasterize_sponge(SpongeSpec(k_max=sufficient_kmax(12)), 12)
    assert coarsen(fine, 6) == rasterize_sponge(SpongeSpec(k_max=sufficient_kmax(6)), 6)


def tail_oracle(k, terms=8):
    return float(sum(Fraction(2) ** (l * l - l ** 3) for l in range(k, k + terms)))


def test_gap_tail_values():
    assert gap_tail_sum(2, 1.0) == pytest.approx(tail_oracle(2), rel=1e-12)
    assert gap_tail_sum(2, 1.0) == pytest.approx(0.06250381, abs=1e-8)
    assert gap_tail_sum(4, 1.0) == pytest.approx(tail_oracle(4), rel=1e-12)
    assert gap_tail_sum(4, 1.0) == pytest.approx(2.0 ** -48, rel=1e-9)


@pytest.mark.parametrize("k", [2, 3, 5])
def test_gap_tail_grows_as_alpha_drops(k):
    assert gap_tail_sum(k, 0.999) > gap_tail_sum(k, 1.0)


def test_minimal_k():
    assert minimal_k(1.0, 1.0) == 4
    assert minimal_k(1.0, 1e6) == 2
    assert minimal_k(0.5, 1.0) > 4


def test_gap_tail_rejects_bad_input():
    with pytest.raises(errors.InvalidArgument):
        gap_tail_sum(1, 1.0)
    with pytest.raises(errors.InvalidArgument):
        minimal_k(1.0, 0.0)


def measure_oracle(a, b, k_max):
    """Exact measure of [a, b] minus the gaps of generations 2..k_max."""
    pieces = sorted((max(lo, a), min(hi, b)) for lo, hi in gaps_oracle(k_max) if min(hi, b) > max(lo, a))
    removed, cur = Fraction(0), None
    for lo, hi in pieces:
        if cur is None or lo > cur[1]:
            if cur:
                removed += cur[1] - cur[0]
            cur = [lo, hi]
        else:
            cur[1] = max(cur[1], hi)
    if cur:
        removed += cur[1] - cur[0]
    return float(b - a - removed)


@pytest.mark.parametrize("a,b", [(0, Fraction(1, 2)), (Fraction(3, 64), Fraction(5, 16)),
                                 (Fraction(1, 1000), Fraction(1, 7))])
def test_interval_measure_brackets_oracle(a, b):
    lo, hi = sponge_interval_measure(a, b, k_exact=3)
    exact = measure_oracle(a, b, 3)
    assert hi == pytest.approx(exact, abs=1e-15)
    assert lo <= exact and exact - lo < 1e-6


def test_sponge_line_measure():
    lo, hi = sponge_interval_measure(0, 0.5)
    assert 0.4687 < lo <= hi < 0.4688


def sierpinski_oracle(N):
    i, j = np.meshgrid(np.arange(2 ** N), np.arange(2 ** N), indexing="ij")
    return (i & j) == 0


@pytest.mark.parametrize("N", [1, 4, 7])
def test_sierpinski_pattern(N):
    g = ifs_rasterize(sierpinski_preset(), N, N)
    assert cell_count(g) == 3 ** N
    assert np.array_equal(g.cells, sierpinski_oracle(N))


def test_deep_rasterization_stabilizes():
    ifs = sierpinski_preset()
    counts = [cell_count(ifs_rasterize(ifs, d, 3)) for d in (3, 6, 12, 40)]
    assert counts[0] == 27 and len(set(counts)) == 1


@pytest.mark.parametrize("depth,N", [(1, 3), (3, 5)])
def test_square_ifs_fills(depth, N):
    assert cell_count(ifs_rasterize(square_ifs(), depth, N)) == 4 ** N


@pytest.mark.parametrize("N", [6, 8, 10])
def test_sierpinski_coarsen_equals_direct(N):
    fine = ifs_rasterize(sierpinski_preset(), N, N)
    assert coarsen(fine, N - 3) == ifs_rasterize(sierpinski_preset(), N, 3)


def test_attractor_points_fall_in_raster():
    rot = IFS((Similarity(0.45, (0.2, 0.05), 0.3), Similarity(0.4, (0.5, 0.3), -0.2),
               Similarity(0.35, (0.2, 0.6))), ((0.0, 1.0), (0.0, 1.0)))
    g = ifs_rasterize(rot, 9, 6)
    pts = ifs_points(rot, 6)
    idx = np.clip(np.floor(pts * 64).astype(int), 0, 63)
    # points on a cell boundary may legitimately belong to the neighbour
    inner = np.all(np.abs(pts * 64 - np.rint(pts * 64)) > 1e-9, axis=1)
    assert g.cells[tuple(idx[inner].T)].all()


def test_ifs_validation():
    with pytest.raises(errors.InvalidIFS):
        IFS((Similarity(1.0, (0.0,)), Similarity(0.5, (0.5,))), ((0.0, 1.0),))
    with pytest.raises(errors.InvalidIFS):
        IFS((Similarity(0.5, (0.7,)), Similarity(0.5, (0.0,))), ((0.0, 1.0),))
    with pytest.raises(errors.InvalidIFS):
        IFS((Similarity(0.5, (0.0,)),), ((0.0, 1.0),))


def test_ifs_file_round_trip(tmp_path):
    ifs = IFS((Similarity(0.5, (0.0, 0.0)), Similarity(0.25, (0.5, 0.25), 0.1), Similarity(0.5, (0.0, 0.5))),
              ((0.0, 1.0), (0.0, 1.0)))
    path = tmp_path / "x.ifs"
    path.write_text(dump_ifs(ifs))
    assert load_ifs(path) == ifs


def test_ifs_file_comments_and_errors(tmp_path):
    path = tmp_path / "s.ifs"
    path.write_text("# gasket\nbounds = 0 0.5\nmap = 0.5 0 0\nmap = 0.5 0.25 0   # right\nmap = 0.5 0 0.25\n")
    assert load_ifs(path) == sierpinski_preset()
    path.write_text("map = 0.5 zero 0\nmap = 0.5 0 0\n")
    with pytest.raises(errors.InvalidIFS):
        load_ifs(path)
    path.write_text("colour = red\n")
    with pytest.raises(errors.InvalidIFS):
        load_ifs(path)


def test_attractor_diameter():
    assert attractor_diameter(sierpinski_preset()) == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
    assert attractor_diameter(square_ifs()) == pytest.approx(math.sqrt(2), rel=1e-12)
