"""Tests for the certified Whitney machinery: cubes, reflect map, chains."""

import math

import numpy as np
import pytest

from cantorslit.dyadic import cubes_touch, projection_contains
from cantorslit.regions import region_spec
from cantorslit.whitney import (
    Q0_ID,
    central_family,
    chain,
    claim_count,
    q0_adjacent,
    reflect_assign,
    v_growth_fit,
    verify_whitney,
    whitney_decompose,
)

LAM = 0.25


@pytest.fixture(scope="module")
def decs():
    rn = region_spec("N_lambda", lam=LAM)
    ro = region_spec("Omega_lambda", lam=LAM)
    w = whitney_decompose(rn, max_gen=7)
    wt = whitney_decompose(ro, max_gen=7)
    return w, wt


def test_decomposition_clean(decs):
    w, wt = decs
    for dec in decs:
        rep = verify_whitney(dec, coverage_samples=2000, seed=1)
        assert rep.total_violations == 0
        assert rep.boundary_crossings == 0
        assert rep.coverage_misses == 0
    assert len(w) > 0 and len(wt) > 0


def test_whitney_bracket_consistency(decs):
    w, _ = decs
    sqrt2 = math.sqrt(2.0)
    lo = np.asarray(w.lo_q)
    hi = np.asarray(w.hi_q)
    sides = np.array([c.side for c in w.cubes])
    assert np.all(sqrt2 * sides <= lo + 1e-12)
    assert np.all(hi <= 4.0 * sqrt2 * sides + 1e-12)


def test_adjacency_symmetric_and_touching(decs):
    w, _ = decs
    adj = w.adjacency()
    for cid, nbrs in adj.items():
        for nid, facial in nbrs:
            assert cubes_touch(w.cube(cid), w.cube(nid))
            assert any(m == cid for m, _ in adj[nid])


def test_central_family_on_plane(decs):
    w, _ = decs
    v = central_family(w)
    assert len(v) > 0
    for cid in v:
        c = w.cube(cid)
        assert c.idx[-1] in (-1, 0)
        assert c.lo[0] <= 1.0 and c.hi[0] >= 0.0


def test_reflect_properties(decs):
    w, wt = decs
    ra = reflect_assign(w, wt)
    v = set(ra.v_ids)
    assigned = 0
    for cid, rid in ra.mapping.items():
        if cid in v:
            assert rid == Q0_ID
            continue
        if rid is None or rid == Q0_ID:
            continue
        assigned += 1
        q = w.cube(cid)
        qt = wt.cube(rid)
        # side at most doubled
        assert qt.gen >= q.gen - 1
        # drop-axis projection containment
        assert projection_contains(qt, q, drop_axis=q.n - 1)
        # same closed half-space
        assert q.center[-1] * qt.center[-1] > 0.0
    assert assigned > 0
    assert ra.unassigned_fraction <= 0.05


def test_q0_adjacency():
    from cantorslit.dyadic import DyadicCube
    assert q0_adjacent(DyadicCube(0, (-1, 0)), 2)      # touches x = -1
    assert not q0_adjacent(DyadicCube(3, (2, 2)), 2)   # strictly inside


def test_chain_reaches_reservoir(decs):
    _, wt = decs
    ra_ids = [i + 1 for i, c in enumerate(wt.cubes)][:40]
    found = 0
    for rid in ra_ids:
        ch = chain(wt, rid, Q0_ID)
        if ch.found:
            found += 1
            assert ch.ids[0] == rid and ch.ids[-1] == Q0_ID
            # consecutive members touch (or end at the reservoir)
            for a, b in zip(ch.ids[:-1], ch.ids[1:]):
                if b == Q0_ID:
                    assert q0_adjacent(wt.cube(a), wt.n)
                else:
                    assert cubes_touch(wt.cube(a), wt.cube(b))
    assert found == len(ra_ids)


def test_chain_projection_monotone(decs):
    _, wt = decs
    checked = 0
    for rid in range(1, len(wt.cubes) + 1):
        ch = chain(wt, rid, Q0_ID, constraint="projection-monotone")
        if not ch.found:
            continue
        checked += 1
        src = wt.cube(rid)
        for nid in ch.ids:
            if nid == Q0_ID:
                break
            c = wt.cube(nid)
            assert c.gen <= src.gen
            assert projection_contains(c, src, drop_axis=wt.n - 1)
        if checked >= 60:
            break
    assert checked >= 40


def test_claim_count_runs(decs):
    w, wt = decs
    ra = reflect_assign(w, wt)
    res = claim_count(w, wt, ra, k_max=3)
    assert res.sources > 0
    assert set(res.counts) == {0, 1, 2, 3}
    assert res.counts[0] >= 1
    # counts are maxima of per-cube loads
    for k in res.counts:
        loads = [v for (nid, kk), v in res.per_cube.items() if kk == k]
        assert res.counts[k] == (max(loads) if loads else 0)


def test_v_growth_fit_band(decs):
    w, _ = decs
    b = v_growth_fit(w, gen_lo=4, gen_hi=7)
    # early-window transient sits above the asymptotic slope 1/2
    assert 0.4 <= b <= 0.8


def test_window_decomposition():
    rn = region_spec("N_lambda", lam=LAM)
    w = whitney_decompose(rn, max_gen=8, window=((0.4, 0.1), (0.6, 0.3)))
    assert len(w) > 0
    for c in w.cubes:
        assert np.all(c.hi >= [0.4, 0.1]) and np.all(c.lo <= [0.6, 0.3])
