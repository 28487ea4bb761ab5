import json
import logging
import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from potts_tisgm.critical import theta_m
from potts_tisgm.enumeration import (EnumerationError, boundary_law_vector, canonicalize,
                                     classify_regime, closed_form_count, complement_descriptor,
                                     count_tisgm, descriptors_to_json, enumerate_tisgm,
                                     free_descriptor, root_to_z)
from potts_tisgm.model import MeasureDescriptor, PottsParams, theta_critical
from potts_tisgm.recursion import vector_residual

SQ2 = math.sqrt(2)
Z_BIG = (2 + SQ2) ** 2
Z_SMALL = (2 - SQ2) ** 2


@pytest.mark.parametrize("q,k,theta,label,count", [
    (3, 2, 3.0, "unique", 1),
    (3, 2, 5.0, "all_open", 7),
    (3, 2, 4.0, "at_thetac", 4),
    (4, 2, 4.9, "between(1)", 9),
    (4, 2, 5.0, "at_thetac", 5),
    (5, 2, 5.0, "at_thetam(1)", 6),
])
def test_count_examples(q, k, theta, label, count):
    c = count_tisgm(PottsParams(q, k, theta))
    assert (c.label, c.count) == (label, count)
    assert c.to_record() == {"regime": label, "count": count}


def test_closed_form_count_table():
    assert closed_form_count(6, "between", 2) == 1 + 2 * (6 + 15)
    assert closed_form_count(6, "at_thetac") == 32 - 10
    assert closed_form_count(7, "at_thetac") == 64
    assert closed_form_count(6, "at_thetam", 2) == 1 + 15 + 2 * 6
    with pytest.raises(ValueError):
        closed_form_count(3, "nope")


def test_odd_q_coincidence_not_flagged(caplog):
    with caplog.at_level(logging.WARNING):
        classify_regime(PottsParams(5, 3, 3.5))
    assert "coincides" not in caplog.text


# --- enumeration -------------------------------------------------------------

def test_enumerate_q3_all_open():
    ds = enumerate_tisgm(PottsParams(3, 2, 5.0))
    assert len(ds) == 7
    assert ds[0] == free_descriptor(3)
    rest = ds[1:]
    assert all(d.m == 1 for d in rest)
    small = sorted(tuple(d.M) for d in rest if d.zstar < 1)
    big = sorted(tuple(d.M) for d in rest if d.zstar > 1)
    assert small == big == [(1,), (2,), (3,)]
    for d in rest:
        assert d.zstar == pytest.approx(Z_BIG if d.zstar > 1 else Z_SMALL, rel=1e-12)


def test_enumerate_unique():
    assert enumerate_tisgm(PottsParams(3, 2, 3.0)) == [free_descriptor(3)]


def test_enumerate_q4_all_open():
    ds = enumerate_tisgm(PottsParams(4, 2, 6.0))
    assert len(ds) == 15
    half = [d for d in ds if d.m == 2]
    assert len(half) == comb(4, 2)
    assert all(d.zstar > 1 for d in half)
    assert sum(d.m == 1 for d in ds) == 8


def test_enumerate_at_thetac_drops_trivial_roots():
    ds = enumerate_tisgm(PottsParams(3, 2, "4"))
    assert len(ds) == 4
    assert sum(d.is_free for d in ds) == 1


def test_enumerate_is_deterministic():
    a = enumerate_tisgm(PottsParams(5, 3, 4.0))
    b = enumerate_tisgm(PottsParams(5, 3, 4.0))
    assert a == b


def test_enumeration_records():
    ds = enumerate_tisgm(PottsParams(3, 2, 5.0))
    recs = json.loads(descriptors_to_json(ds, "all_open"))
    assert recs[0] == {"M": [], "zstar": 1.0, "m": 0, "regime": "all_open"}
    assert {tuple(r["M"]) for r in recs[1:]} == {(1,), (2,), (3,)}


def _grid(q, k):
    marks = [theta_m(m, q, k) for m in range(1, q // 2 + 1)] + [theta_critical(q, k)]
    pts = {1.05, 2 * max(marks), 10 * max(marks)}
    for t in marks:
        for f in (1 - 1e-3, 1 - 1e-9, 1.0, 1 + 1e-9, 1 + 1e-3):
            pts.add(t * f)
    for a, b in zip(marks, marks[1:]):
        pts.add(0.5 * (a + b))
    return sorted(p for p in pts if p > 1)


@pytest.mark.parametrize("q", range(2, 7))
@pytest.mark.parametrize("k", [2, 3])
def test_length_agreement(q, k):
    for theta in _grid(q, k):
        p = PottsParams(q, k, theta)
        ds = enumerate_tisgm(p)
        assert len(ds) == count_tisgm(p).count
        keys = {(d.M, round(math.log(d.zstar), 8)) for d in ds}
        assert len(keys) == len(ds)
        for d in ds:
            assert d == canonicalize(d)
            res = vector_residual(boundary_law_vector(d), p)
            assert res <= 1e-9 * max(1.0, d.zstar)


def test_enumeration_error_on_inconsistent_roots(monkeypatch):
    import potts_tisgm.enumeration as enum
    from potts_tisgm.recursion import RootSet

    monkeypatch.setattr(enum, "solve_phi", lambda m, params, rtol=None: RootSet(()))
    with pytest.raises(EnumerationError):
        enum.enumerate_tisgm(PottsParams(3, 2, 5.0))


# --- complement / canonical form ---------------------------------------------

def test_complement_examples():
    assert complement_descriptor(MeasureDescriptor({1}, 2.0, 3)) == MeasureDescriptor({2, 3}, 0.5, 3)
    full = complement_descriptor(free_descriptor(3))
    assert full.M == frozenset({1, 2, 3}) and full.zstar == 1.0
    assert canonicalize(full) == free_descriptor(3)
    assert complement_descriptor(MeasureDescriptor({1, 2}, 4.0, 4)) == MeasureDescriptor({3, 4}, 0.25, 4)


@st.composite
def descriptors(draw):
    q = draw(st.integers(2, 8))
    M = draw(st.sets(st.integers(1, q), max_size=q))
    z = 2.0 ** draw(st.integers(-20, 20))  # powers of two invert exactly
    return MeasureDescriptor(frozenset(M), z, q)


@given(descriptors())
def test_complement_involution(d):
    assert complement_descriptor(complement_descriptor(d)) == d


@given(descriptors())
def test_canonical_uniqueness(d):
    c = canonicalize(d)
    assert c == canonicalize(complement_descriptor(d))
    assert 2 * c.m <= c.q
    if 2 * c.m == c.q and not c.is_free:
        assert c.zstar > 1


# --- boundary law vectors ----------------------------------------------------

def test_boundary_law_vector_examples():
    assert boundary_law_vector(MeasureDescriptor({1}, 11.656854, 3)).z == (11.656854, 1.0)
    assert boundary_law_vector(free_descriptor(3)).z == (1.0, 1.0)
    z = boundary_law_vector(MeasureDescriptor({3}, Z_BIG, 3)).z
    assert z == pytest.approx((1 / Z_BIG, 1 / Z_BIG), rel=1e-15)
    assert vector_residual(z, PottsParams(3, 2, 5.0)) <= 1e-9


def test_boundary_law_vector_q_mismatch():
    with pytest.raises(ValueError):
        boundary_law_vector(free_descriptor(3), 4)


def test_root_to_z():
    assert root_to_z(2 + SQ2, 2) == pytest.approx(Z_BIG, rel=1e-14)
    assert root_to_z(1e3, 6) == pytest.approx(1e18, rel=1e-13)
    assert root_to_z(1.0, 5) == 1.0


def test_enumerated_vectors_have_two_value_pattern():
    for q, k, theta in [(4, 2, 6.0), (5, 3, 4.0), (6, 2, 8.0)]:
        for d in enumerate_tisgm(PottsParams(q, k, theta)):
            vals = np.unique(boundary_law_vector(d).z)
            assert len(vals) <= 2 and (len(vals) < 2 or 1.0 in vals)
