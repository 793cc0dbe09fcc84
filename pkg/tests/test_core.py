import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from inexact_sesop.core import (
    DimensionError, IterationRecord, OmegaSequence, Trace, TraceFormatError, BoundParams,
    inner, omega, TRACE_COLUMNS,
)


def test_omega_first_values():
    assert omega(0) == 1.0
    assert omega(1) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-15)
    # recursion evaluated by hand
    w2 = 0.5 + math.sqrt(0.25 + ((1 + math.sqrt(5)) / 2) ** 2)
    assert omega(2) == pytest.approx(w2, rel=1e-15)


def test_omega_bounds_and_increments():
    w = OmegaSequence().upto(10_000)
    k = np.arange(len(w))
    assert np.all((k + 1) / 2 <= w) and np.all(w <= k + 1)
    inc = np.diff(w)
    assert np.all(inc >= 0.5) and np.all(inc <= 1.0)


def test_omega_square_identity():
    w = OmegaSequence().upto(10_000)
    assert np.max(np.abs(w[1:] ** 2 - w[:-1] ** 2 - w[1:]) / w[1:]) <= 1e-9


def test_omega_per_instance_cache():
    a, b = OmegaSequence(), OmegaSequence()
    a[50]
    assert len(a) == 51 and len(b) == 1
    with pytest.raises(IndexError):
        a[-1]
    with pytest.raises(ValueError):
        omega(-1)


def test_inner_examples():
    assert inner([1, 0], [0, 1]) == 0
    assert inner([1, 2], [3, 4]) == 11
    with pytest.raises(DimensionError):
        inner([1, 2], [1, 2, 3])


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
def test_inner_self_is_nonnegative(x):
    assert inner(x, x) >= 0


@pytest.mark.parametrize("kw", [dict(L=0, R=1), dict(L=1, R=-1), dict(L=1, R=1, gamma=0),
                                dict(L=1, R=1, gamma=1.5), dict(L=1, R=1, delta3=-1e-9)])
def test_bound_params_validation(kw):
    with pytest.raises(ValueError):
        BoundParams(**kw)


def _record(k, **kw):
    base = dict(f_gap=1.0 / (k + 1), grad_norm=2.0, g_norm=2.5, w_k=omega(k), W_k=3.0)
    base.update(kw)
    return IterationRecord(k=k, **base)


def test_trace_csv_roundtrip_and_sentinels():
    tr = Trace()
    tr.append(_record(0, f_gap=None))
    tr.append(_record(1, ip_d2=-1e-17, ip_d1=0.0, sub_gap=0.0, dist_to_opt=0.5))
    text = tr.to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert lines[1].split(",")[1] == ""            # unknown gap -> empty field
    back = Trace.from_csv(text)
    assert back.records[0].f_gap is None
    assert back.records[1].ip_d2 == -1e-17
    assert back.to_csv() == text


def test_trace_contiguity_and_header():
    tr = Trace()
    with pytest.raises(TraceFormatError):
        tr.append(_record(1))
    with pytest.raises(TraceFormatError):
        Trace.from_csv("k,f_gap\n0,1\n")
