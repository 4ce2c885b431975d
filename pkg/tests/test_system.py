import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_system, rel, richardson_derivative
from somor.errors import DimensionMismatch, NearPole, OrderTooHigh, ParseError
from somor.system import (SecondOrderSystem, eval_transfer, eval_transfer_derivative,
                          load_system, msd_benchmark, save_system, to_first_order)


def test_msd_single_mass_closed_form():
    # n = 1: W(s) = 1 / (m s^2 + c s + k)
    sys_ = msd_benchmark(1, 1.0, 0.1, 1.5)
    for s in (0.0, 1.0, 2j, -0.3 + 1j):
        assert eval_transfer(sys_, s)[0, 0] == pytest.approx(1 / (s * s + 0.1 * s + 1.5), rel=1e-14)


def test_msd_two_masses_frozen_value():
    # P(1) = [[2.6, -1.6], [-1.6, 4.2]], W = 4.2 / det = 4.2 / 8.36
    sys_ = msd_benchmark(2, 1.0, 0.1, 1.5)
    assert eval_transfer(sys_, 1.0)[0, 0] == pytest.approx(4.2 / 8.36, rel=1e-14)


def test_msd_structure():
    sys_ = msd_benchmark(5, 2.0, 0.3, 4.0)
    np.testing.assert_allclose(sys_.D, (0.3 / 4.0) * sys_.K, atol=1e-15)
    assert sys_.K[0, 0] == 4.0 and sys_.K[2, 2] == 8.0 and sys_.K[4, 4] == 8.0
    assert sys_.poles.max_real < 0
    with pytest.raises(ValueError):
        msd_benchmark(0)
    with pytest.raises(ValueError):
        msd_benchmark(3, c=-1.0)


def test_output_derivative_term():
    # y = C1 x' with scalar x: W(s) = c1 s / (m s^2 + d s + k)
    sys_ = SecondOrderSystem([[2.0]], [[0.5]], [[3.0]], [[1.0]], [[0.0]], [[1.5]])
    s = 0.7 + 0.2j
    assert eval_transfer(sys_, s)[0, 0] == pytest.approx(1.5 * s / (2 * s * s + 0.5 * s + 3), rel=1e-14)


@pytest.mark.parametrize('k', [1, 2, 3])
def test_derivative_against_richardson(k):
    rng = np.random.default_rng(k)
    sys_ = random_system(rng, 5, 2, 2)
    s = 1.1 + 0.4j
    fd = richardson_derivative(lambda z: eval_transfer(sys_, z), s, k)
    assert rel(eval_transfer_derivative(sys_, s, k), fd) < 1e-6


def test_derivative_errors():
    sys_ = msd_benchmark(2)
    with pytest.raises(OrderTooHigh):
        eval_transfer_derivative(sys_, 1.0, 9)
    np.testing.assert_allclose(eval_transfer_derivative(sys_, 1.0, 0), eval_transfer(sys_, 1.0))


def test_near_pole():
    sys_ = SecondOrderSystem([[1.0]], [[0.0]], [[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(NearPole):
        eval_transfer(sys_, 1j)


def test_first_order_realization_matches():
    rng = np.random.default_rng(3)
    sys_ = random_system(rng, 4, 1, 2)
    A, B, C = to_first_order(sys_)
    s = 0.3 + 2j
    ref = C @ np.linalg.solve(s * np.eye(8) - A, B)
    assert rel(eval_transfer(sys_, s), ref) < 1e-12


def test_shapes_validated():
    with pytest.raises(DimensionMismatch):
        SecondOrderSystem(np.eye(2), np.eye(2), np.eye(3), np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionMismatch):
        SecondOrderSystem(np.eye(2), np.eye(2), np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
    sys_ = msd_benchmark(2)
    assert not sys_.M.flags.writeable


def test_json_roundtrip_real_and_complex(tmp_path):
    sys_ = msd_benchmark(3)
    save_system(sys_, tmp_path / 'a.json')
    back = load_system(tmp_path / 'a.json')
    assert back.is_real
    np.testing.assert_array_equal(back.K, sys_.K)
    csys = SecondOrderSystem([[1 + 1j]], [[0.5]], [[2.0]], [[1.0]], [[1.0]])
    save_system(csys, tmp_path / 'c.json', extra={'provenance': {'construction': 'x'}})
    raw = json.loads((tmp_path / 'c.json').read_text())
    assert raw['M'] == [[[1.0, 1.0]]] and raw['provenance']['construction'] == 'x'
    assert load_system(tmp_path / 'c.json').M[0, 0] == 1 + 1j


def test_malformed_files(tmp_path):
    p = tmp_path / 'bad.json'
    p.write_text('{"n": 1,')
    with pytest.raises(ParseError, match='line'):
        load_system(p)
    d = json.loads(json.dumps({'n': 1, 'p': 1, 'q': 1, 'M': [[1]], 'D': [[1]], 'K': [[1]],
                               'B': [[1]], 'C0': [[1]], 'C1': [['x']]}))
    p.write_text(json.dumps(d))
    with pytest.raises(ParseError, match='C1'):
        load_system(p)
    d['C1'] = [[0]]
    d['n'] = 2
    p.write_text(json.dumps(d))
    with pytest.raises(DimensionMismatch):
        load_system(p)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12))
def test_msd_dc_gain_property(n):
    # static deflection at the driven mass of a chain grounded at the far end
    # is n springs in series: x1 = n / k per unit force
    sys_ = msd_benchmark(n, 1.0, 0.1, 1.5)
    assert eval_transfer(sys_, 0.0)[0, 0].real == pytest.approx(n / 1.5, rel=1e-10)
