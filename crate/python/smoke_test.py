"""Smoke test for the `lebrun` Python module."""

import math

import pytest

import lebrun


def test_coords_roundtrip():
    x1, x2 = lebrun.forward_map(1.0, 0.3, 0.2)
    u, v = lebrun.inverse_map(1.0, x1, x2)
    assert u == pytest.approx(0.3, abs=1e-13)
    assert v == pytest.approx(0.2, abs=1e-13)


def test_flat_metric():
    g = lebrun.metric(0.0, 1.0, 2.0)
    assert g["det"] == 1.0
    assert g["g"][0][0] == 1 and g["g"][0][1] == 0


def test_curvature_at_origin():
    c = lebrun.curvature(1.0, 0.0, 0.0)
    assert c["normR2"] == pytest.approx(96.0, rel=1e-12)
    assert c["lapR2"] == pytest.approx(-2304.0, rel=1e-8)
    assert max(abs(z) for row in c["ricci"] for z in row) < 1e-10


def test_flat_epsilon():
    e = lebrun.epsilon(0.0, 2.0)
    assert math.pi**2 * e["epsilon"] == pytest.approx(4.0, rel=1e-12)


def test_balance():
    (h, _), (ratio, _) = lebrun.balance(0.5, 4.0)
    assert h > 0 and 0 < ratio < 1
    (h0, _), (r0, _) = lebrun.balance(0.0, 4.0)
    assert h0 == 0 and r0 == 1


def test_series_exact():
    terms = {(i, j): c for i, j, c, _ in lebrun.series("1/10", "3", 2)}
    assert terms[(1, 1)] == "51/5"


def test_fit():
    r = lebrun.englis_fit(0.1, [20, 40, 80, 160, 320])
    assert r["c2_fit"] == pytest.approx(0.04, rel=1e-5)


def test_verify_and_errors():
    (r,) = lebrun.verify([1])
    assert r["status"] == "pass"
    with pytest.raises(ValueError):
        lebrun.metric(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        lebrun.verify([15])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
