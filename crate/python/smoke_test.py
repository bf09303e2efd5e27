"""Smoke test for the Python bindings.

    pip install --no-build-isolation crates/py
    python python/smoke_test.py
"""

import math

import stokes_py as sp


def main():
    x = sp.Interval(0.1)
    y = x + x + x
    assert y.contains(0.30000000000000004) and y.lo <= 0.3 <= y.hi

    rep = sp.certify(6.24, 0.5, 38.0, 1.9)
    assert rep["verdict"]["status"] == "Certified", rep["verdict"]
    assert rep["L"]["hi"] <= 0.93
    bad = sp.certify(6.0, 0.5, 40.0, 2.0)
    assert bad["verdict"]["status"] == "Failed"

    a = sp.constant_a()
    assert a.hi - a.lo <= 1e-5 and abs(a.mid() - 0.177744) < 1e-6

    u = -3.0 - 8.0j
    b = u ** (-1.0 / 3.0)
    state = [u, 1e-3 + 2e-4j, 3e-3 - 1e-3j, -2e-3 + 5e-4j, 1.0 + 0j, b]
    f = sp.extended_field(state)
    g = sp.extended_field(sp.symmetry(state))
    for fs, gs in zip(sp.symmetry(f), g):
        assert abs(fs + gs) < 1e-12

    c = sp.crossing()
    assert -0.00075 <= c["re_y"] <= -0.0005, c
    assert math.isfinite(c["theta_rho"])
    print("smoke test ok:", c)


if __name__ == "__main__":
    main()
