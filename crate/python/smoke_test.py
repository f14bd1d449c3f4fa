"""Smoke test for the deltascat extension.

Build and install first:
    maturin build -m crates/py/Cargo.toml --release -o dist && pip install dist/deltascat-*.whl
"""
import cmath

import deltascat as ds


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    # single delta c = 2 at k = 1
    v = ds.Potential([(2.0, 0.0)])
    s = v.scattering([0.5, 1.0, 2.0])
    assert close(s["t"][1], (1 - 1j) / 2, 1e-14), s["t"][1]
    for t, r in zip(s["t"], s["r1"]):
        assert close(abs(t) ** 2 + abs(r) ** 2, 1.0, 1e-13)
    t, _ = ds.single_delta(1.0, 1.0)
    assert close(t, s["t"][1], 1e-14)

    m = v.transfer_matrix(1.0 + 0j)
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    assert close(det, 1.0, 1e-14)

    # attractive delta: one bound state, kappa = 1
    w = ds.Potential.from_toml("[[delta]]\nc = -2.0\ny = 0.0\n")
    (kappa, energy), = w.bound_states()
    assert close(kappa, 1.0, 1e-12) and close(energy, -1.0, 1e-12)
    assert ds.Potential().bound_states() == []

    try:
        ds.Potential.from_toml("[[delta]]\nc = 1.0\nwhere = 0.0\n")
    except ValueError as e:
        assert "where" in str(e)
    else:
        raise AssertionError("bad config accepted")

    # wave operators on a packet in the continuum
    sp = ds.Spectral(w, x_max=16.0)
    assert close(sp.kappas[0], 1.0, 1e-12)
    x = sp.x
    g = [cmath.exp(-((xi - 3.0) ** 2) / 8 + 3j * xi) for xi in x]
    iso, _ = sp.identity_residuals(g)
    # W g is band limited for the distorted transform
    f = sp.wplus(g)
    _, pc = sp.identity_residuals(f)
    assert iso < 1e-6 and pc < 1e-6, (iso, pc)
    u = sp.evolve(f, 0.0)
    assert max(abs(a - b) for a, b in zip(u, sp.project(f))) < 1e-12

    # two-level beat of the linear double well
    r = ds.double_well(2.0, 1.0, 0.0, 0.1, 40.0)
    assert abs(r["measured_period"] - r["beat_period"]) < 0.02 * r["beat_period"]
    assert max(abs(mm - r["mass"][0]) for mm in r["mass"]) < 1e-10

    ok, line = ds.run_criterion(1)
    assert ok, line
    print(line)
    print("smoke test passed")


if __name__ == "__main__":
    main()
