"""Smoke test for the heun_spectrum extension module.

Run after `pip install --no-build-isolation -e crates/python`:

    python crates/python/python/smoke_test.py
"""

import json
import math

import heun_spectrum as hs


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    fam = hs.truncation_solutions(1, l=0)
    assert fam.w == 4.0
    assert len(fam.roots) == 2
    assert close(fam.roots[1], math.sqrt(2), 1e-15)
    assert fam.roots_exact[1].startswith("1.414213562373095048801688724209698078")
    assert fam.nodes == [0, 1]

    r = hs.ritz_spectrum(0, "-sqrt2", 2)
    assert close(r.eigenvalues[0], 4.0, 1e-30)
    assert r.eigenvalues_exact[1].startswith("10.4999760")

    c = hs.converged_spectrum(1, "sqrt6", count=3)
    for got, want in zip(c.eigenvalues, [1.600357154, 6.0, 10.21072810]):
        assert close(got, want, 1e-8), (got, want)

    study = hs.convergence_study(0, 1.0, [4, 6, 8], count=3)
    assert [s.size for s in study] == [4, 6, 8]

    levels = hs.fd_spectrum(0, 0.0, count=2, npoints=4000)
    assert close(levels[0].value, 2.0, 1e-6) and close(levels[1].value, 6.0, 1e-6)

    hf = hs.hellmann_feynman_check(0, 0.0, level=0)
    assert close(hf.rhs, -math.sqrt(math.pi), 1e-10)
    assert hf.abs_diff < 1e-5

    curves = hs.spectrum_sweep(0, -1.5, 1.5, step=0.1, levels=3, basis_n=12)
    assert close(curves[0].interpolate(0.0), 2.0, 1e-12)
    onset = hs.negative_onset(curves)
    assert onset is not None and 0.8 <= onset[0] < onset[1] <= 1.0

    overlay = hs.truncation_overlay(0, 1, curves)
    assert [p.level for p in overlay.points] == [0, 1]
    assert overlay.isolated

    table = hs.reproduce_table(1)
    assert table.passed and table.mismatches == 0

    assert close(hs.effective_potential(0, 1.0, 1.0), 0.0, 1e-15)
    assert close(hs.scale(1, 1, 0.5, math.sqrt(2)), math.sqrt(2), 1e-15)
    assert hs.unscale_energy(4, 1, 2, 0, 0, k=2) == 6.0

    try:
        hs.ritz_spectrum(0, 1.0, 25, digits=20)
    except hs.PrecisionError:
        pass
    else:
        raise AssertionError("expected PrecisionError")

    try:
        hs.truncation_solutions(0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    code, out = hs.run_cli(["truncate", "--n", "2", "--json"])
    assert code == 0
    record = json.loads(out)
    assert record["command"] == "truncate" and record["results"]["root_count"] == 3
    code, _ = hs.run_cli(["truncate", "--n", "0"])
    assert code == 2

    print("smoke test passed")


if __name__ == "__main__":
    main()
