#!/usr/bin/env python3
"""Smoke test for the brownian_lab_py extension module.

Builds nothing itself: expects `cargo build -p brownian-lab-py` (or
--release) to have produced the cdylib, copies it under the import name,
and exercises every exported function once.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / f"libbrownian_lab_py{ext}"
        for profile in ("release", "debug")
        for ext in (".so", ".dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p brownian-lab-py")
    stage = Path(tempfile.mkdtemp(prefix="brownian_lab_py_"))
    shutil.copy2(built, stage / "brownian_lab_py.so")
    sys.path.insert(0, str(stage))
    import brownian_lab_py

    return brownian_lab_py


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    lab = load_module()

    # pinned constants
    approx(lab.rp_constant(2.0, 2.0, 1.0), (math.sqrt(2.0) - 1.0) ** -2)
    re, im = lab.charfun([[1.0]], [1.0])
    approx(re, math.exp(-0.5), 1e-15)
    approx(im, 0.0, 1e-15)
    re, _ = lab.charfun([[1.0, 0.5], [0.5, 2.0]], [1.0, 1.0])
    approx(re, math.exp(-2.0), 1e-15)

    # exact kernels
    assert lab.min_kernel([0.5, 1.0, 2.0]) == [
        [0.5, 0.5, 0.5],
        [0.5, 1.0, 1.0],
        [0.5, 1.0, 2.0],
    ]
    assert lab.gram_identity([0.25, 0.75, 1.5], [1.0, -2.0, 0.5])

    # chaining constants: finite below the critical exponent, error at it
    value, terms = lab.chentsov_constant(2.0, 2.0, 1.0, 1.0, 0.3)
    assert value > 0.0 and terms > 10
    try:
        lab.chentsov_constant(2.0, 2.0, 1.0, 1.0, 0.5)
    except ValueError as e:
        assert "diverge" in str(e)
    else:
        sys.exit("expected divergence at beta = 0.5")
    assert lab.finite_set_bound(2.0, 2.0, 1.0, 1.0, 1.0, 0.5) > 0.0

    # sampling, determinism, refinement
    ens = lab.PathEnsemble.sample(3, 50, seed=7)
    assert len(ens) == 50
    assert ens.times()[0] == 0.0 and ens.times()[-1] == 1.0
    assert all(p[0] == 0.0 for p in ens.paths())
    again = lab.PathEnsemble.sample(3, 50, seed=7)
    assert ens.paths() == again.paths()

    fine = ens.refine(6, seed=7)
    assert len(fine.times()) == 2**6 + 1
    for k, x in enumerate(ens.paths()[0]):
        assert fine.paths()[0][k * 8] == x

    # invariance transforms keep the shape honest
    scaled = ens.scaled(4.0)
    approx(scaled.times()[-1], 0.25)
    shifted = ens.shifted(0.5)
    assert shifted.times()[0] == 0.0
    grid = lab.PathEnsemble.sample_at([0.25, 0.5, 1.0, 2.0, 4.0], 20, seed=1)
    inverted = grid.inverted()
    assert inverted.times()[0] == 0.0

    # regularity diagnostics
    big = lab.PathEnsemble.sample(6, 400, seed=0)
    m4 = big.kolmogorov_condition_estimate(4.0, 2.0)
    assert 1.5 < m4 < 6.0, m4
    ratios = big.holder_sup_ratios(0.4)
    assert len(ratios) == 400 and all(r > 0.0 for r in ratios)
    medians = lab.holder_profile([4, 6], 40, 0.55, seed=3)
    assert len(medians) == 2
    assert lab.holder_sup_ratio([0.0, 1.0], [0.0, 2.0], 1.0) == 2.0

    # empirical characteristic function agrees with the exact one
    samples = [[x] for path in big.paths() for x in path[-1:]]
    re, im = lab.ecf(samples, [1.0])
    exact_re, _ = lab.charfun([[1.0]], [1.0])
    assert abs(complex(re, im) - exact_re) < 10.0 / math.sqrt(len(samples))

    # covering numbers on six points spaced 0.5 apart
    line = [[0.5 * i] for i in range(6)]
    assert lab.minimal_cover_number(line, 0.5) == 2
    assert lab.minimal_cover_number(line, 0.25) == 6
    assert lab.packing_number(line, 0.5) >= 2

    # a full verification suite, end to end
    report = json.loads(lab.run_suite("cov", seed=1, count=3000, level=2, horizon=2.0))
    assert report["suite"] == "cov" and report["pass"] is True
    assert report["config"]["count"] == 3000

    # measure extension on the bundled demo and a custom content
    assert lab.verify_content() == (True, 16, 16)
    custom = "universe 2\nset 00 0\nset 01 1/3\nset 10 2/3\nset 11 1\n"
    ok, sigma, cara = lab.verify_content(custom)
    assert ok and sigma == 4 and cara == 4

    print("smoke test passed")


if __name__ == "__main__":
    main()
