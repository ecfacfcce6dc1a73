"""Builds the extension, imports it and runs a few end-to-end checks.

    python3 crates/py/python/smoke_test.py [--no-build]
"""

import importlib
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[3]
S1_PLUS = "u; v^2; v*(u^2+v^2)+s*v"
HYPERBOLIC = "u; v^2; u^2+v^3+u^2*v+s*v"


def load_module():
    if "--no-build" not in sys.argv:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "s1geom-py", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
    lib = ROOT / "target" / "release" / "libs1geom_py.so"
    dest = Path(tempfile.mkdtemp()) / "s1geom.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))
    return importlib.import_module("s1geom")


def main():
    s1 = load_module()

    u = s1.Jet.var(2, 6, 0)
    one = s1.Jet.constant(2, 6, 1.0)
    r = (one + u).sqrt()
    assert abs((r * r - one - u).coeffs()[-1]) < 1e-14
    assert abs(r.coeff([2, 0]) + 0.125) < 1e-15

    germ = s1.MapGerm(S1_PLUS)
    assert germ.eval(1.0, 2.0, 0.5) == (1.0, 4.0, 2.0 * (1.0 + 4.0) + 0.5 * 2.0)

    nf = s1.reduce(germ, check_invariance=3, seed=5)
    assert nf["classification"]["kind"] == "S1Plus"
    assert nf["invariance"]["max_deviation"] < 1e-8

    point = s1.analyze("u; u*v; v^2")
    assert point["status"] == "umbrella"
    assert abs(point["umbrella"]["a02"] - 2.0) < 1e-12

    tr = s1.trace(HYPERBOLIC)
    lim = tr["asymptotics"]
    for name in ("a20", "a11", "a02"):
        assert abs(lim[name]["limit"] - 0.5) < 1e-5, (name, lim[name])
    assert lim["all_hyperbola"]

    focal = s1.focal("u; -u^2+v^2; u^2+v^3+v*s+u^2*v", s=-1.0)
    assert focal["kind"] == "ellipse"

    probe = s1.gauss_probe("u; v^2+u*s; u^2+v^3+u^2*v+v*s")
    assert probe["agreement"] == 1.0

    traj = s1.trajectory("u; v^2+u^2; v^3+u^2*v+s*v")
    assert math.isclose(traj["kappa0"], 2.0, abs_tol=1e-9)

    try:
        s1.MapGerm("u; v")
    except ValueError:
        pass
    else:
        raise AssertionError("two components accepted")
    try:
        s1.reduce("u; v^2+v*s; v*(u^2+v^2)+s*v")
    except s1.S1GeomError as e:
        assert e.args[0] == "precondition"
    else:
        raise AssertionError("off-axis fold curve accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
