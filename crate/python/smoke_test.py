#!/usr/bin/env python3
"""Smoke test for the nonvanishing_py extension module.

Builds nothing itself: expects `cargo build -p nonvanishing-py` (or a
release build) to have produced libnonvanishing_py.so already. Copies the
cdylib into a temp dir under the importable name and checks a handful of
known values end to end.

Run from anywhere:  python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_cdylib():
    candidates = [
        REPO / "target" / "release" / "libnonvanishing_py.so",
        REPO / "target" / "debug" / "libnonvanishing_py.so",
    ]
    for c in candidates:
        if c.is_file():
            return c
    sys.exit(
        "libnonvanishing_py.so not found; run `cargo build -p nonvanishing-py` first"
    )


def close(a, b, rel=1e-8, abs_tol=0.0):
    return abs(a - b) <= rel * max(abs(a), abs(b)) + abs_tol


def expect(cond, label):
    if not cond:
        sys.exit(f"FAIL: {label}")
    print(f"ok: {label}")


def expect_raises(fn, label, fragment=None):
    try:
        fn()
    except ValueError as e:
        if fragment is not None and fragment not in str(e):
            sys.exit(f"FAIL: {label}: message {str(e)!r} lacks {fragment!r}")
        print(f"ok: {label}")
        return
    sys.exit(f"FAIL: {label}: no ValueError raised")


def main():
    so = locate_cdylib()
    tmp = tempfile.mkdtemp(prefix="nonvanishing_py_")
    shutil.copy2(so, Path(tmp) / "nonvanishing_py.so")
    sys.path.insert(0, tmp)
    import nonvanishing_py as nv

    # scalar arithmetic
    expect(nv.is_prime(101) and not nv.is_prime(100), "primality")
    expect(nv.mobius(30) == -1 and nv.mobius(12) == 0, "mobius")
    expect_raises(lambda: nv.mobius(0), "mobius rejects 0")

    # mollifier coefficients: mu(m) log(L/m) / log L at L = 4
    c = nv.mollifier_coeffs(4)
    expect(
        len(c) == 4
        and c[0] == 0.0
        and c[1] == 1.0
        and close(c[2], -0.5)
        and close(c[3], -math.log(4 / 3) / math.log(4)),
        "mollifier coefficients",
    )

    # smoothing weights against frozen 50-digit reference values
    expect(close(nv.weight_w(1.0), 0.004228940702617819406108), "weight_w(1)")
    expect(close(nv.weight_v(0.5), 0.002856646828895022287558), "weight_v(1/2)")
    expect(nv.weight_v(2.0) < nv.weight_v(1.0) < nv.weight_v(0.5), "weight_v decay")

    # Kloosterman sum S(1,1;5) = (3 - sqrt 5)/2
    expect(close(nv.kloosterman(5, 1, 1), (3 - math.sqrt(5)) / 2), "kloosterman S(1,1;5)")

    # prime context
    ctx = nv.PrimeContext(101)
    expect(ctx.p == 101 and ctx.generator == 2, "context basics")
    expect(ctx.even_primitive_count == 49, "family size (p-3)/2")
    expect(ctx.inv_mod(2) == 51 and ctx.discrete_log(2) == 1, "inverse and index")
    expect(close(abs(ctx.gauss_sum(2)), math.sqrt(101)), "gauss sum modulus sqrt p")
    expect_raises(lambda: nv.PrimeContext(100), "composite modulus rejected", "not prime")

    # central values: conjugate pair, and rejection of odd characters
    a = ctx.central_value(4)
    b = ctx.central_value(101 - 1 - 4)
    expect(close(a.real, b.real, 1e-10, 1e-12) and close(a.imag, -b.imag, 1e-10, 1e-12),
           "central values conjugate in pairs")
    expect_raises(lambda: ctx.central_value(3), "odd character rejected")

    # moment report: dual summation routes agree, average matches c1 + c2
    m = nv.moments(101)
    n = nv.moments(101, path="naive")
    expect(m["family_size"] == 49 and m["nonvanishing_count"] == 49, "moment family")
    expect(close(m["s1_re"], n["s1_re"], 1e-9) and close(m["s2"], n["s2"], 1e-9),
           "dft and naive paths agree")
    expect(abs(m["s1_im"]) < 1e-12, "first moment real")
    expect(abs(m["s1_re"] - 1.0) < 0.3, "first moment near c1 + c2")
    expect(m["cs_ratio"] <= 1 + 1e-6, "cross term within Cauchy-Schwarz")

    # exact optimizer
    o = nv.optimize()
    expect(o["theta"] == "1/4" and o["alpha"] == "1/8", "optimizer point")
    expect(o["proportion"] == "5/13", "optimal proportion 5/13")
    expect(abs(o["grid_combined"] - 0.625) <= 3.1e-4, "grid cross-check")
    expect(nv.optimize(force_alpha_zero=True)["proportion"] == "3/8",
           "balanced-only proportion 3/8")
    expect_raises(lambda: nv.optimize("1/8"), "margin gate", "feasible region")
    expect_raises(lambda: nv.optimize("x/y"), "rational parsing", "not a rational")

    expect(nv.optimal_weights("1/4", "1/8") == ("3/5", "2/5"), "optimal split")
    expect(nv.proportion("1/4", "1/8", "3/5", "2/5") == "5/13", "proportion formula")
    expect(not nv.feasible("1/4", "1/8")["feasible"], "optimum sits on the boundary")
    f = nv.feasible("1/5", "1/10")
    expect(f["feasible"] and f["violated"] == [], "interior point feasible")

    print("smoke test passed")


if __name__ == "__main__":
    main()
