#!/usr/bin/env python3
"""Smoke test for the difint_py extension module.

Builds nothing itself: run `cargo build --release -p difint-py` first. The
script locates the compiled cdylib under target/, copies it next to itself
under an importable name, and exercises the whole binding surface.
"""

import math
import pathlib
import shutil
import sys


def locate_extension():
    root = pathlib.Path(__file__).resolve().parents[1]
    names = ("libdifint_py.so", "difint_py.so", "libdifint_py.dylib", "difint_py.pyd")
    candidates = [
        path
        for profile in ("release", "debug")
        for name in names
        if (path := root / "target" / profile / name).exists()
    ]
    if not candidates:
        sys.exit("extension not found; run: cargo build --release -p difint-py")
    newest = max(candidates, key=lambda p: p.stat().st_mtime)
    build_dir = root / "python" / "_build"
    build_dir.mkdir(exist_ok=True)
    dest = build_dir / "difint_py.so"
    shutil.copy2(newest, dest)
    sys.path.insert(0, str(build_dir))


locate_extension()

import difint_py as d  # noqa: E402

checks = 0


def check(label, ok):
    global checks
    checks += 1
    if not ok:
        sys.exit(f"FAIL: {label}")
    print(f"  ok: {label}")


print(f"difint_py {d.__version__}")

# Fabius function.
check("Fb(0.5) == 0.5", abs(d.fabius_eval(0.5) - 0.5) < 1e-12)
check("Fb(1/4) == 5/72", abs(d.fabius_eval(0.25) - 5.0 / 72.0) < 1e-10)
check("Fb(2) == 0", abs(d.fabius_eval(2.0)) < 1e-12)
check("Fb'(1/4) == 1", abs(d.fabius_derivative(0.25, 1) - 1.0) < 1e-12)
try:
    d.fabius_eval(-1.0)
    sys.exit("FAIL: negative argument must raise")
except ValueError:
    check("Fb(-1) raises ValueError", True)

# Registry and kernel evaluation.
ids = [entry[0] for entry in d.list_kernels()]
check("registry lists five families", len(ids) == 5 and "lanczos" in ids)
check("lanczos kernel value", abs(d.kernel_eval("lanczos", 0.4) + 0.6) < 1e-15)
check("kernel order parsed", d.kernel_order("bump:3") == 3)
try:
    d.kernel_eval("nope:1", 0.0)
    sys.exit("FAIL: unknown kernel must raise")
except ValueError:
    check("unknown kernel raises ValueError", True)

# Quadrature with a Python callable and with a corpus id.
value, err, evals = d.integrate(lambda t: math.exp(1.0 / (t * t - 1.0)) if abs(t) < 1 else 0.0, -1.0, 1.0)
check("bump normalization constant", abs(value - 0.4439938161680786) < 1e-12)
check("error estimate sane", 0.0 <= err < 1e-10 and evals > 0)
value, _, _ = d.integrate("poly:0,0,3", 0.0, 1.0)
check("polynomial id integrates", abs(value - 1.0) < 1e-12)
try:
    d.integrate(lambda t: 1.0 / 0.0, -1.0, 1.0)
    sys.exit("FAIL: raising callable must propagate")
except ZeroDivisionError:
    check("python exception propagates from callable", True)

# Derivative estimates.
est = d.estimate("sin", x0=0.5, h=1e-3, kernel="lanczos")
check("sin' via lanczos", abs(est.value - math.cos(0.5)) < 1e-6 and est.converged)
est = d.estimate(lambda x: x**3, x0=0.0, h=0.5, kernel="legendre:3")
check("cubic third derivative exact", abs(est.value - 6.0) < 1e-8)
est = d.estimate("exp", x0=0.0, h=1e-3, kernel="constant")
cd = d.central_difference("exp", 0.0, 1e-3)
check("constant weight equals central difference", abs(est.value - cd) < 1e-12)
try:
    d.estimate("sin", x0=0.0, h=0.1, kernel="legendre:2", n=1)
    sys.exit("FAIL: order mismatch must raise")
except ValueError:
    check("order mismatch raises ValueError", True)

# Sweeps.
s = d.sweep("exp", x0=0.0, h_values=[0.5, 0.25, 0.125, 0.0625], kernel="bump:2", reference=1.0)
errors = [row[2] for row in s.rows()]
check("sweep errors strictly decrease", all(b < a for a, b in zip(errors, errors[1:])))
check("observed order near two", 1.5 < s.observed_order < 2.5)
check("sweep csv emitted", s.csv().startswith("h,estimate,abs_error,quad_error"))

# Validation.
v = d.validate_kernel("legendre:3")
check("legendre:3 valid", v.verdict and len(v.conditions()) == 4)
v = d.validate_kernel("constant")
check("constant invalid as kernel", not v.verdict)
v = d.validate_weight("fabius", n=5, tol=1e-8)
check("fabius weight valid at order 5", v.verdict)
v = d.validate_weight("lanczos", n=2)
check("lanczos weight invalid at order 2", not v.verdict)

print(f"smoke test passed ({checks} checks)")
