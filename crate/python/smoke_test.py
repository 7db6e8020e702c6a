"""Smoke test for the `delayfront` extension module.

Build first with `cargo build -p delayfront-py --release`; the script loads
target/release/libdelayfront.so (or the module already on sys.path).
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys


def load():
    try:
        import delayfront  # noqa: F401
        return delayfront
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for name in ("libdelayfront.so", "libdelayfront.dylib", "delayfront.dll"):
        path = root / "target" / "release" / name
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("delayfront", str(path))
            spec = importlib.util.spec_from_file_location("delayfront", path, loader=loader)
            mod = importlib.util.module_from_spec(spec)
            loader.exec_module(mod)
            return mod
    sys.exit("delayfront extension not found; run cargo build -p delayfront-py --release")


def main():
    df = load()

    local = df.Kernel.dirac()
    birth = df.BirthFunction.nicholson(2.0, 1.0)
    assert abs(birth(birth.kappa) - birth.kappa) < 1e-12
    speeds = df.critical_speeds(local, birth.gprime0, 1.0)
    assert abs(speeds.c_plus - math.sqrt(math.log(2.0))) < 1e-10, speeds
    assert abs(speeds.c_plus + speeds.c_minus) < 1e-10
    print("speeds", speeds)

    assert df.halanay_root(-1.0, 1.0, 1.0) == 0.0
    assert df.halanay_root(-1.0, 0.5, 1.0) < 0.0

    gauss = df.Kernel.gaussian(0.0, 1.0, 0.8)
    params = df.CharParams(0.2, -1.0, 1.0)
    tangency = df.tangency_solve(params, gauss)
    assert abs(tangency.residual_value) < 1e-8, tangency
    print("tangency", tangency)

    for l, lo, hi in df.implicit_l(params, gauss, [-3.0, 0.0, 3.0]):
        assert lo - 1e-9 <= l <= hi + 1e-9

    n = 256
    xs = [-50.0 + 100.0 * i / n for i in range(n)]
    bump = [1.0 if abs(x) < 5.0 else 0.0 for x in xs]
    _, rows = df.simulate_kpp(df.Kernel.gaussian(), birth, 1.0, 100.0, bump, [0.0, 2.0, 4.0], n_h=16)
    fronts = [r[3] for r in rows]
    assert all(f is not None for f in fronts) and fronts[0] < fronts[-1], fronts
    print("front positions", fronts)

    _, fields = df.solve_linear(params, gauss, 80.0, [math.exp(-x * x / 8) for x in xs], [1.0])
    assert all(math.isfinite(v) for v in fields[0][1])

    report = df.run_experiment("fisher")
    assert set(report) >= {"name", "params", "metrics", "verdict"}, report.keys()
    print("fisher verdict", report["verdict"])

    try:
        df.Kernel.gaussian(0.0, -1.0)
    except df.DelayfrontError as e:
        print("rejected:", e)
    else:
        raise AssertionError("negative stddev accepted")

    checks = df.verify()
    failed = [c for c in checks if not c[1]]
    assert not failed, failed
    print(f"verify: {len(checks)} checks passed")
    print(json.dumps(df.speeds_report(local, 2.0, 1.0))[:80])
    print("smoke test ok")


if __name__ == "__main__":
    main()
