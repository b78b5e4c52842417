"""Smoke test for the pyidxray extension.

Imports an installed ``pyidxray`` if there is one; otherwise loads the shared
library built by ``cargo build -p idxray-py --release`` (or the path in
``PYIDXRAY_LIB``).
"""

import importlib.util
import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    try:
        import pyidxray  # noqa: F401

        return pyidxray
    except ImportError:
        pass
    candidates = [os.environ.get("PYIDXRAY_LIB")] + [
        str(ROOT / "target" / profile / "libpyidxray.so") for profile in ("release", "debug")
    ]
    for lib in filter(None, candidates):
        if Path(lib).exists():
            tmp = Path(tempfile.mkdtemp()) / "pyidxray.so"
            shutil.copy(lib, tmp)
            spec = importlib.util.spec_from_file_location("pyidxray", tmp)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("pyidxray not found: build it with `cargo build -p idxray-py --release`")


def main():
    px = load()
    print("pyidxray", px.version())

    scenario = {
        "domain": {"xmin": -1.5, "xmax": 1.5, "ymin": -1.5, "ymax": 1.5},
        "grid": {"nx": 32, "ny": 32},
        "sinogram": {"np": 101, "ntheta": 12, "pmax": 1.5},
        "quad": {"h": 1e-3},
        "f": [{"type": "disk", "radius": 1.0}],
    }
    n_p, n_theta, pmax, values = px.forward(json.dumps(scenario))
    assert len(values) == n_p * n_theta
    err = 0.0
    for j in range(n_theta):
        for i in range(n_p):
            p = -pmax + i * 2 * pmax / (n_p - 1)
            if abs(p) <= 0.99:
                err = max(err, abs(values[j * n_p + i] - 2 * math.sqrt(1 - p * p)))
    assert err < 5e-3, err
    print(f"chord length error {err:.2e}")

    assert px.trap_verdict(0.4, 0.8) == "TRAPPED"
    assert px.trap_verdict(0.4, 0.8, 0.0, 30.0) == "NON-TRAPPING"
    print("trapping verdicts ok")

    rt = px.abel_round_trip(1.3)
    assert rt < 1e-3, rt
    print(f"Abel round trip {rt:.2e}")

    r, f0 = px.equivalent_disk_source(0.0)
    inside = [v for rr, v in zip(r, f0) if rr < 0.9]
    assert max(abs(v - 1.0) for v in inside) < 1e-3
    print("equivalent source at a = 0 ok")

    try:
        px.forward("{")
    except ValueError as e:
        print("schema error raised:", str(e).splitlines()[0])
    else:
        raise AssertionError("malformed scenario accepted")

    with tempfile.TemporaryDirectory() as out:
        code = px.run(["verify", "--out", out])
        assert code == 0, code
        assert (Path(out) / "manifest.json").exists()
    print("smoke test passed")


if __name__ == "__main__":
    main()
