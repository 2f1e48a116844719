"""Import the compiled extension and check a few values.

Build first with `cargo build --release -p bianchi-py`, then run
`python3 python/smoke_test.py [path/to/libbianchi.so]`.
"""

import importlib.util
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load(path=None):
    if path is None:
        for profile in ("release", "debug"):
            candidate = ROOT / "target" / profile / "libbianchi.so"
            if candidate.exists():
                path = candidate
                break
        else:
            sys.exit("libbianchi.so not found; run `cargo build --release -p bianchi-py`")
    # the interpreter wants the module file named after the module
    tmp = pathlib.Path(tempfile.mkdtemp()) / "bianchi.so"
    shutil.copy(path, tmp)
    spec = importlib.util.spec_from_file_location("bianchi", tmp)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    b = load(sys.argv[1] if len(sys.argv) > 1 else None)
    assert b.class_number(5) == 2
    assert b.class_number(163) == 1

    # one circle: constant 2
    assert b.mod_ell_dimensions(2, 3, 6) == [2] * 6
    # one edge between two A4 vertices, period 3 pattern
    print("m=19, ell=2:", b.poincare_series(19, 2))

    report = json.loads(b.compute(67, canonical=True))
    assert report["euler_value"] == "0"
    assert report["homology"]["betti"] == [1, 3, 2]
    census = {(r["dim"], r["kind"]): r["count"] for r in report["census"]}
    assert census[(0, "A4")] == 2 and census[(2, "Trivial")] == 15

    wall = json.loads(b.wall_report())
    assert wall["d1_d2_zero"] and wall["d2_d3_zero"]

    try:
        b.compute(4)
    except ValueError as e:
        print("rejected m=4:", e)
    else:
        raise AssertionError("m=4 accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
