"""Smoke test for the pysmotuned extension.

Build first with `cargo build -p smotuned-py --release`; the script finds
the shared library under target/ when the module is not installed.
"""

import importlib
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_extension():
    try:
        return importlib.import_module("pysmotuned")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libpysmotuned.so")
        if os.path.exists(lib):
            where = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(where, "pysmotuned.abi3.so"))
            sys.path.insert(0, where)
            return importlib.import_module("pysmotuned")
    sys.exit("pysmotuned not built: run `cargo build -p smotuned-py --release`")


def main():
    ps = import_extension()

    ds = ps.Dataset.synthetic(100, 4, minority=0.1, separation=1.5, seed=3)
    assert len(ds) == 100 and ds.n_features == 4
    assert ds.class_counts() == (10, 90)

    out = ps.smote(ds, k=5, m=50, r=2.0, seed=1)
    labels = out.labels()
    assert (sum(labels), len(labels) - sum(labels)) == (25, 25), out

    grown = ps.mahakil(ds, seed=1)
    assert sum(grown.labels()) == 90

    assert ps.auc([0.9, 0.8, 0.1, 0.2], [True, True, False, False]) == 1.0
    assert ps.recall([True, False], [True, True]) == 0.5
    assert ps.a12([1, 2], [1, 3]) == 0.375

    groups = ps.scott_knott([("low", [0.1] * 10), ("high", [0.9] * 10)])
    assert groups[0] == (1, ["high"]), groups

    scores = ps.fit_score("nb", out, ds, seed=0)
    assert len(scores) == len(ds) and all(0.0 <= s <= 1.0 for s in scores)

    big = ps.Dataset.synthetic(300, 4, minority=0.15, seed=5)
    k, m, r, score = ps.tune(big, learner="nb", measure="recall", seed=2)
    assert 1 <= k <= 20 and m in (50, 100, 200, 400) and 0.1 <= r <= 5
    assert (k, m, r, score) == ps.tune(big, learner="nb", measure="recall", seed=2)

    csv = ps.run("learners = nb\nprefilters = none,smote\nrepeats = 1\nseed = 4", [ds])
    lines = csv.strip().splitlines()
    assert lines[0].startswith("dataset,learner,prefilter,measure,repeat,bin,value")
    assert len(lines) == 1 + 5 * 2 * 4, len(lines)

    try:
        ps.run("nonsense_key = 1")
    except ValueError as e:
        assert "nonsense_key" in str(e)
    else:
        raise AssertionError("unknown config key accepted")

    print("pysmotuned smoke test: ok (%s, tuned k=%d m=%d r=%.2f)" % (ds, k, m, r))


if __name__ == "__main__":
    main()
