"""Smoke test for the `upgrade_lens` extension module.

Uses an installed module when available, otherwise the shared library left
in target/ by `cargo build -p upgrade-lens-python --features extension-module`.
"""

import importlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "cli" / "tests" / "fixtures"


def load_module():
    try:
        return importlib.import_module("upgrade_lens")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libupgrade_lens_py.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "upgrade_lens.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("upgrade_lens")
    sys.exit("upgrade_lens not built; run cargo build -p upgrade-lens-python --features extension-module")


def main():
    ul = load_module()

    g, digests, warnings = ul.extract(str(FIXTURES / "app_v1"))
    assert (g.node_count, g.edge_count) == (23, 20), repr(g)
    assert len(digests) == 12 and not warnings
    again = ul.CallGraph.loads(g.dumps())
    assert again.edges() == g.edges()

    report = g.metrics()
    assert report["cyclomatic"] == report["n_edges"] - report["n_nodes"] + 2 * report["n_components"]
    assert all(0.0 <= c <= 1.0 for c in g.closeness())

    g2, digests2, _ = ul.extract(str(FIXTURES / "app_v2"))
    to_map = lambda rows: {(p, n): d for p, n, d in rows}
    result = ul.diff(
        g,
        g2,
        to_map(digests),
        to_map(digests2),
        diagnostics=[("shop/pricing.py", "shop.pricing.to_money")],
    )
    assert len(result["changed"]) == 6 and len(result["critical"]) == 1
    assert result["table"]["variants"][0]["label"] == "Broken"

    scored = result["upgraded"].score()
    expected = json.loads((FIXTURES / "expected" / "summary.json").read_text())
    assert scored["summary"] == expected, scored["summary"]
    assert len(scored["pca"]) == g2.node_count

    welch = ul.welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (welch["statistic"], welch["p_value"]) == (0.0, 1.0)
    ks = ul.ks_two_sample([0.1, 0.2], [0.8, 0.9])
    assert ks["statistic"] == 1.0
    edges, counts = ul.closeness_histogram([0.0, 0.5, 1.0], 2)
    assert counts == [1, 2] and len(edges) == 3

    scan = ul.scan_sbom((FIXTURES / "sbom-12.json").read_text(), str(FIXTURES / "osv"))
    targets = [(p["package"]["name"], p["target_version"]) for p in scan["plans"]]
    assert targets == [
        ("requests", "2.32.0"),
        ("urllib3", "1.26.17"),
        ("jinja2", "3.1.3"),
        ("legacy-xml", None),
    ], targets

    try:
        ul.CallGraph.loads("not a graph")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed graph accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
