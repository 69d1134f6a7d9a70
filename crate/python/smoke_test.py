"""Smoke test for the Python bindings.

Uses an installed ``pyinfomarket`` if there is one; otherwise builds the
extension with cargo and loads it from the target directory.
"""

import json
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        import pyinfomarket

        return pyinfomarket
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "infomarket-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = os.path.join(ROOT, "target", "release", "libpyinfomarket.so")
    if sys.platform == "darwin":
        lib = lib[: -len(".so")] + ".dylib"
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "pyinfomarket.so"))
    sys.path.insert(0, tmp)
    import pyinfomarket

    return pyinfomarket


def main():
    im = load()

    assert im.value(9, 8) == 15
    assert im.value(10, 8, quality_weight=2, price_weight=-2) == -4
    assert im.profit(12, 8) == 4 and im.profit(12, 8, won=False) == 0
    assert im.volatility([9, 10, 9, 10]) == 0.75
    dist = im.price_distribution([9, 9, 10])
    assert abs(dist[9] - 2 / 3) < 1e-12 and len(dist) == 20
    try:
        im.volatility([])
    except ValueError:
        pass
    else:
        raise AssertionError("empty series must raise")

    eps = im.AnnealSchedule(0.05, 0.99)
    for _ in range(400):
        eps.step()
    assert eps.value == 0.05

    d = im.EmpiricalDensity(20, 2)
    for x in (3, 4, 4):
        d.observe(x)
    assert d.window() == [4, 4] and d.prob(4) == 1.0 and len(d) == 2

    assert "two-level-seller" in im.preset_names()
    exp = im.Experiment.preset("one-1level-seller")
    exp.runs, exp.auctions, exp.seed = 2, 500, 3
    report = exp.run(parallel=2)
    assert [p["name"] for p in report["populations"]] == exp.populations
    total = sum(s["win_rate"]["mean"] for s in report["populations"][0]["sellers"])
    assert abs(total - 1) < 1e-9

    again = im.Experiment.from_toml(exp.to_toml())
    assert again.run(parallel=1) == report

    run = exp.simulate("p7", seed=11, auctions=300)
    records = run["transcript"]["records"]
    assert len(records) == 300
    assert run["metrics"]["auctions"] == 300
    assert all(b["price"] >= 0 for r in records for b in r["bids"])

    try:
        im.Experiment.from_toml("name = 1")
    except ValueError:
        pass
    else:
        raise AssertionError("bad config must raise")

    print(json.dumps({"mean_price_p1": report["populations"][0]["mean_price"]["mean"]}))
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
