"""Smoke test for the graphview extension module.

Build and install first:
    pip install --no-build-isolation -e crates/py
"""

import json
import pathlib
import sys
import tempfile

import graphview

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check(cond, msg):
    if not cond:
        print(f"FAIL  {msg}")
        sys.exit(1)
    print(f"ok    {msg}")


def main():
    s = graphview.Session.running_example()
    check(s.counts() == {"Generalization": 1, "BoundedAssociation": 1, "Composite": 1},
          "running example starts with one marker per module")
    [comp] = s.markers("Composite")
    check(set(comp["roles"]) == {"CompositeRole", "ComponentRole", "GeneralizationRole", "AssociationRole"},
          "composite marker binds four roles")
    report = s.step()
    check(report["deleted"] == 2 and report["created"] == 0, "deleting the dimension removes two markers")
    check(s.step() is None, "script is exhausted")
    check(s.counts() == {"Generalization": 1}, "only the generalization survives")
    check(s.check(), "view layer matches recomputation")

    ws = ROOT / "workspaces" / "running-example"
    if ws.exists():
        loaded = graphview.Session(str(ws))
        total = loaded.run(mode="batch")
        check(total["mode"] == "batch" and loaded.counts() == {"Generalization": 1},
              "shipped workspace replays in batch mode")

    syn = graphview.Session.synthetic(seed=3, nodes=150, events=40)
    syn.run()
    check(syn.check(), "synthetic workload stays consistent")
    rete = graphview.Session.synthetic(seed=3, nodes=150, events=40, topology="rete")
    rete.run()
    top = {k: v for k, v in rete.counts().items() if k in syn.counts()}
    check(top == syn.counts(), "rete topology yields the same top-level markers")

    with tempfile.TemporaryDirectory() as d:
        path = pathlib.Path(d) / "snap.json"
        syn.save(str(path))
        check(json.loads(path.read_text()) == json.loads(syn.snapshot()), "snapshot saves as json")

    try:
        s.markers("NoSuchType")
    except ValueError:
        check(True, "unknown type raises ValueError")
    else:
        check(False, "unknown type raises ValueError")
    check(issubclass(graphview.LoopLimitError, graphview.GraphviewError), "exception hierarchy")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
