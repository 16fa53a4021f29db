import json

import tetraqg_py as tq

assert tq.threed_element(0, 1, 0, 1, 0, 1, qroot="1/2") == "15/16"
assert tq.threed_element(1, 0, 0, 0, 1, 0) == tq.threed_element(1, 0, 0, 0, 1, 0, name="R")

dump = tq.rmatrix_trace("11", 1, 1)
assert dump.startswith("# signature 11")

report = json.loads(tq.verify("examples", name="A10"))
assert report["status"] == "pass"
assert all(c["residual"] == "0" for c in report["cases"])

try:
    tq.verify("nonsense")
except ValueError:
    pass
else:
    raise AssertionError("unknown suite accepted")

print("smoke test ok")
