"""Dense oracle run that pins regression values for the acceptance suite.

    CCGEOM_PURE=1 python scripts/dense_baselines.py [--out tests/baselines.json]

Each value is recomputed on the same seeded inputs as the acceptance
suite, but through an independent route: the numpy kernel (forced by
CCGEOM_PURE=1) with a 1024-point crossing grid (256 for the all-pairs radius
matrix) in place of the default max(64, 32n), and denser samples where the quantity is a sampled extremum.
"""
import argparse
import json
import os
import time

from ccgeom import kernels
from ccgeom.embedding import ScanConfig, injectivity_scan
from ccgeom.modelspace import ModelKind, ModelParams, SolverOpts
from ccgeom.strainer import strained_ball_distortion
from ccgeom.volcomp import radius_estimate

DENSE = SolverOpts(tol=1e-12, n_grid=1024)

# inputs shared with tests/test_acceptance.py
INJECTIVITY = dict(params=(2, 1, 1.0), pairs=10_000, nu=0.1, seed=0)
BGP = dict(params=(2, 0, 1.0), samples=1500, delta=0.05, strain_r=0.3, chart_radius=0.05,
           chart_points=200, seed=0)
RADIUS = dict(params=(2, 0, 1.0), samples=1000, seed=0, dense_samples=1500)
RADIUS_OPTS = SolverOpts(tol=1e-12, n_grid=256)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "baselines.json"))
    args = ap.parse_args(argv)
    out = {"backend": kernels.BACKEND, "n_grid": DENSE.n_grid}

    t0 = time.perf_counter()
    p = ModelParams(*INJECTIVITY["params"])
    cfg = ScanConfig(nu=INJECTIVITY["nu"], seed=INJECTIVITY["seed"])
    rep = injectivity_scan(p, cfg, INJECTIVITY["pairs"], opts=DENSE, smoothed=False)
    out["injectivity"] = {**INJECTIVITY, "min_separation": rep.results["min_separation"],
                          "pairs_tested": rep.results["pairs_tested"]}
    print("injectivity", time.perf_counter() - t0, flush=True)

    p = ModelParams(*BGP["params"])
    _, spec, dist = strained_ball_distortion(ModelKind.DOUBLE_DISK, p, BGP["samples"], BGP["delta"],
                                             BGP["strain_r"], BGP["chart_radius"], BGP["chart_points"],
                                             BGP["seed"], DENSE)
    out["bgp"] = {**BGP, "distortion": dist, "pairs": [list(q) for q in spec.pairs] if spec else None}
    print("bgp", time.perf_counter() - t0, flush=True)

    p = ModelParams(*RADIUS["params"])
    est = radius_estimate(ModelKind.DOUBLE_DISK, p, RADIUS["dense_samples"], RADIUS["seed"], opts=RADIUS_OPTS)
    out["doubledisk_radius"] = {**RADIUS, "value": est.value, "resolution": est.resolution}
    out["wall_time"] = time.perf_counter() - t0

    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
