"""Compiled vs pure-Python kernels on workloads the library actually runs.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Prints a table of median wall times and the speedup.  Both backends are
checked for identical output before timing.
"""

import argparse
import math
import statistics
import time

import numpy as np

from sparsefoot import _pykernels
from sparsefoot.core import BasePose
from sparsefoot.perception import Intrinsics, camera_pose_from_base, pixel_rays
from sparsefoot.terrain import TerrainSpec, generate

try:
    from sparsefoot import _kernels
except ImportError:
    _kernels = None


def median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def workloads():
    hf = generate(TerrainSpec("stones", 10, "high", seed=0))
    intr = Intrinsics.from_fov()
    cam = camera_pose_from_base(BasePose(3.0, 2.0, 0.35, 0.3))
    dirs = pixel_rays(cam, intr)
    edt_arg = hf.steppable
    ray_args = (hf.heights, hf.origin_xy[0], hf.origin_xy[1], hf.resolution, hf.floor_z,
                np.asarray(cam.position), dirs, intr.far)
    return [
        ("edt_sq 160x80 patch", lambda k: k.edt_sq(edt_arg)),
        ("raycast 60x60 depth image", lambda k: k.raycast(*ray_args)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'kernel':<28} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, call in workloads():
        a, b = call(_pykernels), call(_kernels)
        assert np.array_equal(a, b), f"{name}: backends disagree"
        tp = median_time(lambda: call(_pykernels), args.repeat)
        tc = median_time(lambda: call(_kernels), max(args.repeat, 20))
        print(f"{name:<28} {tp * 1e3:>10.2f} {tc * 1e3:>12.3f} {tp / tc if tc else math.inf:>7.0f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
