"""Compare the compiled and pure-Python contact kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on identical inputs under every importable backend. The
full replay is timed in a subprocess per backend, since the backend is chosen
once at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tripod_haptics import kernels
from tripod_haptics.geometry import Box, Sphere

REPLAY = """
import time
from tripod_haptics import kernels
from tripod_haptics.engine import replay
from tripod_haptics.presets import generate, load_preset_scene
scene, frames = load_preset_scene("tripod-press"), generate("tripod-press", 1)
t = time.perf_counter()
replay(scene, frames, with_metrics=False)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def _cases():
    rng = np.random.default_rng(0)
    sphere, box = Sphere([0, 0, 0], 0.03), Box([0, 0, 0], [0.03, 0.02, 0.025])
    walk = 0.036 * rng.normal(size=(20_000, 3))
    walk /= np.linalg.norm(walk, axis=1)[:, None] / 0.035
    proxies = rng.uniform(-0.04, 0.04, (5, 3))
    hips = proxies + rng.normal(0, 0.003, (5, 3))
    radii = np.full(5, 0.008)
    normals = rng.normal(size=(3, 3))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    arms = rng.normal(0, 0.03, (3, 3))
    return {
        "proxy_walk sphere 20k": lambda m: m.proxy_walk(sphere.kind, sphere.packed, 0.008, 0.5,
                                                        walk[0], walk),
        "proxy_batch box x1000": lambda m: [m.proxy_batch(box.kind, box.packed, radii, 0.5,
                                                          proxies, hips) for _ in range(1000)],
        "cone_wrenches x1000": lambda m: [m.cone_wrenches(normals, arms, 0.5, 8)
                                          for _ in range(1000)],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name in mods) + "     speedup")
    for label, fn in _cases().items():
        times = {name: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                 for name, m in mods.items()}
        speed = (f"{times['python'] / times['cython']:10.1f}x" if "cython" in times else "")
        print(f"{label:28s}" + "".join(f"{t:11.4f}s" for t in times.values()) + speed)
    for pure in (True, False):
        env = dict(os.environ)
        env.pop("TRIPOD_HAPTICS_PURE_PYTHON", None)
        if pure:
            env["TRIPOD_HAPTICS_PURE_PYTHON"] = "1"
        out = subprocess.run([sys.executable, "-c", REPLAY], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"replay tripod-press 10 s     {out[0]:>8s} {float(out[1]):9.3f}s")


if __name__ == "__main__":
    main()
