import os
from pathlib import Path

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

root = Path(__file__).parent


def eigen_include():
    env = os.environ.get("EIGEN3_INCLUDE_DIR")
    candidates = [env] if env else []
    candidates += ["/usr/include/eigen3", "/usr/local/include/eigen3"]
    for c in candidates:
        if c and os.path.isdir(c):
            return c
    raise RuntimeError("Eigen3 headers not found; set EIGEN3_INCLUDE_DIR")


# setuptools requires /-separated paths relative to this directory
sources = sorted(p.relative_to(root).as_posix() for p in (root / "src").glob("*.cpp"))
sources.append("python/module.cpp")

ext = Pybind11Extension(
    "adoptnet._core",
    sources,
    include_dirs=["include", "vendor", eigen_include()],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
