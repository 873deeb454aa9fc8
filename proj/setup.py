"""Builds the hmoe._core extension directly from the C++ sources."""

import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "hmoe._core",
    sorted(glob.glob("src/*.cpp")) + ["bindings/py_module.cpp"],
    include_dirs=["include", "vendor", "/usr/include/eigen3"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
