from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

core = Pybind11Extension(
    "causal_lab._core",
    sources=[
        "python/src/bindings.cpp",
        "src/parallel.cpp",
        "src/metric_models.cpp",
        "src/causal_graph.cpp",
        "src/distance_engine.cpp",
        "src/achronal_ops.cpp",
        "src/time_functions.cpp",
        "src/io.cpp",
        "src/experiment.cpp",
    ],
    include_dirs=["include", "vendor"],
    cxx_std=20,
    extra_compile_args=["-pthread"],
    extra_link_args=["-pthread"],
)

setup(ext_modules=[core], cmdclass={"build_ext": build_ext})
