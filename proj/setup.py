import os
import subprocess
import sys

import pybind11
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = os.path.abspath(os.path.dirname(self.get_ext_fullpath(ext.name)))
        build_dir = os.path.join(self.build_temp, "cmake")
        os.makedirs(build_dir, exist_ok=True)
        source_dir = os.path.abspath(os.path.dirname(__file__))
        subprocess.run(
            [
                "cmake",
                "-S", source_dir,
                "-B", build_dir,
                "-DSKBUILD=ON",
                "-DCMAKE_BUILD_TYPE=Release",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}",
                f"-DPython3_EXECUTABLE={sys.executable}",
                f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", build_dir, "--target", "_core", "-j"],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("mopr._core")],
    cmdclass={"build_ext": CMakeBuild},
)
