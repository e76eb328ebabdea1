#!/usr/bin/env python3
import os
import re

import setuptools

# read the version without importing the package (and numpy with it)
with open(os.path.join("VSFLOW", "config.py"), encoding="utf-8") as f:
    VERSION = re.search(r"^VERSION = \"(.+)\"$", f.read(), re.M).group(1)

setuptools.setup(
    description="VSFLOW - steady-state variably saturated groundwater flow solver",
    entry_points={
        "console_scripts": [
            "vsflow = VSFLOW.vsflow:main",
            "vsflow_js = VSFLOW.vsflow_js:main",
        ]
    },
    install_requires=["numpy >= 1.20", "scipy >= 1.7"],
    extras_require={"test": ["meshio >= 5.0"]},
    include_package_data=True,
    package_data={"VSFLOW": ["data/*.conf"]},
    license="LGPL",
    name="VSFLOW",
    packages=setuptools.find_packages(".", exclude=["tests", "tests.*"]),
    python_requires=">=3.8",
    version=str(VERSION),
    zip_safe=False,
)
