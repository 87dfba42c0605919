#!/usr/bin/env python3

from setuptools import find_packages, setup

requirements = [
    "numpy",
    "scipy",
    "cvxopt",
    "matplotlib",
    "pyyaml",
    "behave",
]

setup(
    name="robust-topopt",
    version="0.1.0.dev0",
    description="Compliance topology optimization against worst-case material degradation",
    packages=find_packages(exclude=["features", "features.*"]),
    scripts=["scripts/robust-topopt.py"],
    install_requires=requirements,
    python_requires=">=3.9",
    include_package_data=True,
    package_data={"": ["resources/*"]},
)
