from setuptools import find_packages, setup

setup(
    name="windcast",
    version="0.1.0",
    description="Decomposition-ensemble short-term wind speed forecasting",
    packages=find_packages(include=["Windcast", "Windcast.*"]),
    py_modules=["main"],
    install_requires=["pyyaml", "numpy", "scipy", "pandas", "scikit-learn", "icecream"],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["windcast=main:main"]},
)
