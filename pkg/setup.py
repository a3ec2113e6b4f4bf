import pathlib
from setuptools import setup

try:
    import re2 as re
except ImportError:
    import re

packages = ["bdrsplit"]

# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text()

# Pull the version from __init__.py so we don't need to maintain it in multiple places
init_txt = (HERE / packages[0] / "__init__.py").read_text("utf-8")
try:
    version = re.findall(r"^__version__ = ['\"]([^'\"]+)['\"]\r?$", init_txt, re.M)[0]
except IndexError:
    raise RuntimeError('Unable to determine version.')


setup(
    name="bdrsplit",
    version=version,
    description="Backward-Douglas-Rachford splitting for difference-of-convex sparse recovery",
    long_description=README,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=packages,
    include_package_data=False,
    python_requires=">=3.8",
    install_requires=list(val.strip() for val in open("requirements.txt")),
    extras_require={"test": list(val.strip() for val in open("requirements.test.txt"))},
    entry_points={"console_scripts": ["bench=bdrsplit.cli:main"]},
)
