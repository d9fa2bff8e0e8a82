from setuptools import setup, find_namespace_packages

setup(
    name="layeredkc",
    version="0.1.0",
    package_dir={"": "src"},
    packages=find_namespace_packages(where="src"),
    python_requires=">=3.8",
    install_requires=[
        "bitarray",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "layeredkc=layeredkc.cli:cli",
        ],
    },
    description="Layered Kraft-Chaitin code allocation and online stream coding with forbidden prefixes",
)
