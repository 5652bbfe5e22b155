from setuptools import setup

DESCRIPTION = """\
Python modules for numerical experiments on the logarithm of random matrix
characteristic polynomials: extreme values of log|det(q - H)|, exact ratio
formulas checked against Monte Carlo, and the Gaussian comparison field.

Main goal is reproducible, table-producing verification runs.

"""

def run():
    setup(name="charpoly_tools",
        version="0.2.0",
        description="Random matrix characteristic polynomial experiments",
        url="",
        license="MIT",
        author="Evan Christianson",
        maintainer_email="",
        packages=["charpoly_tools"],
        package_data={"charpoly_tools": ["schemas/*.json"]},
        install_requires=["numpy>=1.20", "scipy>=1.7", "pandas>=1.3"],
        extras_require={"tests": ["pytest", "jsonschema"]},
        entry_points={"console_scripts": ["charpoly = charpoly_tools.cli:main"]},
        long_description=DESCRIPTION,
    )

if __name__ == "__main__":
    run()
