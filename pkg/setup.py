from setuptools import setup

setup(
    name="n2-cuspidal",
    version="0.1.0",
    description="Exact checks for the N=2 superconformal algebras and their cuspidal modules",
    py_modules=["exact_arith", "superalgebra", "rewrite_engine", "weight_modules", "analysis", "utils",
                "run_checks"],
    python_requires=">=3.10",
    install_requires=["sympy>=1.12", "numpy", "pandas", "joblib", "tqdm"],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["n2-checks=run_checks:main"]},
)
