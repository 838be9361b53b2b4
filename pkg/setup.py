from setuptools import setup, find_packages
from pathlib import Path

# Read the contents of README.md
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

# Get version
version = {}
with open(this_directory / "src" / "tanpq" / "__init__.py") as fp:
    for line in fp:
        if line.startswith("__version__"):
            exec(line, version)
            break


def get_requirements():
    """Load runtime requirements from requirements.txt."""
    req_path = this_directory / "requirements.txt"
    requirements = []
    with open(req_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line.startswith("# Development"):
                break
            if line and not line.startswith("#"):
                requirements.append(line)
    return requirements


setup(
    name="tanpq-lab",
    version=version.get("__version__", "0.1.0"),
    author="tanpq Development Team",
    author_email="contact@example.com",
    description="Numerical laboratory for the family lambda * tan^p(z^q)",
    long_description=long_description,
    long_description_content_type="text/markdown",
    package_dir={"": "src"},
    packages=find_packages(where="src", include=["tanpq", "tanpq.*"]),
    python_requires=">=3.9",
    install_requires=get_requirements(),
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "hypothesis>=6.90.0",
            "Pillow>=10.1.0",
            "black>=22.8.0",
            "flake8>=5.0.0",
            "mypy>=0.990",
        ],
    },
    entry_points={
        "console_scripts": [
            "tanpq=tanpq.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Operating System :: OS Independent",
    ],
)
