from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="ensemble-kss",
    author="Music Technology Group, Universitat Pompeu Fabra",
    install_requires=['numpy>=1.24', 'scipy>=1.10', 'scikit-learn>=1.3', 'joblib>=1.2', 'click>=8.0',
                      'SQLAlchemy>=2.0', 'python-dotenv', 'pandas>=2.0', 'Flask>=2.2'],
    description="Ensemble K-subspaces clustering with co-association affinities",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=['ensemblekss', 'ensemblekss.backend', 'ensemblekss.model', 'harness'],
    py_modules=['config'],
    entry_points={
        'console_scripts': ['ekss=harness.cli:main'],
    },
    use_scm_version=True,
    setup_requires=['setuptools_scm'],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Information Analysis",
        "Topic :: Scientific/Engineering :: Mathematics"
    ],
    python_requires='>=3.10',
)
