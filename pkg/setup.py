#!/usr/bin/env python3
"""Setup script for relcompress."""

from setuptools import setup
import os

# Read README for long description
def read_readme():
    readme_path = os.path.join(os.path.dirname(__file__), 'README.md')
    if os.path.exists(readme_path):
        with open(readme_path, 'r', encoding='utf-8') as f:
            return f.read()
    return "Relevance-aware time-series compression"

setup(
    name="relcompress",
    version="0.1.1",
    description="Relevance-aware time-series segmentation, reconstruction and streaming synopsis",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    author="relcompress contributors",
    packages=["relcompress", "relcompress.utils"],
    entry_points={
        'console_scripts': [
            'relcompress=relcompress.cli:main',
        ],
    },
    install_requires=[
        "pydantic>=2.4.2,<3.0.0",
        "numpy>=1.22",
    ],
    extras_require={
        'test': ["pytest>=7", "hypothesis>=6", "scipy>=1.9"],
    },
    python_requires=">=3.9",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering",
        "Topic :: System :: Archiving :: Compression",
    ],
    keywords="time-series compression segmentation optimal-transport streaming synopsis",
)
