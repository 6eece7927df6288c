# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from __future__ import absolute_import

import re

from setuptools import setup, find_packages

setup_kwargs = {}

try:
    with open('README.md') as handle:
        readme = handle.read()
    setup_kwargs["long_description"] = readme
    setup_kwargs["long_description_content_type"] = "text/markdown"
except IOError:
    setup_kwargs["long_description"] = ''

with open('spgnet/__init__.py') as handle:
    version = re.search(r'^__version__ = "([^"]+)"', handle.read(), re.M).group(1)

setup(
    name="spgnet",
    version=version,
    packages=find_packages(),
    install_requires=[
        "numpy>=1.17",
        "pandas",
        "cachetools>=2.0",
        "scikit-image>=0.19"
    ],
    tests_require=[
        "pytest",
        "importlib_resources"
    ],
    package_data={
         '': [
             'tests/fixtures/*.txt',
             'tests/fixtures/*.cfg',
             'tests/fixtures/*.tsv'
         ]
    },
    entry_points={
        'console_scripts': [
            'spgnet = spgnet.cli:main'
        ]
    },
    description="Two-stage pose-guided person image generation on a numpy autodiff core",
    license="Apache License V2",
    keywords=("person image generation", "pose transfer", "human parsing", "autodiff"),
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Image Processing'
    ],
    platforms="GNU/Linux, Mac OS X >= 10.7, Microsoft Windows >= 7",
    python_requires=">=3.8",
    **setup_kwargs
)
