from setuptools import setup
import re

package_name = 'tempora'

with open('README.md', 'r') as f:
    long_description = f.read()

with open(f'{package_name}/__init__.py', 'r') as fd:
    version = re.search(
        r'^__version__\s*=\s*[\'"]([^\'"]*)[\'"]',
        fd.read(),
        re.MULTILINE).group(1)

with open('requirements.txt', 'r') as f:
    requirements = [line.strip() for line in f if line.strip()]

setup(
    name=package_name,
    version=version,
    description='Dynamic topic modelling with a recurrent replicated softmax model',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=[package_name],
    python_requires='>=3.8',
    requires=requirements,
    classifiers=[
        "Programming Language :: Python :: 3",
    ],
    install_requires=[
        'numpy',
        'scipy',
        'jsonschema',
        'gensim'
    ],
    include_package_data=True,
    package_data={
        '': [
            'manifest.json',
            'trainconfig.json',
            'checkpoint.json',
            'keyterms.json',
            'cooccurrence.json'
        ]
    },
    entry_points={
        'console_scripts': ['tempora = tempora.cli:main']
    },
)
