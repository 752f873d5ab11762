from setuptools import setup, find_packages

classifiers = [
    'Development Status :: 1 - Planning',
    'Intended Audience :: Science/Research',
    'Operating System :: OS Independent',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3.8'
]

setup(
    name='qpde-design',
    version='0.1.0',
    author='qpde-design developers',
    packages=find_packages(),
    package_data={'qpde_design': ['example_scripts/*.yaml']},
    scripts=[],
    license='LICENSE',
    description='Block encodings and Hamiltonian simulation of design-parameterized linear PDE generators',
    long_description=open('README.md').read(),
    classifiers=classifiers,
    install_requires=[
        "numpy",
        "pandas",
        "pytest",
        "scipy",
        "pyyaml",
    ],
    entry_points={
        'console_scripts': ['qpde-design=qpde_design.cli:main'],
    },
)
