import setuptools

setuptools.setup(
    name="mgpf",
    version="0.1.0",
    author="Maxence Larose",
    author_email="maxence.larose.1@ulaval.ca",
    description="Desk-scale mask-guided prompt following for controllable diffusion models. Object masks gate the"
                " control branch features and cross-attention losses steer the sampling so that prompts and"
                " misaligned visual controls can coexist. A procedural colored-shapes benchmark with local oracles"
                " is included to measure attribute matching and object generation.",
    long_description=open('README.md', "r", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    url="https://github.com/MaxenceLarose/mgpf",
    license="Apache License 2.0",
    keywords='diffusion controlnet cross-attention guidance attribute-binding python3',
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    package_data={"mgpf": ["resources/*.txt"]},
    python_requires=">=3.8",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
    ],
    install_requires=[
        "h5py",
        "numpy",
        "scipy",
        "SimpleITK",
        "torch",
        "tqdm"
    ],
    extras_require={
        "test": ["pytest"]
    },
    entry_points={
        "console_scripts": ["mgpf=mgpf.cli:main"]
    },
)
