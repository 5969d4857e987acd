import setuptools

with open("README.rst", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="luslines",
    install_requires=["numpy", "scipy>=1.6", "Pillow>=9.3"],
    version="0.1",
    author="luslines developers",
    description="Line artifact identification in lung ultrasound by "
                "Cauchy proximal splitting in the Radon domain",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    license="MIT",
    packages=setuptools.find_packages(include=["luslines", "luslines.*"]),
    entry_points={
        "console_scripts": ["luslines=luslines.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Image Processing",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.7'
)
