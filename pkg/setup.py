import setuptools
import sys
from rotcam_slam import info

if sys.version_info < (3, 10):
    sys.exit('rotcam_slam requires Python 3.10+ to run')

with open('README.md', 'r') as fh:
    long_description = fh.read()

setuptools.setup(
    name='rotcam-slam',
    version=info.__version__,
    description='Active V-SLAM simulator for an omnidirectional robot with an independently rotating camera.',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='MIT',
    packages=setuptools.find_packages(exclude=['tests', 'tests.*']),
    package_data={'rotcam_slam': ['environments/*.txt']},
    classifiers=[
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Programming Language :: Python :: 3.13',
        'Development Status :: 4 - Beta',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering',
        'Intended Audience :: Science/Research'
    ],
    python_requires='>=3.10',
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pyyaml>=6.0.2",
        "jsonschema>=4.20",
        "rich>=13.0",
        "typer[all]>=0.15.0"
    ],
    entry_points={
        'console_scripts': [
            'rotcam_slam = rotcam_slam.__main__:main'
        ]
    },
)
