from setuptools import setup

import pulseflow


def read(filename):
    with open(filename) as f:
        return f.read()


def get_requirements_tests():
    with open('requirements-tests.txt') as f:
        return f.readlines()


setup(
    name='pulseflow',
    version=pulseflow.__version__,
    packages=['pulseflow', 'pulseflow.management', 'pulseflow.management.commands'],
    license='BSD',
    description='Pulse-level simulation of SFQ logic and the bidirectional binary shifter',
    long_description=read('README.rst') + '\n\n' + read('CHANGELOG.rst'),
    install_requires=[
        'Django>=3.2',
        'pyvcd>=0.2',
    ],
    entry_points={
        'console_scripts': ['pulseflow = pulseflow.cli:main'],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Framework :: Django',
        'Framework :: Django :: 3.2',
        'Framework :: Django :: 4.2',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Electronic Design Automation (EDA)',
    ],
    tests_require=get_requirements_tests(),
    test_suite='tests',
    zip_safe=False
)
