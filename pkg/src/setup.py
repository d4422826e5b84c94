from setuptools import setup, find_packages

setup(
    name='lexsynt',
    version='1.0',
    packages=find_packages(),
    package_data={'configs': ['files/*.qa', 'files/*.game', 'files/*.mealy']},
    entry_points={'console_scripts': ['lexsynt=cli.lexsynt:main']}
)
