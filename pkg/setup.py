from setuptools import find_packages, setup

setup(
    name='quadtune',
    version='0.1',
    packages=find_packages(exclude=['scripts']),
    package_data={'quadtune': ['configs/*.json']},
    zip_safe=False,
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.9',
        'pandas>=1.5',
        'pydantic>=2.0',
        'tqdm',
        'inflection',
        'gymnasium>=0.28',
    ],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['quadtune=quadtune.main:main']},
)
