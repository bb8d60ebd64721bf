# coding: utf-8

import setuptools


if __name__ == "__main__":
    # See `setup.cfg` and `pyproject.toml` for configuration.
    setuptools.setup()
