"""Partial-label-aware grid detector training with a synthetic dense-scene benchmark."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("sparsedet")
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.0.0"
