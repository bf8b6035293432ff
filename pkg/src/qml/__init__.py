"""Quotient modules of the Hardy space over the polydisc, and compressed multipliers on them."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
