"""Single source for the package version string used in data-file headers."""

__version__ = "0.1.0"
