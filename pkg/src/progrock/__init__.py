"""Progressive rock vs. non-progressive rock song classification from audio."""

__version__ = "0.1.0"
