"""Union/product circuits for homomorphism sets, with width measures,
rectangle covers, and hard-instance generators."""

__version__ = "0.1.0"
