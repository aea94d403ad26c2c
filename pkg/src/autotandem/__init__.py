"""Active-learning data generation and tandem networks for inverse design."""

__version__ = "0.1.0"
