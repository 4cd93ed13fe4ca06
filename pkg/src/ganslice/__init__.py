"""Demand-aware RAN slicing with distributional (GAN-based) deep Q-learning."""

__version__ = "0.1.0"
