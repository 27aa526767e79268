"""Secure multi-objective power allocation for MISO downlinks with RF energy harvesting."""
__version__ = "0.1.0"
