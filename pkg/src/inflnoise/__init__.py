"""Noise annotation, slot alignment, dataset construction and character-level
inflection models for noisy morphological training data."""

__version__ = "0.1.0"
