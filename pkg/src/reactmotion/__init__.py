"""Reactive two-character motion synthesis with a part-based attentive seq2seq GAN."""

__version__ = "0.1.0"
