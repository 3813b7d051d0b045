"""Embed messages in laser-cut finger joints and living hinges, and read them back."""

__version__ = "0.1.0"
