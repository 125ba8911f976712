"""Contextual Pandora's Box: Weitzman search driven by online regression oracles."""

__version__ = "0.1.0"
