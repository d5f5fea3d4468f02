"""Multipartite spinor Bose-Einstein condensate states and their spin coherent counterparts."""

__version__ = "0.1.0"
