"""Desk-scale lab for quantum generators trained adversarially in a latent space."""

__version__ = "0.1.0"
