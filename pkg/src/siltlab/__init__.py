"""Finite models of sp-filtrations, local cohomology and the localization calculus."""
__version__ = "0.1.0"
