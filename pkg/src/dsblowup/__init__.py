"""Numerical laboratory for blow-up of semilinear waves on de Sitter space."""

__version__ = "0.1.0"
