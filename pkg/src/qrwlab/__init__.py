"""Translation invariant coined quantum walks on integer lattices."""

__version__ = "0.1.0"
