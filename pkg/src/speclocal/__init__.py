"""speclocal: semilocalization experiments on inhomogeneous random graphs."""

__version__ = "0.1.0"
