"""Corner-free sets over F_2^n: transforms, box norms, density increments and uniformization."""

__version__ = "0.1.0"
