"""Nuclear forward scattering with switched hyperfine fields and x-ray logic gates."""

__version__ = "0.1.0"
