"""Clinical decision support toolkit for classical Unani medicine sources."""

__version__ = "0.1.0"
