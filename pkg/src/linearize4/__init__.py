"""Linearization of fourth-order ODEs by point transformations, applied to the
traveling-wave reduction of a fourth-order Boussinesq-type PDE."""

__version__ = "0.1.0"
