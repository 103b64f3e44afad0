"""Pinned Ginzburg-Landau vortices: discrete energies, minimizers and renormalized energies."""
from .core import (BoundaryData, ConfigurationError, DomainSpec, EnergyBreakdown, Field, Grid,
                   InclusionShape, InvariantError, PinningConfig, ScaleDiagnostics,
                   build_pinning_field, energy_E, energy_F, rescale_hat)

__version__ = "0.1.0"
