"""Computational workbench for Stokes data of exponential integrals.

Modules:
    gevrey     truncated formal series with Gevrey-1 bookkeeping
    summation  Borel-plane continuation and directional Laplace summation
    lattice    period lattices, exponential sums, exponent ordering
    derham     rational 1-forms on the line and their reduction data
    betti      steepest-flow thimbles and local model cycles
    stokes     exponential periods, sectorial matrices, Stokes factors
    cli        command-line pipeline
"""

from . import errors

__all__ = ["errors", "gevrey", "summation", "lattice", "derham", "betti",
           "stokes"]

__version__ = "0.1.0"
