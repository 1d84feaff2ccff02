"""diskflow: free-surface ideal flow on time-dependent conformal images of the disk."""

from .grid import BoundaryTrace, FilterSpec, SpectralGrid

__version__ = "0.1.0"

__all__ = ["BoundaryTrace", "FilterSpec", "SpectralGrid", "__version__"]
