"""Construction and inspection of Hölder functions on grids and point sets."""

from .copies import Placement, RescaledCopy, rescaled_copy
from .extension import Mollifier, bump, mcshane_extend, mcshane_grid, mollify
from .functions import (GridFunction, HolderEstimate, HolderSample, clamp_combine, holder_constant,
                        lattice_coords, perturb_nonconstant, read_function, write_function)
from .simplicial import (SimplicialInterpolant, build_interpolant, kuhn_simplices, simplex_geometry,
                         simplicial_lipschitz_bound)

__all__ = [
    "GridFunction", "HolderEstimate", "HolderSample", "Mollifier", "Placement", "RescaledCopy",
    "SimplicialInterpolant", "build_interpolant", "bump", "clamp_combine", "holder_constant",
    "kuhn_simplices", "lattice_coords", "mcshane_extend", "mcshane_grid", "mollify",
    "perturb_nonconstant", "read_function", "rescaled_copy", "simplex_geometry",
    "simplicial_lipschitz_bound", "write_function",
]
