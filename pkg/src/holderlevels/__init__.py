"""Level sets of Hölder functions on fractal grids.

Grids, fractal rasterizers, Hölder function tools, level-set dimension
profiles, and reproducible audit harnesses. Hot loops run in a compiled
extension when it is available (see :data:`holderlevels.kernels.BACKEND`).
"""

from . import errors, kernels
from .errors import *  # noqa: F401,F403
from .fractals import (IFS, SPONGE_BOUNDS, Similarity, SpongeSpec, attractor_diameter, dump_ifs, gap_tail_sum,
                       ifs_points, ifs_rasterize, load_ifs, minimal_k, rasterize_sponge, sierpinski_preset,
                       sponge_interval_measure, sponge_membership, sponge_occupancy_1d, square_ifs,
                       sufficient_kmax)
from .grid import (DimEstimate, GridSet, box_dimension, cell_count, coarsen, estimate_dimension,
                   multiscale_counts, read_grid, slice_audit, slice_counts, write_grid)
from .holder import (GridFunction, HolderSample, Mollifier, RescaledCopy, SimplicialInterpolant,
                     build_interpolant, clamp_combine, holder_constant, mcshane_extend, mcshane_grid, mollify,
                     perturb_nonconstant, read_function, rescaled_copy, write_function)
from .levels import (LevelProfile, dstar_estimate, fubini_area, kappa, level_cells, level_dim, level_sweep,
                     read_profile_csv, write_profile_csv)
from .plotting import emit_plot

__version__ = "0.1.0"
