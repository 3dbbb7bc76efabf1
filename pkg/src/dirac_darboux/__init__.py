"""Exactly solvable 1-D Dirac models via Darboux transformations.

Closed-form 2x2 and 4x4 potentials with certified bound states,
reflectionless scattering and intertwining relations, plus a generic
seed-matrix engine used as the independent numerical route for every
closed formula.
"""

from .config import (BuiltModel, GridConfig, ModelConfig, build_model,
                     load_config, parse_config)
from .checks import Check, Report, run_checks
from .darboux2x2 import (AsymptoticIntertwiner, BoundState, RegularityReport,
                         Seed2x2, Transformed2x2, asymptotics, bound_states,
                         build_seed, chiral_transform, regularity, transform)
from .engine import (DarbouxPair, DiracOperator, MissingState,
                     MissingStateSet, SeedMatrix, apply, darboux,
                     gaussian_packets, intertwine_apply,
                     intertwining_residual, make_operator, make_seed,
                     missing_states)
from .errors import (DegenerateAsymptoticsError, DiracDarbouxError,
                     InvalidInputError, InvalidParameterError,
                     InvalidSeedEnergyError, NotReducibleError,
                     NotScatteringEnergyError, NumericalFailure,
                     OneSidedScatteringError, PoleInFormulaError,
                     SingularMatrixError, SingularSeedError)
from .free2x2 import (Band, FreeParams, SolutionPair, SpinorField,
                      band_edges, closed_solution, fundamental_solutions,
                      kappa, scattering_state)
from .nonreducible import (AdjointMissingSet, BlockSeed, NonHermitianResult,
                           adjoint_intertwining_residual,
                           adjoint_missing_states, build_block_seed,
                           nonreducible_transform)
from .numerics import DEFAULT_GRID, GAMMA2, Grid, MatrixField
from .reduce4x4 import (DistortionModel, DistortionPotential, ReducedPair,
                        ReducibleIntertwiner, ReductionScheme,
                        SpinOrbitModel, SpinOrbitPotential, assemble,
                        build_distortion_model, build_spinorbit_model,
                        distortion_scheme, embed_state, klein_state,
                        reduce, spin_orbit_scheme)
from .scattering import (Channels, Mode, ScatteringResult,
                         asymptotic_channels, bound_state_check, choose_box,
                         reflection_transmission, scatter_sweep)

__version__ = "0.1.0"
