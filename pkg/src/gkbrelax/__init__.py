"""Inexact inner-outer generalized Golub-Kahan bidiagonalization with relaxed inner tolerances."""

from .errors import (CapacityError, DimensionError, GkbError, MatrixMarketError, NumericalBreakdown,
                     SPDError, SymmetryError, TrivialRhsError)
from .gkb import (GkbOptions, GkbResult, GkbState, RunLog, SaddleSystem, dual_residual, gkb_init,
                  gkb_solve, gkb_step, lower_bound_abs, lower_bound_rel, recover_w, transform_rhs,
                  true_error_M)
from .inner import CGInner, ExactInner, InnerReport, cg_solve, exact_solve, make_inner_solver
from .problems import (GeneratedProblem, dense_solve, gen_mac_stokes_channel, gen_mixed_poisson_rt0,
                       gen_random_saddle, load_system, save_system)
from .relaxation import FixedSchedule, PolicyInputs, RelaxPolicy, predict_zeta, simoncini_constant
from .transforms import DeflationBasis, augment, deflate, deflation_correction, schur_dense

__version__ = "0.1.0"
