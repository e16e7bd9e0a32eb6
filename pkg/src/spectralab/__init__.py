"""Spectral traces, heat kernels and related asymptotic invariants."""

from .errors import (SpectralabError, ValidationError, NumericalError,
                     NonPositiveOperator, NonPositiveShiftedOperator,
                     CutoffTooSmall, AboveCutoff, UnsupportedModel,
                     BoseDivergence, InsufficientOrder, PoleOfZeta,
                     WrongAlgebraicStructure, NotElliptic,
                     SpectralSymmetryRequired, NonCommutingPair,
                     NonIntegrableDiagonal, CurvedScopeUnsupported,
                     BudgetExceeded, TailTooLarge, QuadratureFailure,
                     IllConditioned, RankDeficient, ContourTooShort,
                     ContourWinding, PositivityCertificateFailed, SingularD)
from .models import (BC, Circle, FlatTorus, Interval, Sphere2, Landau,
                     DiracCircle, Spectrum, eigenvalues, dirac_eigenvalues,
                     counting_function)
from .traces import (KernelFamily, kernel_eval, classical_trace, theta_trace,
                     relativistic_trace, quantum_trace)
from .mellin import (SeriesTerm, AsymptoticSeries, AqResult, a_q,
                     aq_derivative, zeta, log_det, expansion_fit,
                     mellin_barnes_series)
from .invariants import (BoundaryData, GeometryData, ObliqueSymbol,
                         predicted_trace_coeffs, ggs_gamma, ggs_a1)
from .nonlaplace import (ConstantSymbol, a0_density, a1_density, a2_density,
                         dirichlet_psi, dirichlet_a1_density)
from .magnetic import (MagneticModel, u0_kernel, h_tensor, landau_check,
                       b2_leading)
from .relative import (TracePair, EffectiveMetric, combined_trace_X,
                       combined_trace_Y, relative_psi, relative_phi,
                       theorem1_leading_fit, bogolyubov)
from .heatdet import (CorrelatorSet, correlators, heat_det,
                      heat_det_leading)
from .weyl import (WeylModel, WeylPair, PairMatrices, d_matrix, omega_single,
                   pair_matrices, convolution_kernel, trace_density)

__version__ = "0.1.0"
