"""Dilations of finite frames, operator-valued measures and linear maps on matrix algebras."""
from .errors import (ConsistencyError, DegenerateFramingError, FramedilError, MalformedAlgebraError,
                     MalformedInputError, NotADualPairError, NotAFrameError, PreconditionError,
                     ResourceError)
from .frames import (Frame, FrameBounds, OrthogonalDilation, analysis_operator, canonical_dual,
                     dilate_dual_pair, dilate_parseval, frame_bounds, frame_operator, is_parseval,
                     is_riesz_basis, synthesis_operator)
from .framings import Framing, fourier_framing_report, rescale, rescale_balanced, verify_framing
from .ovm import (FiniteOVM, classify, evaluate, induce_from_frame, induce_from_framing,
                  naimark_dilate_positive, ovm_norm)
from .dilation import (ElementaryDilationSystem, ElementaryVector, GenericDilationSystem, alpha_norm,
                       build_elementary, example_3_9, quotient_reduce, rank_report, restriction_reduce,
                       verify_dilation_norm_conditions, verify_generic)
from .algmaps import (AlgebraicDilation, FiniteAlgebra, LinearMapOnAlgebra, amplification_norm,
                      build_algebraic_dilation, cb_profile, dilation_operator_norms, transpose_map)

__version__ = "0.1.0"
