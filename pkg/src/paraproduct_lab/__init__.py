"""Numerical laboratory for mixed bi-parameter dyadic paraproduct forms."""
from .dyadic import DyadicInterval, DyadicRectangle, GridSpec, UNIT, UNIT_SQUARE
from .sequences import (CoefficientSequence, ScaleInvariantSequence, SignPattern, abs_seq,
                        column_example, hadamard_sequence, identity_example, lift_matrix,
                        product_sign_flip, walsh_hadamard)
from .forms import (FunctionFamily, HaarExpansion2D, TruncatedFormOperator, evaluate_P,
                    gamma_eval)
from .norms import mlambda_norm, x_norm, xprime_norm
from .bmo import mixed_bmo, prod_bmo_exact, prod_bmo_greedy, rect_bmo

__version__ = "0.1.0"
