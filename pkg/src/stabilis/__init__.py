"""Numerical stability analysis for the mixed quadratic-cubic-quartic functional equation."""

from .core import (Box, DecompositionReport, Direction, ExtractionConfig, FunctionHandle, NormSpec,
                   PerturbationBound, norm, phi_eval, probe_grid, zero_handle)
from .decomposition import (CubicForm, QuadraticForm, QuarticForm, SymmetricForm, bilinearity_defect,
                            build_solution, extract_g, extract_h, form_from_handle, is_bilinear,
                            multilinearize, polarize_quadratic, recombine)
from .errors import (ArgumentCapExceeded, ArityError, CriticalExponentError, DimensionError, DivergentSeries,
                     DomainError, EvennessError, HypothesisError, InvalidEnvelope, InvalidValue, NoConvergence,
                     OddnessError, ParityError, RegimeError, SchemaError, SingularFit, StabilisError)
from .functions import handle_from_json, handle_to_json, parse_input, poly_handle, samples_handle
from .harness import GeneratorSpec, OracleFit, generate, oracle_fit
from .operators import (check_equation, d_cubic, d_mixed, d_quadratic, d_quartic, even_odd_split, pair_grid,
                        verify_identity_suite)
from .series import BoundSeriesSpec, bound_series, corollary_constant, exact_constant_coefficient, select_direction
from .stability import (ComponentEstimate, extract_all, extract_cubic_stable, extract_quadratic_stable,
                        extract_quartic_stable, iterate_component, normalize_components)

__version__ = "0.1.0"
