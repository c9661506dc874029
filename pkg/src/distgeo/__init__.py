"""Numerical geometry of regular distributions on Riemannian manifolds."""

from .curvature import (GaussReport, endo_decomposition, gauss_identity,
                        intrinsic_endo, intrinsic_K, sectional)
from .dist import (DistributionModel, FrameAtPoint, bracket_D, frame_at,
                   intrinsic_cov_deriv, koszul_cov_deriv, project_D,
                   project_perp, torsion_D)
from .dynamics import (Trajectory, curve_curvatures, geodesic_ambient,
                       geodesic_intrinsic, newton, nonholonomic)
from .errors import (DistGeoError, InputError, NotASectionError, NotSPDError,
                     NumericError, RankDeficiencyError, ScenarioError)
from .expr import evaluate, parse, to_text
from .riemann import (ManifoldModel, VectorFieldModel, christoffel_at,
                      cov_deriv, curvature_tensor_K, euclidean, flat_map,
                      lie_bracket, metric_at, riemann_endo, sharp_map)
from .scenario import builtin_fixture, load_scenario, write_scenario
from .sff import (bz_decomposition, dual_shape, hypersurface_form,
                  is_involutive, is_totally_geodesic, sff, shape_operator,
                  symmetric_product, weingarten)

__version__ = "0.1.0"
