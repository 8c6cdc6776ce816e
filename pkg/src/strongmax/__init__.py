"""Strong convergence of multivariate maxima to max-stable limits.

D-norm calculus, generalized Pareto and extreme-value copulas, exact
densities of maxima through Faà di Bruno's formula, seedable samplers and
the numerical functionals (total variation brackets, empirical copula,
``rho_delta``) used to check convergence in total variation.
"""

__version__ = "0.1.0"

from .boxes import BoxRegion, rectangle_mass
from .copulas import (Copula, ExtremeValueCopula, GeneralizedParetoCopula, GumbelHougaardCopula,
                      InclusionExclusionCopula, copula_block_partial, copula_cdf,
                      copula_density, scaled_expansion_residual, scaled_partial_limit_check)
from .dnorms import (DNorm, dnorm_block_partial, dnorm_eval, inclusion_exclusion, logistic,
                     phi_block_partial, sup_norm)
from .errors import (ConfigError, DimensionLimitError, DomainError, NonFiniteError,
                     NumericalError, StrongMaxError, UnsupportedFamilyError)
from .margins import (MarginFamily, default_norming_constants, gev_cdf, gev_pdf, gev_quantile,
                      margin_family, von_mises_diagnostic)
from .maxima import (GeneralizedMaxStable, GpcMaximaLaw, MaximaCopula, NormalizedMaximaLaw,
                     StandardMaxStable, gpc_maxima_cdf, gpc_maxima_density,
                     marginal_transform_maxima, max_stable_cdf, max_stable_density,
                     maxima_copula_cdf, maxima_copula_density, maxima_copula_log_form,
                     normalized_maxima_cdf, normalized_maxima_density, sigma_n_derivative)
from .metrics import (DensityGrid, EmpiricalCopula, TvEstimate, density_ratio_grid,
                      empirical_copula_eval, empirical_copula_sup_error, log_ratio_moments,
                      rho_delta, sup_distance_grid, tv_distance_box)
from .partitions import bell_number, enumerate_partitions, faa_di_bruno, iter_partitions
from .quadrature import QuadratureSpec
from .sampling import (RandomSource, SampleMatrix, copula_sampler, sample_block_maxima,
                       sample_gumbel_hougaard, sample_max_stable, transform_margins)
