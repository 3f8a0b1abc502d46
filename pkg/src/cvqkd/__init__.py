"""Key-rate bounds for Gaussian CV-QKD with squeezed states and imperfect reconciliation."""

from .errors import (CVQKDError, DegenerateMeasurementError, DomainError, PhysicalityError,
                     ShapeError, SingularMappingError, UnsupportedConfigurationError)
from .gaussian import (apply_beamsplitter, condition_on_homodyne, g_function,
                       symplectic_eigenvalues, von_neumann_entropy)
from .protocol import (Channel, EprSource, Preparation, apply_channel, build_three_mode_state,
                       conditional_variance_b_given_a, pm_to_epr)
from .rates import (KeyRateReport, ProtocolConfig, holevo_dr, holevo_pure_loss_rr, holevo_rr,
                    key_rate, mutual_information)
from .sampling import RunStats, simulate_pm
from .security import (NoiseToleranceResult, SweepGrid, distance_to_transmittance,
                       dr_coherent_beta_threshold, max_squeezed_variance_dr, max_tolerable_noise,
                       optimize_displacement, rate_vs_distance_curve, security_region,
                       sigma_limits_high_squeezing)

__version__ = "0.1.0"
