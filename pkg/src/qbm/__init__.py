"""Exact Gaussian dynamics of quantum Brownian motion and Bures-distance non-Markovianity."""
from .driving import DrivingSpec, driven_means, effective_force
from .greens import GreensError, GreensSolution, build_greens, discriminant_map, greens_eval
from .mastereq import CLLimitParams, cl_greens_eval, cl_noise_matrix, cl_propagate
from .metrics import (QuadratureState, bures_distance, bures_from_fidelity, fidelity_gaussian,
                      fidelity_moments, trace_distance_bounds)
from .model import (GaussianState, ParameterError, PhysParams, TimeGrid, coherent_from_displacement,
                    coherent_state, from_quadratures, to_quadratures)
from .nonmarkov import (BuresSeries, PairSpec, SweepResult, bures_trajectory, evolve_pair, measure,
                        nonmarkovianity_measure, sweep)
from .propagation import (NoiseMatrix, PhysicalityError, Trajectory, noise_matrix, noise_oracle, propagate,
                          propagate_covariance, propagate_mean)
from .spectral import (ConvergenceError, NoiseConfig, damping_kernel, effective_spectral_density, noise_kernel,
                       resonance_cutoff, spectral_density)

__version__ = "0.1.0"
