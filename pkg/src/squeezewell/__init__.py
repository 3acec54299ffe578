"""Number squeezing in a symmetric double well: mean-field, two-mode, Bogoliubov and full-Fock tools."""

from .hartree import (DoubleWellParams, GridSpec, InteractionKernel, hartree_minimize,
                      mean_field_spectrum, tunneling_parameter)
from .modes import build_mode_basis, compute_coefficient_tensor, compute_kernel_operators
from .fockspace import assemble_HN, enumerate_basis, ground_state
from .twomode import assemble_H2mode, assemble_HBH, gaussian_state
from .bogoliubov import bogoliubov_energy, build_blocks, fock_oracle_quadratic

__version__ = "0.1.0"
