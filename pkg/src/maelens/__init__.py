"""Closed-form theory and measurement tools for linear masked autoencoders."""

__version__ = "0.1.0"

from .analysis import boundary_emphasis, entropy_histogram, kernel_profile, spatial_entropy
from .correlation import (
    DataMatrix,
    IsingSpec,
    empirical_correlation,
    gaussian_from_cov,
    ising_correlation,
    ising_gibbs_sample,
    spatial_autocorrelation,
)
from .layout import Grid2D, Ring1D
from .linalg import blkdiag, gen_sym_eig, sym_factor
from .masking import mc_loss, sample_mask
from .solutions import (
    LinearModel,
    MAESolution,
    ae_optimum,
    critical_point,
    dae_optimum,
    mae_optimum,
    marginal_loss,
)
from .spectrum import dft, mask_spectrum, rect_magnitude
from .training import TrainConfig, jacobian, train_linear, train_mlp

__all__ = [
    "DataMatrix", "Grid2D", "IsingSpec", "LinearModel", "MAESolution", "Ring1D", "TrainConfig",
    "ae_optimum", "blkdiag", "boundary_emphasis", "critical_point", "dae_optimum", "dft",
    "empirical_correlation", "entropy_histogram", "gaussian_from_cov", "gen_sym_eig",
    "ising_correlation", "ising_gibbs_sample", "jacobian", "kernel_profile", "mae_optimum",
    "marginal_loss", "mask_spectrum", "mc_loss", "rect_magnitude", "sample_mask",
    "spatial_autocorrelation", "spatial_entropy", "sym_factor", "train_linear", "train_mlp",
]
