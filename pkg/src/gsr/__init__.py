"""Group-based sparse representation image restoration."""

from .grouping import Group, GroupingConfig, PatchGrid, build_grid, match_group
from .group_dict import (
    GroupDictionary,
    hard_threshold_code,
    learn_dictionary,
    reconstruct_group,
    soft_threshold_code,
)
from .metrics import add_gaussian_noise, isnr, psnr, residual_variance
from .operators import (
    BlockCSOperator,
    BlurOperator,
    MaskOperator,
    Measurements,
    make_block_cs,
    make_kernel,
    make_random_mask,
    make_stencil_mask,
)
from .pgm import load_pgm, save_pgm
from .solver import SolverConfig, compute_tau, default_config, restore

__all__ = [
    "Group",
    "GroupingConfig",
    "PatchGrid",
    "build_grid",
    "match_group",
    "GroupDictionary",
    "learn_dictionary",
    "hard_threshold_code",
    "soft_threshold_code",
    "reconstruct_group",
    "add_gaussian_noise",
    "psnr",
    "isnr",
    "residual_variance",
    "MaskOperator",
    "BlurOperator",
    "BlockCSOperator",
    "Measurements",
    "make_random_mask",
    "make_stencil_mask",
    "make_kernel",
    "make_block_cs",
    "load_pgm",
    "save_pgm",
    "SolverConfig",
    "compute_tau",
    "default_config",
    "restore",
]
