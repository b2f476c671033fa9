"""symtensor: SU(2)-symmetric tensors stored as fusion-tree blocks.

Invariant tensors are kept as degeneracy blocks per sector path of a fusion
tree; permutations and reshapes become sparse recoupling maps built from
6-j symbols, and matrix operations run per total-spin block.
"""

import logging

from symtensor._types import IN, IN_R, OUT, Direction  # noqa: F401

from symtensor.exception import (  # noqa: F401
    SymTensorError,
    InvalidArgError,
    ChargeSystemMismatchError,
    FusionRuleError,
    StructureMismatchError,
    FuseMapError,
    ConfigError,
    NonInvariantError,
    OracleSizeError,
    CacheCorruptionError,
    ConvergenceError,
)

from symtensor.charge_systems import (  # noqa: F401
    ChargeSystem,
    SYSTEM_NAMES,
    su2_system,
    u1_system,
    z2_fermion_system,
    system_by_name,
)
from symtensor.rep_spaces import RepSpace, FuseMap, FusedLeg, fuse_spaces  # noqa: F401
from symtensor.fusion_trees import (  # noqa: F401
    FusionTree,
    SectorPath,
    left_comb,
    right_comb,
    paired_comb,
    bipartite,
    enumerate_paths,
)
from symtensor.gamma_engine import (  # noqa: F401
    GammaMap,
    GammaCache,
    gamma_recouple,
    gamma_permute,
    configure_cache,
    default_cache,
)
from symtensor.sym_tensor import (  # noqa: F401
    SymTensor,
    from_dense,
    to_dense,
    from_blocks,
    zeros,
    new_tree,
    reverse,
    permute,
    fuse,
    split,
    contract,
    dagger,
)
from symtensor.block_linalg import (  # noqa: F401
    BlockDiagMatrix,
    tree_to_blockdiag,
    blockdiag_to_tree,
    matmul,
    svd,
    truncate,
    eig,
)
from symtensor.network import contract_network  # noqa: F401
from symtensor.types import (  # noqa: F401
    SvdResult,
    TruncationResult,
    EigResult,
    SectorSpectrum,
    SweepRecord,
    MeraResult,
    TensorPolicy,
)

# Re-export submodules
from symtensor import exception  # noqa: F401
from symtensor import su2_kernels  # noqa: F401
from symtensor import dense_oracle  # noqa: F401
from symtensor import models  # noqa: F401

# Observability utilities (re-exported from internal module)
from symtensor._observability import (  # noqa: F401
    LOG_LEVEL_OFF,
    LOG_LEVEL_ERROR,
    LOG_LEVEL_WARN,
    LOG_LEVEL_INFO,
    LOG_LEVEL_DEBUG,
    LOG_LEVEL_TRACE,
    set_log_level,
    counters,
    reset_counters,
    counting,
    set_gamma_cache_enabled,
    is_gamma_cache_enabled,
    gamma_cache_disabled,
)

try:
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version as _get_version

    __version__ = _get_version("symtensor")
except PackageNotFoundError:
    __version__ = "0.0.0"  # Fallback for development

logger = logging.getLogger("symtensor")
logger.addHandler(logging.NullHandler())


__all__ = [
    # Directions
    "Direction",
    "OUT",
    "IN",
    "IN_R",
    # Charge systems and spaces
    "ChargeSystem",
    "SYSTEM_NAMES",
    "su2_system",
    "u1_system",
    "z2_fermion_system",
    "system_by_name",
    "RepSpace",
    "FuseMap",
    "FusedLeg",
    "fuse_spaces",
    # Fusion trees and recoupling
    "FusionTree",
    "SectorPath",
    "left_comb",
    "right_comb",
    "paired_comb",
    "bipartite",
    "enumerate_paths",
    "GammaMap",
    "GammaCache",
    "gamma_recouple",
    "gamma_permute",
    "configure_cache",
    "default_cache",
    # Tensors
    "SymTensor",
    "from_dense",
    "to_dense",
    "from_blocks",
    "zeros",
    "new_tree",
    "reverse",
    "permute",
    "fuse",
    "split",
    "contract",
    "dagger",
    "contract_network",
    # Block linear algebra
    "BlockDiagMatrix",
    "tree_to_blockdiag",
    "blockdiag_to_tree",
    "matmul",
    "svd",
    "truncate",
    "eig",
    # Result types
    "SvdResult",
    "TruncationResult",
    "EigResult",
    "SectorSpectrum",
    "SweepRecord",
    "MeraResult",
    "TensorPolicy",
    # Exceptions
    "SymTensorError",
    "InvalidArgError",
    "ChargeSystemMismatchError",
    "FusionRuleError",
    "StructureMismatchError",
    "FuseMapError",
    "ConfigError",
    "NonInvariantError",
    "OracleSizeError",
    "CacheCorruptionError",
    "ConvergenceError",
    # Submodules
    "exception",
    "su2_kernels",
    "dense_oracle",
    "models",
    # Logging and counters
    "LOG_LEVEL_OFF",
    "LOG_LEVEL_ERROR",
    "LOG_LEVEL_WARN",
    "LOG_LEVEL_INFO",
    "LOG_LEVEL_DEBUG",
    "LOG_LEVEL_TRACE",
    "set_log_level",
    "counters",
    "reset_counters",
    "counting",
    "set_gamma_cache_enabled",
    "is_gamma_cache_enabled",
    "gamma_cache_disabled",
    "__version__",
]
