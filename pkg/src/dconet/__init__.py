"""Physics-informed compositional operator networks on irregular 2-D domains."""

from .tensor import ParamStore, Tape, Tensor, fd_gradient_check
from .jet import Jet2
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "Tape",
    "ParamStore",
    "Jet2",
    "fd_gradient_check",
    "KERNEL_BACKEND",
    "__version__",
]
