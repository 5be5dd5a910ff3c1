"""Images, kernels, NRRD I/O and the direct convolution probe."""

from .image import Image
from .kernels import KERNELS, Kernel, eval_kernel, get_kernel
from .nrrd import load_nrrd, write_nrrd
from .oracle import oracle_probe

__all__ = ["Image", "KERNELS", "Kernel", "eval_kernel", "get_kernel", "load_nrrd", "write_nrrd", "oracle_probe"]
