"""Output sharpness experiments on downsampled MNIST.

Thin wrapper over the C++ core. Matrices are float64 numpy arrays.
"""

from ._sharplab import *  # noqa: F401,F403
from ._sharplab import SharplabError, __doc__  # noqa: F401

__version__ = "0.1.0"
