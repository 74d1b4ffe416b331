"""Backend selection for the MLP kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation is. ``DSSHARE_BACKEND=python`` forces the fallback.
"""

import os

from . import _kernels_python

if os.environ.get("DSSHARE_BACKEND", "").lower() == "python":
    from ._kernels_python import BACKEND, mlp_backward, mlp_forward
else:
    try:
        from ._kernels import BACKEND, mlp_backward, mlp_forward
    except ImportError:  # pragma: no cover - depends on the build
        from ._kernels_python import BACKEND, mlp_backward, mlp_forward

unpack = _kernels_python.unpack

__all__ = ["BACKEND", "mlp_backward", "mlp_forward", "unpack"]
