"""Backend selection for the tuple-ratio ascent kernel.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementation.  Setting ``UMDNORMS_BACKEND=python`` forces the
fallback.
"""

import os

from . import _kernels_py

if os.environ.get("UMDNORMS_BACKEND", "").lower() == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
ascend = _impl.ascend
transform_ratio = _impl.transform_ratio
