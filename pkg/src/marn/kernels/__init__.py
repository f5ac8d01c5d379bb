"""Backend selection for the numeric kernels.

Set ``MARN_BACKEND=numpy`` to force the pure-numpy path, or
``MARN_BACKEND=numba`` to require the jitted path (import error if numba
is missing). The default tries numba and silently falls back to numpy.
``benchmarks/bench_backends.py`` compares the two.
"""

import os

_requested = os.environ.get("MARN_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        BACKEND = "numpy"
elif _requested == "numba":
    from . import numba_impl as _impl

    BACKEND = "numba"
elif _requested == "numpy":
    from . import numpy_impl as _impl

    BACKEND = "numpy"
else:
    raise ValueError(
        f"MARN_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

matvec = _impl.matvec
matvec_t_acc = _impl.matvec_t_acc
ger_acc = _impl.ger_acc
vec_acc = _impl.vec_acc
affine = _impl.affine
gate_pre = _impl.gate_pre
acc_matvec = _impl.acc_matvec
sigmoid = _impl.sigmoid
tanh_fwd = _impl.tanh_fwd
relu = _impl.relu
sigmoid_bwd_acc = _impl.sigmoid_bwd_acc
tanh_bwd_acc = _impl.tanh_bwd_acc
relu_bwd_acc = _impl.relu_bwd_acc
lsthm_point_fwd = _impl.lsthm_point_fwd
lsthm_point_bwd = _impl.lsthm_point_bwd
softmax_rows = _impl.softmax_rows
softmax_rows_bwd_acc = _impl.softmax_rows_bwd_acc
tile_mul = _impl.tile_mul
tile_mul_bwd_a_acc = _impl.tile_mul_bwd_a_acc
tile_mul_bwd_h_acc = _impl.tile_mul_bwd_h_acc
gather = _impl.gather
scatter_acc = _impl.scatter_acc
adam_update = _impl.adam_update
