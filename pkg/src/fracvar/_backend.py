"""Import-time choice between the compiled core and the numpy fallback.

Set ``FRACVAR_PURE_PYTHON=1`` to force the fallback even when the
extension is built.
"""

import os

if os.environ.get("FRACVAR_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _fallback as impl

    NAME = "python"
else:
    try:
        from . import _core as impl

        NAME = "cython"
    except ImportError:
        from . import _fallback as impl

        NAME = "python"

covariance_matrix = impl.covariance_matrix
compensated_sum = impl.compensated_sum
power_increment_sum = impl.power_increment_sum
weighted_sq_increment_sum = impl.weighted_sq_increment_sum
stencil_sq_sum = impl.stencil_sq_sum

__all__ = [
    "NAME",
    "covariance_matrix",
    "compensated_sum",
    "power_increment_sum",
    "weighted_sq_increment_sum",
    "stencil_sq_sum",
]
