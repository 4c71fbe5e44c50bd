"""Select the compiled kernels when available.

Set ``BLAB_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _fallback

NAME = "python"
impl = _fallback

if os.environ.get("BLAB_BACKEND", "").lower() not in ("python", "fallback", "numpy"):
    try:
        from . import _accel as impl  # noqa: F811
        NAME = "compiled"
    except ImportError:
        impl = _fallback

pairwise_sum = impl.pairwise_sum
shell_counts = impl.shell_counts
sine_moments = impl.sine_moments
shifted_table_sum = impl.shifted_table_sum


def available():
    """Names of the backends that can be imported in this environment."""
    names = ["python"]
    try:
        from . import _accel  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    return names


def get(name):
    if name == "python":
        return _fallback
    from . import _accel
    return _accel
