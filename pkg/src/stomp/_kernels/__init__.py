"""Kernel backend selection.

The compiled extension (``stomp._kernels._core``) is preferred when it
imports cleanly; otherwise the pure-Python twin (``pyk``) is used. Set
``STOMP_BACKEND=py`` or ``STOMP_BACKEND=cy`` to force a choice (forcing
``cy`` raises if the extension is unavailable).

Both backends expose the same four functions: ``sample_steps``,
``option_learning_steps``, ``model_learning_steps``, ``avi_steps``.
"""

import os

from . import pyk

_forced = os.environ.get("STOMP_BACKEND", "").lower()

_cy = None
if _forced != "py":
    try:
        from . import _core as _cy
    except ImportError:
        _cy = None
        if _forced == "cy":
            raise ImportError(
                "STOMP_BACKEND=cy but the compiled kernel extension is not "
                "built; run `pip install -e . --no-build-isolation`")

_impl = _cy if _cy is not None else pyk

backend_name = _impl.BACKEND
sample_steps = _impl.sample_steps
option_learning_steps = _impl.option_learning_steps
model_learning_steps = _impl.model_learning_steps
avi_steps = _impl.avi_steps


def get_backend(name=None):
    """Return a backend module by name ('python'/'cython'); default active."""
    if name in (None, "", backend_name):
        return _impl
    if name in ("py", "python"):
        return pyk
    if name in ("cy", "cython"):
        if _cy is None:
            raise ImportError("compiled kernel extension is not built")
        return _cy
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    if _cy is not None:
        names.append("cython")
    return names


def set_default_backend(name):
    """Switch the process-wide default backend (used by the CLI flag)."""
    global _impl, backend_name, sample_steps, option_learning_steps
    global model_learning_steps, avi_steps
    _impl = get_backend(name)
    backend_name = _impl.BACKEND
    sample_steps = _impl.sample_steps
    option_learning_steps = _impl.option_learning_steps
    model_learning_steps = _impl.model_learning_steps
    avi_steps = _impl.avi_steps
