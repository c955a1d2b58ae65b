"""Kernel selection: compiled extension when importable, Python otherwise.

The choice is made once at import and can be overridden either with the
``CEGAMES_FLOW_ENGINE`` environment variable (``auto``, ``compiled``,
``python``) or at runtime via :func:`set_engine` (used by the engine
comparison benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_ENV_VAR = "CEGAMES_FLOW_ENGINE"


def available_engines() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def _resolve(name: str):
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernels are not available in this install")
        return _compiled
    if name == "auto":
        return _compiled if _compiled is not None else _kernels_py
    raise ValueError(f"unknown flow engine {name!r} (use auto, compiled, or python)")


_current = _resolve(os.environ.get(_ENV_VAR, "auto"))


def kernels():
    return _current


def engine_name() -> str:
    return _current.ENGINE


def set_engine(name: str) -> str:
    """Switch kernels at runtime; returns the name of the active engine."""
    global _current
    _current = _resolve(name)
    return _current.ENGINE
