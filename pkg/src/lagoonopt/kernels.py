"""Backend selection for the DP kernels.

The compiled extension is used when it imports; otherwise (or with
``LAGOONOPT_PURE_PYTHON=1``) the numpy implementation runs. Both produce
bit-identical results.
"""

from __future__ import annotations

import os

from lagoonopt import _kernels_py

python_backend = _kernels_py
compiled_backend = None

try:
    from lagoonopt import _kernels as compiled_backend  # type: ignore[no-redef]
except ImportError:  # pragma: no cover - depends on the build
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("LAGOONOPT_PURE_PYTHON"):
    backend = compiled_backend
    BACKEND_NAME = "cython"
else:
    backend = python_backend
    BACKEND_NAME = "python"


def get_backend(name: str | None = None):
    """Return the kernel module called ``name`` ("cython"/"python"), or the default."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return compiled_backend
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name(module) -> str:
    return "cython" if module is compiled_backend and module is not None else "python"
