"""LSTM cell kernels with runtime backend selection.

Two interchangeable implementations of the cell step exist: a compiled
extension (``_core``, Cython) and a plain numpy fallback (``_pure``).  The
environment variable ``SEQ2TREE_KERNELS`` picks one:

    compiled  require the extension, fail if it is missing
    python    force the numpy fallback
    auto      use the extension when importable, else fall back (default)

``BACKEND`` names the implementation actually in use.
"""

import importlib
import os

import numpy as np

from . import _pure

_choice = os.environ.get("SEQ2TREE_KERNELS", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ValueError(
        f"SEQ2TREE_KERNELS={_choice!r}: expected auto, compiled, or python")

_core = None
if _choice in ("auto", "compiled"):
    try:
        _core = importlib.import_module(__name__ + "._core")
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "SEQ2TREE_KERNELS=compiled but the compiled extension is not "
                "built; reinstall the package with Cython and a C compiler"
            ) from None

BACKEND = "python" if _core is None else "compiled"


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


if _core is None:
    lstm_cell_forward = _pure.lstm_cell_forward
    lstm_cell_backward = _pure.lstm_cell_backward
else:
    def lstm_cell_forward(wx, wh, x, h_prev, m_prev):
        return _core.lstm_cell_forward(
            _c64(wx), _c64(wh), _c64(x), _c64(h_prev), _c64(m_prev))
    lstm_cell_forward.__doc__ = _pure.lstm_cell_forward.__doc__

    def lstm_cell_backward(wx, wh, cache, dh, dm, dwx, dwh):
        return _core.lstm_cell_backward(
            _c64(wx), _c64(wh), cache, _c64(dh), _c64(dm), dwx, dwh)
    lstm_cell_backward.__doc__ = _pure.lstm_cell_backward.__doc__
