"""Pure numpy evaluation of the tabulated transition function.

Mirrors ``_nu_kernel.nu_fill`` operation for operation so both paths agree
to rounding.
"""

from __future__ import annotations

import numpy as np


def _cubic(x: np.ndarray, nodes: np.ndarray, coef: np.ndarray, inv_h: float) -> np.ndarray:
    m = coef.shape[0]
    u = (x - nodes[0]) * inv_h
    i = np.clip(np.floor(u), 0, m - 1).astype(np.intp)
    d = x - nodes[i]
    c = coef[i]
    return ((c[:, 0] * d + c[:, 1]) * d + c[:, 2]) * d + c[:, 3]


def nu_fill(x: np.ndarray, out: np.ndarray, nodes: np.ndarray, coef: np.ndarray) -> None:
    """Write the transition value of every entry of ``x`` into ``out``."""
    m = coef.shape[0]
    inv_h = m / (nodes[m] - nodes[0])
    out[:] = np.where(x >= 1.0, 1.0, 0.0)
    out[np.isnan(x)] = np.nan
    inside = (x > -1.0) & (x < 1.0)
    if not inside.any():
        return
    v = x[inside]
    gp = _cubic(v, nodes, coef, inv_h)
    gm = _cubic(-v, nodes, coef, inv_h)
    out[inside] = gp / np.sqrt(gp * gp + gm * gm)
