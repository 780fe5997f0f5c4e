"""Compiled inner loops for path integration.

The stochastic integration runs in transformed time s = t**(2H), where the
scaling diffusion obeys dx = sqrt(D(u) / 2H) dB(s) with u = x / sqrt(s).
The kernel advances all paths through one block of precomputed standard
normal draws; parallelism is across paths only, so results are identical
for any thread count.
"""

import math

import numpy as np
from numba import njit, prange

# Diffusion shape dispatch codes for the kernel.
KIND_CONSTANT = 0
KIND_AFFINE_UNIT = 1  # D(u)/2H = 1 + |u|
KIND_AFFINE_SCALED = 2  # D(u)/2H = (1 + |u|) * p0
KIND_TABULATED = 3  # D(u)/2H = interp(u) * p0, clamped at the table edges


@njit(parallel=True, cache=True)
def advance_block(x, s_nodes, i0, z, rec_rows, out, kind, p0, tab_u, tab_d):
    """Advance every path from node i0 through len(z) Euler steps.

    x        -- (n_paths,) current state, updated in place
    s_nodes  -- full array of transformed-time nodes
    z        -- (n_steps_in_block, n_paths) standard normal draws
    rec_rows -- per step, the output column to record after the step, or -1
    out      -- (n_paths, n_record) sample storage
    """
    n_paths = x.shape[0]
    m = z.shape[0]
    for j in prange(n_paths):
        xj = x[j]
        for k in range(m):
            s = s_nodes[i0 + k]
            ds = s_nodes[i0 + k + 1] - s
            if s > 0.0:
                u = xj / math.sqrt(s)
            else:
                u = 0.0
            if kind == KIND_CONSTANT:
                g = p0
            elif kind == KIND_AFFINE_UNIT:
                g = 1.0 + abs(u)
            elif kind == KIND_AFFINE_SCALED:
                g = (1.0 + abs(u)) * p0
            else:
                if u <= tab_u[0]:
                    g = tab_d[0] * p0
                elif u >= tab_u[-1]:
                    g = tab_d[-1] * p0
                else:
                    g = np.interp(u, tab_u, tab_d) * p0
            xj += math.sqrt(g * ds) * z[k, j]
            r = rec_rows[k]
            if r >= 0:
                out[j, r] = xj
        x[j] = xj
