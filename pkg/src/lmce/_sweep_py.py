"""Pure-NumPy twin of the compiled sweep kernel.

Same contract as ``lmce._sweep``: Jacobi sweeps of the monotone wide-stencil
update u <- u + tau * (arctan(min_d Delta_d u) + arctan(max_d Delta_d u) - c),
where Delta_d is the precomputed directional second difference
    Delta_d(u)_i = sum_k w[i,d,k] * u[idx[i,d,k]] + const[i,d] - centerw[i,d] * u_i
with idx = -1 marking unused weight slots.
"""

import numpy as np

BACKEND = "numpy"


def _gathered(u, idx, w):
    up = np.append(u, 0.0)  # idx == -1 gathers the zero pad (weights are 0 there)
    return np.einsum("nmk,nmk->nm", w, up[idx])


def delta_minmax(u, idx, w, const, centerw):
    vals = _gathered(u, idx, w) + const - centerw * u[:, None]
    return vals.min(axis=1), vals.max(axis=1)


def sweep_block(u, tau, c, idx, w, const, centerw, max_sweeps, tol_update):
    u = u.copy()
    hist = np.empty((max_sweeps, 3))
    done = 0
    for s in range(max_sweeps):
        dmin, dmax = delta_minmax(u, idx, w, const, centerw)
        upd = tau * (np.arctan(dmin) + np.arctan(dmax) - c)
        u += upd
        hist[s, 0] = np.abs(upd).max()
        hist[s, 1] = upd.min()
        hist[s, 2] = upd.max()
        done = s + 1
        if hist[s, 0] <= tol_update:
            break
    return u, done, hist[:done].copy()
