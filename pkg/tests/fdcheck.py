"""Central finite-difference gradient oracle shared by the test modules."""

import numpy as np


def fd_grad(f, x, h=1e-6):
    """Central finite differences of the scalar f() wrt entries of x
    (mutated in place)."""
    g = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g


def assert_grad_close(analytic, fd, tol):
    analytic = np.asarray(analytic, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
    rel = np.max(np.abs(analytic - fd) / denom)
    assert rel <= tol, f"max relative gradient error {rel:.3e} > {tol:.1e}"
