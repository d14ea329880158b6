"""Pure-Python Newmark time loop (numpy + scipy banded Cholesky)."""
import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded


def run_newmark(keff_ab, mass, load, u, w0, v0, a0, dt, beta, gamma, stride):
    """Advance M a + K w = load * u over len(u) - 1 steps.

    Returns (snapshot_steps, snapshots, w, v, a, first_node_history).
    """
    chol = cholesky_banded(np.asarray(keff_ab, dtype=float), lower=False)
    m = np.asarray(mass, dtype=float)
    f = np.asarray(load, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.array(w0, dtype=float)
    v = np.array(v0, dtype=float)
    a = np.array(a0, dtype=float)
    c0 = 1.0 / (beta * dt * dt)
    c2 = 1.0 / (beta * dt)
    c3 = 1.0 / (2.0 * beta) - 1.0
    c6 = dt * (1.0 - gamma)
    c7 = dt * gamma
    nsteps = len(u) - 1
    steps, snaps = [0], [w.copy()]
    hist = np.empty(nsteps + 1)
    hist[0] = w[0]
    for step in range(1, nsteps + 1):
        rhs = f * u[step] + m * (c0 * w + c2 * v + c3 * a)
        w_new = cho_solve_banded((chol, False), rhs, check_finite=False)
        a_new = c0 * (w_new - w) - c2 * v - c3 * a
        v = v + c6 * a + c7 * a_new
        a, w = a_new, w_new
        hist[step] = w[0]
        if step % stride == 0 or step == nsteps:
            steps.append(step)
            snaps.append(w.copy())
    return np.array(steps, dtype=np.int64), np.array(snaps), w, v, a, hist
