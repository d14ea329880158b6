# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Newmark time loop for the pentadiagonal beam system."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _ldl_factor(double[:, ::1] ab, double[::1] D, double[::1] l1, double[::1] l2):
    # ab is scipy upper banded storage with two super-diagonals
    cdef Py_ssize_t n = ab.shape[1]
    cdef Py_ssize_t j
    cdef double s
    for j in range(n):
        s = ab[2, j]
        if j >= 1:
            s -= l1[j] * l1[j] * D[j - 1]
        if j >= 2:
            s -= l2[j] * l2[j] * D[j - 2]
        D[j] = s
        if j + 1 < n:
            s = ab[1, j + 1]
            if j >= 1:
                s -= l2[j + 1] * l1[j] * D[j - 1]
            l1[j + 1] = s / D[j]
        if j + 2 < n:
            l2[j + 2] = ab[0, j + 2] / D[j]


cdef void _ldl_solve(double[::1] D, double[::1] l1, double[::1] l2, double[::1] x):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t i
    for i in range(1, n):
        x[i] -= l1[i] * x[i - 1]
        if i >= 2:
            x[i] -= l2[i] * x[i - 2]
    for i in range(n):
        x[i] /= D[i]
    for i in range(n - 2, -1, -1):
        x[i] -= l1[i + 1] * x[i + 1]
        if i + 2 < n:
            x[i] -= l2[i + 2] * x[i + 2]


def run_newmark(keff_ab, mass, load, u, w0, v0, a0,
                double dt, double beta, double gamma, Py_ssize_t stride):
    """Advance M a + K w = load * u over len(u) - 1 steps.

    Returns (snapshot_steps, snapshots, w, v, a, first_node_history).
    """
    cdef double[:, ::1] ab = np.ascontiguousarray(keff_ab, dtype=np.float64)
    cdef double[::1] m = np.ascontiguousarray(mass, dtype=np.float64)
    cdef double[::1] f = np.ascontiguousarray(load, dtype=np.float64)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t nsteps = uu.shape[0] - 1
    cdef double[::1] w = np.array(w0, dtype=np.float64)
    cdef double[::1] v = np.array(v0, dtype=np.float64)
    cdef double[::1] a = np.array(a0, dtype=np.float64)
    cdef double[::1] x = np.empty(n)
    cdef double[::1] D = np.empty(n)
    cdef double[::1] l1 = np.zeros(n)
    cdef double[::1] l2 = np.zeros(n)
    cdef double c0 = 1.0 / (beta * dt * dt)
    cdef double c2 = 1.0 / (beta * dt)
    cdef double c3 = 1.0 / (2.0 * beta) - 1.0
    cdef double c6 = dt * (1.0 - gamma)
    cdef double c7 = dt * gamma
    cdef double anew
    cdef Py_ssize_t step, i, k
    _ldl_factor(ab, D, l1, l2)

    nsnap = nsteps // stride + 1 + (1 if nsteps % stride else 0)
    snaps_np = np.empty((nsnap, n))
    steps_np = np.empty(nsnap, dtype=np.int64)
    hist_np = np.empty(nsteps + 1)
    cdef double[:, ::1] snaps = snaps_np
    cdef long long[::1] steps = steps_np
    cdef double[::1] hist = hist_np

    snaps[0, :] = w
    steps[0] = 0
    hist[0] = w[0]
    k = 1
    for step in range(1, nsteps + 1):
        for i in range(n):
            x[i] = f[i] * uu[step] + m[i] * (c0 * w[i] + c2 * v[i] + c3 * a[i])
        _ldl_solve(D, l1, l2, x)
        for i in range(n):
            anew = c0 * (x[i] - w[i]) - c2 * v[i] - c3 * a[i]
            v[i] = v[i] + c6 * a[i] + c7 * anew
            a[i] = anew
            w[i] = x[i]
        hist[step] = w[0]
        if step % stride == 0 or step == nsteps:
            snaps[k, :] = w
            steps[k] = step
            k += 1
    return steps_np[:k], snaps_np[:k], np.asarray(w), np.asarray(v), np.asarray(a), hist_np
