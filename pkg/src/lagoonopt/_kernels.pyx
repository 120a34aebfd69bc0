# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DP kernels.

Mirrors ``_kernels_py`` operation for operation; the build disables FP
contraction so results are bit-identical to the numpy fallback.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY

cnp.import_array()


cdef struct Problem:
    double *zout
    double *weights
    double *bp
    double *flow_a
    double *flow_b
    double *power_a
    double *power_b
    int n_seg
    int n_steps
    int n_states
    int n_actions
    int j0
    double z_ref
    double dz
    double h_lo
    double h_hi
    double h_min
    double dt_s
    double area
    double c_sluice
    double c_turbine
    double n_sluices
    double n_turbines


cdef inline bint _step(Problem *p, double z, int t, int a, double *zn_out, double *e_out) nogil:
    cdef double h = z - p.zout[t]
    cdef double q, e, n, power, zn, hn
    cdef int k
    if h < p.h_lo or h > p.h_hi:
        return 0
    if a == 0:
        q = 0.0
        e = 0.0
    elif a == 1:
        q = p.n_sluices * (p.c_sluice * h) + p.n_turbines * (p.c_turbine * h)
        e = 0.0
    else:
        if h < p.h_min:
            return 0
        n = <double>(a - 1)
        k = 0
        while k < p.n_seg - 1 and h >= p.bp[k + 1]:
            k += 1
        q = n * (p.flow_a[k] + p.flow_b[k] * h)
        power = n * (p.power_a[k] + p.power_b[k] * h)
        e = power * p.dt_s / 3600.0
    zn = z - q * p.dt_s / p.area
    hn = zn - p.zout[t + 1]
    if hn < p.h_lo or hn > p.h_hi:
        return 0
    zn_out[0] = zn
    e_out[0] = e
    return 1


cdef inline int _grid_index(Problem *p, double z) nogil:
    return p.j0 + <int>floor((z - p.z_ref) / p.dz + 0.5)


cdef inline bint _start_ok(Problem *p, double z, int t) nogil:
    cdef double h = z - p.zout[t]
    return not (h < p.h_lo or h > p.h_hi)


cdef Problem _unpack(object prob, double[::1] zout, double[::1] weights, double[::1] bp,
                     double[::1] fa, double[::1] fb, double[::1] pa, double[::1] pb):
    cdef Problem p
    p.zout = &zout[0]
    p.weights = &weights[0]
    p.bp = &bp[0]
    p.flow_a = &fa[0]
    p.flow_b = &fb[0]
    p.power_a = &pa[0]
    p.power_b = &pb[0]
    p.n_seg = fa.shape[0]
    p.n_steps = prob.n_steps
    p.n_states = prob.n_states
    p.n_actions = prob.n_actions
    p.j0 = prob.j0
    p.z_ref = prob.z_ref
    p.dz = prob.dz
    p.h_lo = prob.h_lo
    p.h_hi = prob.h_hi
    p.h_min = prob.h_min
    p.dt_s = prob.dt_s
    p.area = prob.area
    p.c_sluice = prob.c_sluice
    p.c_turbine = prob.c_turbine
    p.n_sluices = prob.n_sluices
    p.n_turbines = prob.n_turbines
    return p


def _arrays(prob):
    return (np.ascontiguousarray(prob.zout, dtype=np.float64),
            np.ascontiguousarray(prob.weights, dtype=np.float64),
            np.ascontiguousarray(prob.bp, dtype=np.float64),
            np.ascontiguousarray(prob.flow_a, dtype=np.float64),
            np.ascontiguousarray(prob.flow_b, dtype=np.float64),
            np.ascontiguousarray(prob.power_a, dtype=np.float64),
            np.ascontiguousarray(prob.power_b, dtype=np.float64))


def step(prob, double z, int t, int a):
    zout, weights, bp, fa, fb, pa, pb = _arrays(prob)
    cdef Problem p = _unpack(prob, zout, weights, bp, fa, fb, pa, pb)
    cdef double zn, e
    if not _step(&p, z, t, a, &zn, &e):
        return None
    return zn, e


def grid_index(prob, double z):
    zout, weights, bp, fa, fb, pa, pb = _arrays(prob)
    cdef Problem p = _unpack(prob, zout, weights, bp, fa, fb, pa, pb)
    return _grid_index(&p, z)


def dp_backward(prob):
    zout, weights, bp, fa, fb, pa, pb = _arrays(prob)
    cdef Problem p = _unpack(prob, zout, weights, bp, fa, fb, pa, pb)
    cdef int T = p.n_steps, N = p.n_states, A = p.n_actions
    values_arr = np.full((T + 1, N), -np.inf)
    values_arr[T, :] = 0.0
    policy_arr = np.full((T, N), -1, dtype=np.int64)
    cdef double[:, ::1] values = values_arr
    cdef cnp.int64_t[:, ::1] policy = policy_arr
    cdef int t, j, a, jn, best_a
    cdef double z, zn, e, v, val, best, w
    cdef long long n_transitions = 0
    with nogil:
        for t in range(T - 1, -1, -1):
            w = p.weights[t]
            for j in range(N):
                z = p.z_ref + <double>(j - p.j0) * p.dz
                if _start_ok(&p, z, t):
                    n_transitions += A
                best = -INFINITY
                best_a = -1
                for a in range(A):
                    if not _step(&p, z, t, a, &zn, &e):
                        continue
                    jn = _grid_index(&p, zn)
                    if jn < 0 or jn >= N:
                        continue
                    v = values[t + 1, jn]
                    if v == -INFINITY:
                        continue
                    val = w * e + v
                    if val > best:
                        best = val
                        best_a = a
                values[t, j] = best
                policy[t, j] = best_a
    return values_arr, policy_arr, int(n_transitions)


def enumerate_best(prob, int start_index):
    zout, weights, bp, fa, fb, pa, pb = _arrays(prob)
    cdef Problem p = _unpack(prob, zout, weights, bp, fa, fb, pa, pb)
    cdef int T = p.n_steps, A = p.n_actions, N = p.n_states
    cdef cnp.int64_t[::1] actions = np.zeros(T, dtype=np.int64)
    cdef cnp.int64_t[::1] best_actions = np.zeros(T, dtype=np.int64)
    cdef cnp.int64_t[::1] states = np.zeros(T + 1, dtype=np.int64)
    cdef double[::1] rewards = np.zeros(max(T, 1), dtype=np.float64)
    # next action to try at each depth
    cdef cnp.int64_t[::1] cursor = np.zeros(T + 1, dtype=np.int64)
    cdef double best = -INFINITY, total, z, zn, e
    cdef bint found = 0
    cdef long long leaves = 0
    cdef int depth = 0, a, jn, s
    states[0] = start_index
    with nogil:
        while depth >= 0:
            if depth == T:
                leaves += 1
                total = 0.0
                for s in range(T - 1, -1, -1):
                    total = rewards[s] + total
                if total > best:
                    best = total
                    found = 1
                    for s in range(T):
                        best_actions[s] = actions[s]
                depth -= 1
                continue
            a = cursor[depth]
            if a >= A:
                cursor[depth] = 0
                depth -= 1
                continue
            cursor[depth] = a + 1
            z = p.z_ref + <double>(states[depth] - p.j0) * p.dz
            if not _step(&p, z, depth, a, &zn, &e):
                continue
            jn = _grid_index(&p, zn)
            if jn < 0 or jn >= N:
                continue
            rewards[depth] = p.weights[depth] * e
            actions[depth] = a
            states[depth + 1] = jn
            depth += 1
    if not found:
        return best, None, int(leaves)
    return best, [int(x) for x in best_actions], int(leaves)
