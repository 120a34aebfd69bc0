"""Pure-Python/numpy versions of the DP kernels.

Every floating-point operation here is mirrored, in the same order, by
``_kernels.pyx`` so both backends produce bit-identical values. Keep them in
sync when editing either.

Action codes: 0 = hold, 1 = fill, 1 + n = generate with n turbines.
"""

from __future__ import annotations

import math

import numpy as np

NEG_INF = -math.inf


def step(p, z: float, t: int, a: int):
    """One transition from level ``z`` at step ``t``; None when infeasible.

    ``p`` is a KernelProblem. Returns ``(z_next, energy_mwh)``.
    """
    zout = p.zout
    h = z - zout[t]
    if h < p.h_lo or h > p.h_hi:
        return None
    if a == 0:
        q = 0.0
        e = 0.0
    elif a == 1:
        q = p.n_sluices * (p.c_sluice * h) + p.n_turbines * (p.c_turbine * h)
        e = 0.0
    else:
        if h < p.h_min:
            return None
        n = float(a - 1)
        bp = p.bp
        k = 0
        last = len(bp) - 2
        while k < last and h >= bp[k + 1]:
            k += 1
        q = n * (p.flow_a[k] + p.flow_b[k] * h)
        power = n * (p.power_a[k] + p.power_b[k] * h)
        e = power * p.dt_s / 3600.0
    zn = z - q * p.dt_s / p.area
    hn = zn - zout[t + 1]
    if hn < p.h_lo or hn > p.h_hi:
        return None
    return zn, e


def grid_index(p, z: float) -> int:
    return p.j0 + int(math.floor((z - p.z_ref) / p.dz + 0.5))


def dp_backward(p):
    """Backward induction over the level grid.

    Returns ``(values, policy, n_transitions)`` where ``values`` has shape
    (T+1, N) and ``policy`` (T, N) holds the first maximising action
    (-1 where no feasible action exists).
    """
    T, N, A = p.n_steps, p.n_states, p.n_actions
    values = np.full((T + 1, N), NEG_INF)
    values[T, :] = 0.0
    policy = np.full((T, N), -1, dtype=np.int64)
    z = p.z_ref + (np.arange(N, dtype=np.int64) - p.j0).astype(float) * p.dz
    interior = np.asarray(p.bp[1:-1])
    n_transitions = 0
    for t in range(T - 1, -1, -1):
        h = z - p.zout[t]
        start_ok = (h >= p.h_lo) & (h <= p.h_hi)
        k = np.searchsorted(interior, h, side="right")
        seg_flow = np.asarray(p.flow_a)[k] + np.asarray(p.flow_b)[k] * h
        seg_power = np.asarray(p.power_a)[k] + np.asarray(p.power_b)[k] * h
        best = np.full(N, NEG_INF)
        best_a = np.full(N, -1, dtype=np.int64)
        v_next = values[t + 1]
        w = p.weights[t]
        for a in range(A):
            if a == 0:
                q = np.zeros(N)
                e = np.zeros(N)
                ok = start_ok
            elif a == 1:
                q = p.n_sluices * (p.c_sluice * h) + p.n_turbines * (p.c_turbine * h)
                e = np.zeros(N)
                ok = start_ok
            else:
                n = float(a - 1)
                q = n * seg_flow
                e = (n * seg_power) * p.dt_s / 3600.0
                ok = start_ok & (h >= p.h_min)
            zn = z - q * p.dt_s / p.area
            hn = zn - p.zout[t + 1]
            ok = ok & (hn >= p.h_lo) & (hn <= p.h_hi)
            jn = p.j0 + np.floor((zn - p.z_ref) / p.dz + 0.5).astype(np.int64)
            ok = ok & (jn >= 0) & (jn < N)
            n_transitions += int(np.count_nonzero(start_ok))
            cont = np.full(N, NEG_INF)
            cont[ok] = v_next[jn[ok]]
            ok = ok & (cont != NEG_INF)
            val = w * e + cont
            better = ok & (val > best)
            best[better] = val[better]
            best_a[better] = a
        values[t] = best
        policy[t] = best_a
    return values, policy, n_transitions


def enumerate_best(p, start_index: int):
    """Depth-first search over every action sequence on the grid.

    Sequences are visited in lexicographic action order and only a strictly
    better total replaces the incumbent, which reproduces the DP tie-break.
    Totals are summed back to front, matching the DP recursion.
    Returns ``(best_value, best_actions or None, n_leaves)``.
    """
    T, A = p.n_steps, p.n_actions
    rewards = [0.0] * T
    actions = [0] * T
    best = [NEG_INF, None, 0]

    def visit(t: int, j: int):
        if t == T:
            best[2] += 1
            total = 0.0
            for s in range(T - 1, -1, -1):
                total = rewards[s] + total
            if total > best[0]:
                best[0] = total
                best[1] = list(actions)
            return
        z = p.z_ref + float(j - p.j0) * p.dz
        for a in range(A):
            nxt = step(p, z, t, a)
            if nxt is None:
                continue
            jn = grid_index(p, nxt[0])
            if jn < 0 or jn >= p.n_states:
                continue
            rewards[t] = p.weights[t] * nxt[1]
            actions[t] = a
            visit(t + 1, jn)

    visit(0, start_index)
    return best[0], best[1], best[2]
