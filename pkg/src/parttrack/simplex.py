"""Dense bounded-variable primal simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and ``lower <= x <= upper`` with finite bounds. Nonbasic variables sit at
either bound, so box constraints never become tableau rows. Entering and
leaving variables follow Bland's smallest-index rule, which rules out
cycling on the degenerate vertices that assignment polytopes are full of.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

COST_TOL = 1e-9
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    fun: float
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, T, xB, basis, ub, at_upper):
        self.T = T
        self.xB = xB
        self.basis = basis
        self.ub = ub
        self.at_upper = at_upper
        self.iterations = 0

    def value(self, j: int) -> float:
        return self.ub[j] if self.at_upper[j] else 0.0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def run(self, cost: np.ndarray, max_iter: int) -> str:
        T, ub = self.T, self.ub
        n = T.shape[1]
        nonbasic = np.ones(n, dtype=bool)
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError("simplex iteration limit reached")
            nonbasic[:] = True
            nonbasic[self.basis] = False
            d = cost - cost[self.basis] @ T
            improve_up = nonbasic & ~self.at_upper & (d < -COST_TOL) & (ub > 0)
            improve_down = nonbasic & self.at_upper & (d > COST_TOL)
            candidates = np.flatnonzero(improve_up | improve_down)
            if candidates.size == 0:
                return OPTIMAL
            j = int(candidates[0])
            s = -1.0 if self.at_upper[j] else 1.0
            alpha = s * T[:, j]

            best_t = ub[j]
            leave_row = -1
            leave_var = j
            for i in np.flatnonzero(np.abs(alpha) > PIVOT_TOL):
                var = self.basis[i]
                if alpha[i] > 0:
                    t = max(self.xB[i], 0.0) / alpha[i]
                elif np.isfinite(ub[var]):
                    t = max(ub[var] - self.xB[i], 0.0) / -alpha[i]
                else:
                    continue
                if t < best_t - 1e-12 or (abs(t - best_t) <= 1e-12 and var < leave_var):
                    best_t, leave_row, leave_var = t, int(i), var
            if not np.isfinite(best_t):
                return UNBOUNDED
            self.iterations += 1
            self.xB -= best_t * alpha
            if leave_row < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = self.value(j) + s * best_t
            leaving_to_upper = alpha[leave_row] < 0
            self.pivot(leave_row, j)
            self.at_upper[j] = False
            self.at_upper[leave_var] = leaving_to_upper
            self.xB[leave_row] = entering_value


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lower=None, upper=None, max_iter=None) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(b_ub.size, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(b_eq.size, n)
    lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    upper = np.ones(n) if upper is None else np.asarray(upper, dtype=float)
    if np.any(upper < lower - FEAS_TOL):
        return LPResult(INFEASIBLE, None, np.inf, 0)

    # shift to 0 <= y <= width and drop fixed columns
    width = np.maximum(upper - lower, 0.0)
    free = np.flatnonzero(width > 0)
    rhs_ub = b_ub - A_ub @ lower
    rhs_eq = b_eq - A_eq @ lower
    Aub = A_ub[:, free]
    Aeq = A_eq[:, free]

    keep_ub = np.any(np.abs(Aub) > 0, axis=1)
    keep_eq = np.any(np.abs(Aeq) > 0, axis=1)
    if np.any(rhs_ub[~keep_ub] < -FEAS_TOL) or np.any(np.abs(rhs_eq[~keep_eq]) > FEAS_TOL):
        return LPResult(INFEASIBLE, None, np.inf, 0)
    Aub, rhs_ub = Aub[keep_ub], rhs_ub[keep_ub]
    Aeq, rhs_eq = Aeq[keep_eq], rhs_eq[keep_eq]

    k = free.size
    m_ub, m_eq = len(rhs_ub), len(rhs_eq)
    m = m_ub + m_eq
    if m == 0:
        # only box constraints: each variable sits at its cheaper bound
        y = np.where(c[free] < 0, width[free], 0.0)
        x = lower.copy()
        x[free] += y
        return LPResult(OPTIMAL, x, float(c @ x), 0)

    flip_ub = rhs_ub < 0
    need_art = np.concatenate([flip_ub, np.ones(m_eq, dtype=bool)])
    art_rows = np.flatnonzero(need_art)
    n_art = art_rows.size
    ntot = k + m_ub + n_art

    T = np.zeros((m, ntot))
    T[:m_ub, :k] = Aub
    T[:m_ub, k:k + m_ub] = np.eye(m_ub)
    T[m_ub:, :k] = Aeq
    rhs = np.concatenate([rhs_ub, rhs_eq])
    sign = np.where(rhs < 0, -1.0, 1.0)
    T *= sign[:, None]
    rhs = rhs * sign
    basis = np.empty(m, dtype=int)
    for i in range(m_ub):
        basis[i] = k + i
    for a, i in enumerate(art_rows):
        T[i, k + m_ub + a] = 1.0
        basis[i] = k + m_ub + a

    ub = np.concatenate([width[free], np.full(m_ub, np.inf), np.full(n_art, np.inf)])
    tab = _Tableau(T, rhs.copy(), basis, ub, np.zeros(ntot, dtype=bool))
    limit = max_iter or 50 * (m + ntot) + 1000

    if n_art:
        phase1 = np.zeros(ntot)
        phase1[k + m_ub:] = 1.0
        tab.run(phase1, limit)
        art_mask = tab.basis >= k + m_ub
        if tab.xB[art_mask].sum() > FEAS_TOL * max(1.0, np.abs(rhs).max()):
            return LPResult(INFEASIBLE, None, np.inf, tab.iterations)
        # drive zero-valued artificials out of the basis where possible
        for r in np.flatnonzero(art_mask):
            row = np.abs(tab.T[r, :k + m_ub])
            row[tab.basis[tab.basis < k + m_ub]] = 0.0
            cands = np.flatnonzero(row > PIVOT_TOL)
            if cands.size:
                j = int(cands[0])
                value = tab.value(j)
                tab.pivot(r, j)
                tab.at_upper[j] = False
                tab.xB[r] = value
        tab.ub[k + m_ub:] = 0.0
        tab.at_upper[k + m_ub:] = False

    phase2 = np.zeros(ntot)
    phase2[:k] = c[free]
    status = tab.run(phase2, limit)
    if status != OPTIMAL:
        return LPResult(status, None, -np.inf, tab.iterations)

    y = np.where(tab.at_upper[:k], ub[:k], 0.0)
    basic_struct = tab.basis < k
    y[tab.basis[basic_struct]] = tab.xB[basic_struct]
    y = np.clip(y, 0.0, width[free])
    x = lower.copy()
    x[free] += y
    return LPResult(OPTIMAL, x, float(c @ x), tab.iterations)
