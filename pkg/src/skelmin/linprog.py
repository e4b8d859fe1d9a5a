"""Dense two-phase simplex solver for the small LPs used by the geometry layer.

Problems here have at most a few dozen variables and rows (Chebyshev centers,
constraint-redundancy probes, relative-interior intersection tests), so a
plain tableau with Bland's rule is adequate and keeps the geometric kernel
free of solver dependencies.
"""

from dataclasses import dataclass

import numpy as np

_PIVOT_EPS = 1e-11
_COST_EPS = 1e-11


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    value: float | None


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, maximize=True):
    """Optimize c.x over free variables with A_ub x <= b_ub and A_eq x = b_eq."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = []
    rhs = []
    n_slack = 0
    if A_ub is not None and len(A_ub):
        A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
        b_ub = np.asarray(b_ub, dtype=float).ravel()
        n_slack = A_ub.shape[0]
    if A_eq is not None and len(A_eq):
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.asarray(b_eq, dtype=float).ravel()

    # variables: u (n), v (n), slacks (n_slack); x = u - v
    def split(row):
        return np.concatenate([row, -row])

    if A_ub is not None and len(A_ub):
        for i in range(A_ub.shape[0]):
            r = np.zeros(2 * n + n_slack)
            r[: 2 * n] = split(A_ub[i])
            r[2 * n + i] = 1.0
            rows.append(r)
            rhs.append(b_ub[i])
    if A_eq is not None and len(A_eq):
        for i in range(A_eq.shape[0]):
            r = np.zeros(2 * n + n_slack)
            r[: 2 * n] = split(A_eq[i])
            rows.append(r)
            rhs.append(b_eq[i])

    obj = np.concatenate([c, -c, np.zeros(n_slack)])
    if not maximize:
        obj = -obj

    if not rows:
        # unconstrained: bounded only if objective is zero
        if np.all(np.abs(obj) <= _COST_EPS):
            x = np.zeros(n)
            return LPResult("optimal", x, 0.0)
        return LPResult("unbounded", None, None)

    M = np.array(rows, dtype=float)
    b = np.array(rhs, dtype=float)
    neg = b < 0
    M[neg] *= -1.0
    b[neg] *= -1.0
    m, nv = M.shape

    # phase 1 tableau with artificials
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = M
    T[:m, nv : nv + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(nv, nv + m))
    # phase-1 objective: minimize sum of artificials -> row = -sum of rows
    T[m, :] = -T[:m, :].sum(axis=0)
    T[m, nv : nv + m] = 0.0

    def pivot(row, col):
        T[row, :] /= T[row, col]
        for r in range(m + 1):
            if r != row and abs(T[r, col]) > 0.0:
                T[r, :] -= T[r, col] * T[row, :]
        basis[row] = col

    def run_simplex(allowed_cols):
        while True:
            # Bland: smallest-index column with negative reduced cost
            col = -1
            for j in allowed_cols:
                if T[m, j] < -_COST_EPS:
                    col = j
                    break
            if col < 0:
                return "optimal"
            ratios = []
            for r in range(m):
                if T[r, col] > _PIVOT_EPS:
                    ratios.append((T[r, -1] / T[r, col], basis[r], r))
            if not ratios:
                return "unbounded"
            ratios.sort(key=lambda t: (t[0], t[1]))
            pivot(ratios[0][2], col)

    status = run_simplex(range(nv + m))
    if status != "optimal" or T[m, -1] < -1e-8:
        return LPResult("infeasible", None, None)

    # drive remaining artificial columns out of the basis where possible
    for r in range(m):
        if basis[r] >= nv:
            for j in range(nv):
                if abs(T[r, j]) > _PIVOT_EPS:
                    pivot(r, j)
                    break

    # phase 2: rebuild objective row in terms of the current basis
    T[m, :] = 0.0
    T[m, :nv] = -obj
    for r in range(m):
        coeff = T[m, basis[r]]
        if abs(coeff) > 0.0:
            T[m, :] -= coeff * T[r, :]
    # forbid re-entering artificial columns
    status = run_simplex(range(nv))
    if status == "unbounded":
        return LPResult("unbounded", None, None)

    y = np.zeros(nv + m)
    for r in range(m):
        y[basis[r]] = T[r, -1]
    x = y[:n] - y[n : 2 * n]
    return LPResult("optimal", x, float(c @ x))


def chebyshev_center(A, b):
    """Center and radius of the largest ball inscribed in {x : A x <= b}.

    Rows of A must be unit vectors. Returns (center, radius); radius may be 0
    for degenerate (lower-dimensional) regions.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    m, k = A.shape
    if k == 0:
        return np.zeros(0), 0.0
    # variables (x, r): maximize r s.t. a_i.x + r <= b_i, r >= 0
    c = np.zeros(k + 1)
    c[-1] = 1.0
    A_ub = np.zeros((m + 1, k + 1))
    A_ub[:m, :k] = A
    A_ub[:m, k] = 1.0
    A_ub[m, k] = -1.0
    b_ub = np.concatenate([b, [0.0]])
    res = solve_lp(c, A_ub=A_ub, b_ub=b_ub, maximize=True)
    if res.status != "optimal":
        raise ValueError(f"chebyshev_center: LP {res.status}")
    return res.x[:k], float(res.value)
