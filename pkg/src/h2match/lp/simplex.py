"""Self-contained bounded-variable primal simplex.

Solves   min c'x  s.t.  A x {<=,>=,=} b,  l <= x <= u

with a revised simplex over the equality form ``A x + s = b`` where each
row's slack carries the sense in its bounds ([0,inf) for <=, (-inf,0] for
>=, [0,0] for =). A two-phase start builds an initial feasible basis from
the slack columns plus artificials for rows whose slack starts out of
range; phase 1 minimizes the artificial mass, phase 2 the real objective.

Duals follow the right-hand-side sensitivity convention for a
minimization: y_i = d(objective)/d(b_i). Binding >= rows therefore price
nonnegative and binding <= rows nonpositive. Reduced costs are the same
sensitivity with respect to a variable's active bound.

The basis inverse is kept dense and updated by rank-one pivots with
periodic refactorization, which is robust enough for the model sizes this
package builds (a few thousand rows). Geometric-mean equilibration with
power-of-two scale factors is applied by default so that hour-scale
coefficients and seven-figure penalty prices can coexist in one matrix;
powers of two keep the rescaling exact in binary floating point.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from dataclasses import dataclass, field
from typing import Optional, Sequence

__all__ = ["SimplexResult", "SolveError", "solve_lp"]

# column states
_BASIC = 0
_AT_LOWER = 1
_AT_UPPER = 2
_FREE = 3  # nonbasic free variable parked at zero
_FIXED = 4  # lb == ub, never eligible to enter

_REFACTOR_EVERY = 150
_DEGEN_BEFORE_BLAND = 120
_PIVOT_TOL = 1e-9
_PIVOT_RETRY_TOL = 1e-6  # refactor once, then reject columns pivoting below


class SolveError(RuntimeError):
    """The solver could not produce a usable result."""


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    objective: float
    x: np.ndarray  # structural variable values
    duals: np.ndarray  # one per row, d(obj)/d(rhs)
    reduced_costs: np.ndarray  # one per structural variable
    iterations: int
    max_violation: float = 0.0  # worst primal residual / bound breach


def _geometric_scaling(A: sp.csc_matrix, passes: int = 2):
    """Row/column equilibration factors rounded to powers of two."""
    m, n = A.shape
    r = np.ones(m)
    c = np.ones(n)
    work = A.copy().tocsr()
    for _ in range(passes):
        absw = abs(work)
        row_max = absw.max(axis=1).toarray().ravel()
        # min over nonzeros per row: mask zeros with +inf
        row_min = np.full(m, np.inf)
        wr = absw.tocsr()
        for i in range(m):
            seg = wr.data[wr.indptr[i]:wr.indptr[i + 1]]
            if seg.size:
                row_min[i] = seg.min()
        ok = np.isfinite(row_min) & (row_max > 0)
        ri = np.ones(m)
        ri[ok] = 1.0 / np.sqrt(row_max[ok] * row_min[ok])
        ri = np.exp2(np.round(np.log2(ri)))
        work = sp.diags(ri) @ work
        r *= ri

        absw = abs(work).tocsc()
        col_max = absw.max(axis=0).toarray().ravel()
        col_min = np.full(n, np.inf)
        for j in range(n):
            seg = absw.data[absw.indptr[j]:absw.indptr[j + 1]]
            if seg.size:
                col_min[j] = seg.min()
        ok = np.isfinite(col_min) & (col_max > 0)
        ci = np.ones(n)
        ci[ok] = 1.0 / np.sqrt(col_max[ok] * col_min[ok])
        ci = np.exp2(np.round(np.log2(ci)))
        work = (work.tocsc() @ sp.diags(ci)).tocsr()
        c *= ci
    return r, c


class _BoundedSimplex:
    def __init__(self, c, A, senses, b, lower, upper,
                 feas_tol, opt_tol, max_iterations):
        A = sp.csc_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n_struct = m, n
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_iterations = max_iterations

        # slack bounds encode each row's sense
        slack_lo = np.empty(m)
        slack_hi = np.empty(m)
        for i, s in enumerate(senses):
            if s == "<=":
                slack_lo[i], slack_hi[i] = 0.0, np.inf
            elif s == ">=":
                slack_lo[i], slack_hi[i] = -np.inf, 0.0
            elif s in ("=", "=="):
                slack_lo[i], slack_hi[i] = 0.0, 0.0
            else:
                raise ValueError(f"unknown sense {s!r}")

        self.A_struct = A
        self.b = np.asarray(b, dtype=float).copy()
        self.c_struct = np.asarray(c, dtype=float).copy()
        self.lb_struct = np.asarray(lower, dtype=float).copy()
        self.ub_struct = np.asarray(upper, dtype=float).copy()
        self.slack_lo, self.slack_hi = slack_lo, slack_hi

    def setup(self, scale: bool):
        m, n = self.m, self.n_struct
        if scale and self.A_struct.nnz:
            self.rscale, self.cscale = _geometric_scaling(self.A_struct)
        else:
            self.rscale = np.ones(m)
            self.cscale = np.ones(n)
        A = sp.diags(self.rscale) @ self.A_struct @ sp.diags(self.cscale)
        b = self.rscale * self.b
        cs = self.c_struct * self.cscale
        with np.errstate(invalid="ignore"):
            lb_s = self.lb_struct / self.cscale
            ub_s = self.ub_struct / self.cscale

        # initial nonbasic placement for structurals
        nb_val = np.where(np.isfinite(lb_s), lb_s,
                          np.where(np.isfinite(ub_s), ub_s, 0.0))
        status_s = np.where(np.isfinite(lb_s), _AT_LOWER,
                            np.where(np.isfinite(ub_s), _AT_UPPER, _FREE))
        status_s = np.where(np.isfinite(lb_s) & (lb_s == ub_s), _FIXED,
                            status_s)

        s0 = b - A @ nb_val
        art_cols_i: list[int] = []
        art_sign: list[float] = []
        basis = np.empty(m, dtype=np.int64)
        slack_val = np.empty(m)
        slack_status = np.empty(m, dtype=np.int64)
        for i in range(m):
            lo, hi = self.slack_lo[i], self.slack_hi[i]
            v = s0[i]
            if lo <= v <= hi:
                basis[i] = n + i
                slack_val[i] = v
                slack_status[i] = _BASIC
            else:
                clamped = min(max(v, lo), hi)
                slack_val[i] = clamped
                if lo == hi:
                    slack_status[i] = _FIXED
                elif clamped == lo:
                    slack_status[i] = _AT_LOWER
                else:
                    slack_status[i] = _AT_UPPER
                resid = v - clamped
                art_cols_i.append(i)
                art_sign.append(1.0 if resid > 0 else -1.0)
                basis[i] = -1  # placeholder, resolved below

        k = len(art_cols_i)
        n_total = n + m + k
        cols = [A, sp.identity(m, format="csc")]
        if k:
            art = sp.csc_matrix(
                (np.asarray(art_sign), (np.asarray(art_cols_i),
                                        np.arange(k))),
                shape=(m, k))
            cols.append(art)
        self.Acols = sp.hstack(cols, format="csc")
        self.AcolsT = self.Acols.T.tocsr()  # fast y @ Acols products

        self.lb = np.concatenate([lb_s, self.slack_lo, np.zeros(k)])
        self.ub = np.concatenate([ub_s, self.slack_hi,
                                  np.full(k, np.inf)])
        self.xval = np.concatenate([nb_val, slack_val, np.zeros(k)])
        self.status = np.concatenate([status_s, slack_status,
                                      np.full(k, _BASIC, dtype=np.int64)])
        self.art_start = n + m
        self.n_total = n_total
        self.b_scaled = b
        self.c_scaled = cs

        Binv = np.zeros((m, m))
        ai = 0
        for i in range(m):
            if basis[i] == -1:
                j = self.art_start + ai
                basis[i] = j
                self.xval[j] = abs(s0[i] - slack_val[i])
                Binv[i, i] = art_sign[ai]  # inverse of a signed unit column
                ai += 1
            else:
                Binv[i, i] = 1.0
        self.basis = basis
        self.Binv = Binv
        self.iterations = 0

    # -- core machinery ---------------------------------------------------

    def _refactor(self):
        Bd = self.Acols[:, self.basis].toarray()
        try:
            self.Binv = np.linalg.inv(Bd)
        except np.linalg.LinAlgError as exc:
            raise SolveError("basis matrix became singular") from exc
        self._recompute_basics()

    def _recompute_basics(self):
        mask = np.ones(self.n_total, dtype=bool)
        mask[self.basis] = False
        nb_idx = np.nonzero(mask)[0]
        rhs = self.b_scaled - self.Acols[:, nb_idx] @ self.xval[nb_idx]
        self.xval[self.basis] = self.Binv @ rhs

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        a = self.Acols
        lo, hi = a.indptr[j], a.indptr[j + 1]
        col[a.indices[lo:hi]] = a.data[lo:hi]
        return col

    def _loop(self, costs: np.ndarray) -> str:
        m = self.m
        degen_run = 0
        bland = False
        since_refactor = 0
        fresh = True  # Binv factored from scratch for the current basis
        banned = np.zeros(self.n_total, dtype=bool)
        banned_best = None  # (|pivot|, column) among banned candidates
        while True:
            if self.iterations >= self.max_iterations:
                return "iteration_limit"
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0
                fresh = True

            y = costs[self.basis] @ self.Binv
            rc = costs - self.AcolsT @ y
            rc[self.basis] = 0.0

            tol = self.opt_tol * (1.0 + np.abs(costs))
            can_up = ((self.status == _AT_LOWER) | (self.status == _FREE))
            can_dn = ((self.status == _AT_UPPER) | (self.status == _FREE))
            viol = np.where(can_up & (rc < -tol), -rc, 0.0)
            viol = np.maximum(viol, np.where(can_dn & (rc > tol), rc, 0.0))
            viol[banned] = 0.0
            eligible = np.nonzero(viol > 0.0)[0]
            forced = False
            if eligible.size == 0:
                if banned_best is None:
                    self._refactor()
                    return "optimal"
                # every improving column pivots on noise; take the least
                # bad one and refactor right after so the rank-1 update
                # off a near-dependent column cannot snowball
                j = banned_best[1]
                forced = True
            elif bland:
                j = int(eligible[0])
            else:
                j = int(eligible[np.argmax(viol[eligible])])
            direction = 1.0 if (rc[j] < 0.0) else -1.0

            alpha = self.Binv @ self._column(j)
            w = alpha * direction
            xb = self.xval[self.basis]
            lb_b = self.lb[self.basis]
            ub_b = self.ub[self.basis]

            # how far each basic variable allows the entering move
            theta = np.full(m, np.inf)
            dn = w > _PIVOT_TOL  # basic value falls toward its lower bound
            up = w < -_PIVOT_TOL
            theta[dn] = np.maximum(xb[dn] - lb_b[dn], 0.0) / w[dn]
            theta[up] = np.maximum(ub_b[up] - xb[up], 0.0) / (-w[up])

            theta_flip = self.ub[j] - self.lb[j]  # inf for one-sided bounds
            theta_min = min(theta.min() if m else np.inf, theta_flip)
            if not np.isfinite(theta_min):
                if not fresh:
                    # never trust an unbounded ray read off a stale inverse
                    self._refactor()
                    since_refactor = 0
                    fresh = True
                    continue
                return "unbounded"

            if theta_flip <= theta_min + self.feas_tol:
                # entering variable runs to its other bound; basis unchanged
                self.xval[self.basis] = xb - w * theta_flip
                self.xval[j] = self.ub[j] if direction > 0 else self.lb[j]
                self.status[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                degen_run = 0
                bland = False
                if banned_best is not None:
                    banned[:] = False
                    banned_best = None
                continue

            blocking = np.nonzero(theta <= theta_min + self.feas_tol)[0]
            if bland:
                r = int(blocking[np.argmin(self.basis[blocking])])
            else:
                r = int(blocking[np.argmax(np.abs(alpha[blocking]))])
            pivot = alpha[r]
            if abs(pivot) < _PIVOT_RETRY_TOL and not forced:
                # a tiny pivot off a stale inverse is usually accumulated
                # update noise; off a fresh factorization it means the
                # entering column is numerically dependent on the basis in
                # every blocking row, and pivoting there goes singular
                if not fresh:
                    self._refactor()
                    since_refactor = 0
                    fresh = True
                    continue
                banned[j] = True
                if banned_best is None or abs(pivot) > banned_best[0]:
                    banned_best = (abs(pivot), j)
                continue
            if forced:
                since_refactor = _REFACTOR_EVERY

            step = theta[r]
            self.xval[self.basis] = xb - w * step
            self.xval[j] += direction * step
            leaving = self.basis[r]
            if self.lb[leaving] == self.ub[leaving]:
                self.status[leaving] = _FIXED
                self.xval[leaving] = self.lb[leaving]
            elif w[r] > 0:
                self.status[leaving] = _AT_LOWER
                self.xval[leaving] = self.lb[leaving]
            else:
                self.status[leaving] = _AT_UPPER
                self.xval[leaving] = self.ub[leaving]
            self.basis[r] = j
            self.status[j] = _BASIC

            row_r = self.Binv[r, :] / pivot
            col = alpha.copy()
            col[r] = 0.0
            self.Binv -= np.outer(col, row_r)
            self.Binv[r, :] = row_r
            fresh = False
            if banned_best is not None:
                banned[:] = False
                banned_best = None

            if step <= self.feas_tol:
                degen_run += 1
                if degen_run >= _DEGEN_BEFORE_BLAND:
                    bland = True
            else:
                degen_run = 0
                bland = False

    def _drive_out_artificials(self):
        """Swap basic zero-valued artificials for structural/slack columns.

        Rows where no admissible pivot exists are linearly dependent; the
        artificial stays basic at zero and is harmless because every
        entering column has a zero component there.
        """
        for r in range(self.m):
            j = self.basis[r]
            if j < self.art_start:
                continue
            wrow = self.AcolsT @ self.Binv[r, :]
            wrow[self.basis] = 0.0
            wrow[self.art_start:] = 0.0
            # a fixed column brought into the basis would have its exact
            # bound value replaced by a recomputed one; never pick those
            wrow[self.status == _FIXED] = 0.0
            cand = np.nonzero(np.abs(wrow) > 1e-7)[0]
            if cand.size == 0:
                continue
            enter = int(cand[np.argmax(np.abs(wrow[cand]))])
            alpha = self.Binv @ self._column(enter)
            pivot = alpha[r]
            self.basis[r] = enter
            self.status[enter] = _BASIC
            self.status[j] = _FIXED
            self.xval[j] = 0.0
            row_r = self.Binv[r, :] / pivot
            col = alpha.copy()
            col[r] = 0.0
            self.Binv -= np.outer(col, row_r)
            self.Binv[r, :] = row_r

    def solve(self) -> SimplexResult:
        n, m = self.n_struct, self.m
        k = self.n_total - self.art_start

        if k:
            phase1 = np.zeros(self.n_total)
            phase1[self.art_start:] = 1.0
            status = self._loop(phase1)
            if status == "iteration_limit":
                return self._result(status)
            infeas = float(self.xval[self.art_start:].sum())
            if infeas > self.feas_tol * (1.0 + abs(self.b_scaled).max()
                                         if m else 1.0):
                return self._result("infeasible")
            self._drive_out_artificials()
            self.lb[self.art_start:] = 0.0
            self.ub[self.art_start:] = 0.0
            nb_art = (self.status[self.art_start:] != _BASIC)
            self.status[self.art_start:][nb_art] = _FIXED

        costs = np.zeros(self.n_total)
        costs[:n] = self.c_scaled
        status = self._loop(costs)
        return self._result(status)

    def _result(self, status: str) -> SimplexResult:
        n, m = self.n_struct, self.m
        costs = np.zeros(self.n_total)
        costs[:n] = self.c_scaled
        y_scaled = costs[self.basis] @ self.Binv
        rc_scaled = self.c_scaled - (self.AcolsT[:n] @ y_scaled)

        x = self.xval[:n] * self.cscale
        # pinned variables report their bound exactly, not a value that
        # went through the basis arithmetic
        pinned = self.lb_struct == self.ub_struct
        x[pinned] = self.lb_struct[pinned]
        y = y_scaled * self.rscale
        with np.errstate(invalid="ignore"):
            rc = np.where(self.cscale != 0, rc_scaled / self.cscale,
                          rc_scaled)
        objective = float(self.c_struct @ x) if status != "infeasible" \
            else float("nan")

        resid = self.Acols @ self.xval - self.b_scaled
        below = np.maximum(self.lb - self.xval, 0.0)
        above = np.maximum(self.xval - self.ub, 0.0)
        below[~np.isfinite(below)] = 0.0
        above[~np.isfinite(above)] = 0.0
        max_violation = float(max(np.abs(resid).max() if m else 0.0,
                                  below.max() if below.size else 0.0,
                                  above.max() if above.size else 0.0))
        return SimplexResult(status=status, objective=objective, x=x,
                             duals=y, reduced_costs=rc,
                             iterations=self.iterations,
                             max_violation=max_violation)


def solve_lp(c, A, senses: Sequence[str], b, lower, upper, *,
             feas_tol: float = 1e-7, opt_tol: float = 1e-7,
             max_iterations: Optional[int] = None,
             scale: bool = True) -> SimplexResult:
    """Solve min c'x subject to A x {<=,>=,=} b and l <= x <= u.

    ``senses`` holds one of "<=", ">=", "=" per row. ``lower``/``upper``
    may contain ``-inf``/``inf``. Returns a :class:`SimplexResult`; raises
    :class:`SolveError` only for structural problems (singular basis,
    malformed input), never for infeasible/unbounded models.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    A = sp.csc_matrix(A, dtype=float)
    if A.shape != (b.size, c.size):
        raise SolveError(f"shape mismatch: A is {A.shape}, expected "
                         f"({b.size}, {c.size})")
    if len(senses) != b.size:
        raise SolveError("one sense per row required")
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if np.any(lower > upper):
        # a variable with crossed bounds can never take a value
        bad = int(np.argmax(lower > upper))
        return SimplexResult(status="infeasible", objective=float("nan"),
                             x=np.full(c.size, np.nan),
                             duals=np.zeros(b.size),
                             reduced_costs=np.zeros(c.size), iterations=0)
    if max_iterations is None:
        max_iterations = max(5000, 50 * (b.size + c.size))

    solver = _BoundedSimplex(c, A, senses, b, lower, upper,
                             feas_tol, opt_tol, max_iterations)
    solver.setup(scale=scale)
    return solver.solve()
