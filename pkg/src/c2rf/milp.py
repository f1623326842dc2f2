"""Generic MILP container, bounded-variable simplex LP solver, and MPS interchange.

The solver is a dense bounded-variable primal simplex: all structural
variables and row activities carry (possibly infinite) lower/upper bounds,
rows are handled through boxed logical slacks, and a composite phase 1
drives the sum of bound violations of the basic variables to zero before
phase 2 minimizes the objective.  No presolve happens at this layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

BOUND_TOL = 1e-7  # feasibility comparisons against variable/row bounds
PIVOT_TOL = 1e-9  # entries smaller than this never pivot
RATE_TOL = 1e-9  # reduced-cost / descent-rate threshold
DEGEN_STREAK = 30  # degenerate steps before switching to Bland's rule
REFACTOR_EVERY = 64  # pivots between fresh basis inversions

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
NB_FREE = 3  # nonbasic free variable, parked at value 0


class LpError(Exception):
    """Numerical breakdown in the simplex loop."""


@dataclass
class Variable:
    name: str
    lower: float
    upper: float
    integral: bool = False


@dataclass
class Constraint:
    """Sparse row with activity bounds lower <= a.x <= upper."""

    name: str
    indices: list
    coeffs: list
    lower: float = -INF
    upper: float = INF


@dataclass
class MilpModel:
    variables: list
    constraints: list
    objective: dict  # var index -> coefficient, minimization
    name: str = "MODEL"
    metadata: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def integral_indices(self) -> list:
        return [j for j, v in enumerate(self.variables) if v.integral]

    def dense_matrix(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_vars))
        for i, row in enumerate(self.constraints):
            for j, a in zip(row.indices, row.coeffs):
                A[i, j] = a
        return A

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def bounds_arrays(self):
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        rlo = np.array([r.lower for r in self.constraints], dtype=float)
        rhi = np.array([r.upper for r in self.constraints], dtype=float)
        return lo, hi, rlo, rhi

    def solver_arrays(self):
        """Dense matrix / objective / bounds, cached; callers must not mutate."""
        cached = getattr(self, "_solver_arrays", None)
        if cached is None:
            cached = (self.dense_matrix(), self.objective_vector()) + self.bounds_arrays()
            self._solver_arrays = cached
        return cached

    def invalidate_cache(self) -> None:
        self._solver_arrays = None

    def validate(self, strict: bool = True) -> None:
        """Check structural sanity; `strict` additionally requires every
        variable box to be finite (always true for the vote-weighting models)."""
        for j, v in enumerate(self.variables):
            if not (v.lower <= v.upper):
                raise ValueError(f"variable {v.name}: lower {v.lower} > upper {v.upper}")
            if strict and not (math.isfinite(v.lower) and math.isfinite(v.upper)):
                raise ValueError(f"variable {v.name}: bounds must be finite, got [{v.lower}, {v.upper}]")
            for val in (v.lower, v.upper):
                if math.isnan(val):
                    raise ValueError(f"variable {v.name}: NaN bound")
        for row in self.constraints:
            if not (row.lower <= row.upper):
                raise ValueError(f"row {row.name}: lower {row.lower} > upper {row.upper}")
            if math.isinf(row.lower) and math.isinf(row.upper):
                raise ValueError(f"row {row.name}: both activity bounds infinite")
            if len(row.indices) != len(row.coeffs):
                raise ValueError(f"row {row.name}: index/coefficient length mismatch")
            for j in row.indices:
                if not 0 <= j < self.n_vars:
                    raise ValueError(f"row {row.name}: variable index {j} out of range")
            for a in row.coeffs:
                if not math.isfinite(a):
                    raise ValueError(f"row {row.name}: non-finite coefficient {a}")
        for j, a in self.objective.items():
            if not 0 <= j < self.n_vars:
                raise ValueError(f"objective references variable index {j} out of range")
            if not math.isfinite(a):
                raise ValueError(f"objective coefficient {a} not finite")


def models_structurally_equal(a: MilpModel, b: MilpModel, tol: float = 0.0) -> bool:
    """Same variables, bounds, integrality, rows, and objective (metadata ignored)."""
    if a.n_vars != b.n_vars or a.n_rows != b.n_rows:
        return False

    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return x == y
        return abs(x - y) <= tol

    for va, vb in zip(a.variables, b.variables):
        if va.name != vb.name or va.integral != vb.integral:
            return False
        if not (close(va.lower, vb.lower) and close(va.upper, vb.upper)):
            return False
    for ra, rb in zip(a.constraints, b.constraints):
        if ra.name != rb.name:
            return False
        if not (close(ra.lower, rb.lower) and close(ra.upper, rb.upper)):
            return False
        da = {j: c for j, c in zip(ra.indices, ra.coeffs) if c != 0.0}
        db = {j: c for j, c in zip(rb.indices, rb.coeffs) if c != 0.0}
        if set(da) != set(db):
            return False
        if any(not close(da[j], db[j]) for j in da):
            return False
    oa = {j: c for j, c in a.objective.items() if c != 0.0}
    ob = {j: c for j, c in b.objective.items() if c != 0.0}
    if set(oa) != set(ob):
        return False
    return all(close(oa[j], ob[j]) for j in oa)


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "iteration-limit"
    objective: float
    x: np.ndarray
    iterations: int
    basis: object = None  # (basis array, vstat array) snapshot for warm starts


@dataclass
class Basis:
    """Snapshot of a simplex basis: basic variable indices plus the
    nonbasic side (lower/upper/free) of every variable.  `binv` optionally
    carries the matching basis inverse so a warm start can skip one dense
    inversion; it must correspond exactly to `basic` or be None."""

    basic: np.ndarray
    vstat: np.ndarray
    binv: np.ndarray = None


class _Simplex:
    """One solve on the slack formulation [A | -I] x = 0 with boxed variables."""

    def __init__(self, A, c, lo, hi, rlo, rhi, maxiter):
        self.A = A
        self.M, self.n = A.shape
        self.T = self.n + self.M
        self.c = np.concatenate([c, np.zeros(self.M)])
        self.lo = np.concatenate([lo, rlo])
        self.hi = np.concatenate([hi, rhi])
        self.maxiter = maxiter
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.bland = False
        self.degen_streak = 0
        self.basic = None  # length-M array of variable indices
        self.vstat = None  # length-T status array
        self.binv = None
        self.xb = None  # values of basic variables, aligned with self.basic

    # -- columns of G = [A | -I] ------------------------------------------
    def col(self, j):
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.M)
        e[j - self.n] = -1.0
        return e

    def nonbasic_value(self, j):
        s = self.vstat[j]
        if s == AT_LOWER:
            return self.lo[j]
        if s == AT_UPPER:
            return self.hi[j]
        return 0.0  # NB_FREE

    def default_side(self, j):
        """Deterministic nonbasic side: the bound that is dual-feasible for
        the cost sign, falling back to whichever bound is finite."""
        lo, hi, cj = self.lo[j], self.hi[j], self.c[j]
        if math.isfinite(lo) and math.isfinite(hi):
            return AT_LOWER if cj >= 0 else AT_UPPER
        if math.isfinite(lo):
            return AT_LOWER
        if math.isfinite(hi):
            return AT_UPPER
        return NB_FREE

    def cold_start(self):
        self.basic = np.arange(self.n, self.T)
        self.vstat = np.empty(self.T, dtype=np.int8)
        for j in range(self.n):
            self.vstat[j] = self.default_side(j)
        self.vstat[self.n:] = BASIC

    def install_warm(self, warm: Basis) -> bool:
        if warm is None:
            return False
        basic = np.asarray(warm.basic, dtype=int).copy()
        vstat = np.asarray(warm.vstat, dtype=np.int8).copy()
        if basic.shape != (self.M,) or vstat.shape != (self.T,):
            return False
        if np.any(basic < 0) or np.any(basic >= self.T):
            return False
        # Repair nonbasic sides that the current bounds make meaningless.
        for j in range(self.T):
            if vstat[j] == BASIC:
                continue
            if vstat[j] == AT_LOWER and not math.isfinite(self.lo[j]):
                vstat[j] = self.default_side(j)
            elif vstat[j] == AT_UPPER and not math.isfinite(self.hi[j]):
                vstat[j] = self.default_side(j)
        self.basic = basic
        self.vstat = vstat
        if warm.binv is not None and warm.binv.shape == (self.M, self.M) \
                and np.all(np.isfinite(warm.binv)):
            # Probe before trusting the cached inverse: B (binv v) must be v.
            B = self.basis_matrix()
            v = np.ones(self.M)
            if np.max(np.abs(B @ (warm.binv @ v) - v)) <= 1e-8 * self.M:
                self.binv = warm.binv.copy()
                self.recompute_xb()
                self.pivots_since_refactor = 0
                return True
        return self.refactor()

    def basis_matrix(self) -> np.ndarray:
        B = np.zeros((self.M, self.M))
        struct = np.nonzero(self.basic < self.n)[0]
        if struct.size:
            B[:, struct] = self.A[:, self.basic[struct]]
        slack = np.nonzero(self.basic >= self.n)[0]
        if slack.size:
            B[self.basic[slack] - self.n, slack] = -1.0
        return B

    def refactor(self) -> bool:
        try:
            self.binv = np.linalg.inv(self.basis_matrix())
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(self.binv)):
            return False
        self.recompute_xb()
        self.pivots_since_refactor = 0
        return True

    def nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.vstat == AT_LOWER, self.lo,
                        np.where(self.vstat == AT_UPPER, self.hi, 0.0))
        vals[self.vstat == BASIC] = 0.0
        return vals

    def recompute_xb(self):
        vals = self.nonbasic_values()
        rhs = self.A @ vals[: self.n]
        rhs -= vals[self.n:]
        self.xb = -self.binv @ rhs

    # -- pricing -----------------------------------------------------------
    def dual_values(self, cost):
        """y = B^-T g for a cost vector over basic positions."""
        return self.binv.T @ cost

    def reduced(self, y):
        """d_j = cost_j - y.G_j for every variable (cost 0 in phase 1)."""
        d = np.empty(self.T)
        d[: self.n] = -(self.A.T @ y)
        d[self.n:] = y
        return d

    def choose_entering(self, d, use_cost):
        """Entering variable and move direction (+1 up, -1 down).

        Descent rate is d_j when moving up from the lower bound, -d_j when
        moving down from the upper bound; a free nonbasic can go either way.
        Dantzig rule (most negative rate, lowest index on ties); Bland rule
        (lowest improving index) after a degeneracy streak.
        """
        if use_cost:
            d = d + self.c
        vst = self.vstat
        movable = ((self.hi - self.lo) > 0) | (vst == NB_FREE)
        rate = np.full(self.T, INF)
        m_low = (vst == AT_LOWER) & movable
        m_up = (vst == AT_UPPER) & movable
        m_fr = vst == NB_FREE
        rate[m_low] = d[m_low]
        rate[m_up] = -d[m_up]
        rate[m_fr] = -np.abs(d[m_fr])
        if self.bland:
            improving = np.nonzero(rate < -RATE_TOL)[0]
            if improving.size == 0:
                return -1, 0
            j = int(improving[0])
        else:
            j = int(np.argmin(rate))
            if rate[j] >= -RATE_TOL:
                return -1, 0
        if vst[j] == AT_LOWER:
            return j, +1
        if vst[j] == AT_UPPER:
            return j, -1
        return j, (+1 if d[j] < 0 else -1)

    # -- ratio test ---------------------------------------------------------
    def ratio_test(self, j, direction, p):
        """First kink along the move: a basic variable stopping at a bound,
        or the entering variable flipping to its other bound.

        A basic variable that is beyond a bound and moving back toward it
        stops there (it turns feasible -- a kink of the phase-1 objective);
        one moving further away never blocks.  Returns (theta,
        leaving_position, exit_side); leaving_position -1 means bound flip.
        """
        move = -direction * p
        absmove = np.abs(move)
        li = self.lo[self.basic]
        ui = self.hi[self.basic]
        below = self.xb < li - BOUND_TOL
        above = self.xb > ui + BOUND_TOL
        up = (move > PIVOT_TOL) & ~above
        dn = (move < -PIVOT_TOL) & ~below
        target = np.where(up, np.where(below, li, ui),
                          np.where(above, ui, li))
        side = np.where(up, np.where(below, AT_LOWER, AT_UPPER),
                        np.where(above, AT_UPPER, AT_LOWER)).astype(np.int8)
        capped = (up | dn) & np.isfinite(target)
        theta = np.full(self.M, INF)
        if np.any(capped):
            theta[capped] = np.maximum(
                (target[capped] - self.xb[capped]) / move[capped], 0.0)
        tmin = float(theta.min()) if self.M else INF
        if self.vstat[j] != NB_FREE:
            span = self.hi[j] - self.lo[j]
            if math.isfinite(span) and span < tmin - 1e-12:
                return span, -1, AT_LOWER
        if not math.isfinite(tmin):
            return INF, -1, AT_LOWER
        tie = theta <= tmin + 1e-12
        if self.bland:
            cand = np.nonzero(tie)[0]
            pos = int(cand[np.argmin(self.basic[cand])])
        else:
            pos = int(np.where(tie, absmove, -1.0).argmax())
        return float(theta[pos]), pos, int(side[pos])

    def apply_step(self, j, direction, p, theta, leave_pos, leave_side):
        enter_val = self.nonbasic_value(j) + direction * theta
        if theta != 0.0:
            self.xb += -direction * theta * p
        if leave_pos < 0:
            # bound flip
            self.vstat[j] = AT_UPPER if self.vstat[j] == AT_LOWER else AT_LOWER
            self.iterations += 1
            return
        out = self.basic[leave_pos]
        self.vstat[out] = leave_side
        self.vstat[j] = BASIC
        self.basic[leave_pos] = j
        # product-form update of the explicit inverse
        piv = p[leave_pos]
        self.binv[leave_pos, :] /= piv
        row = self.binv[leave_pos, :].copy()
        mask = np.arange(self.M) != leave_pos
        self.binv[mask, :] -= np.outer(p[mask], row)
        self.xb[leave_pos] = enter_val
        self.iterations += 1
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            if not self.refactor():
                raise LpError("singular basis during refactorization")

    def track_degeneracy(self, theta):
        if theta <= 1e-10:
            self.degen_streak += 1
            if self.degen_streak >= DEGEN_STREAK:
                self.bland = True
        else:
            self.degen_streak = 0
            self.bland = False

    # -- phases --------------------------------------------------------------
    def infeasibility(self):
        li = self.lo[self.basic]
        ui = self.hi[self.basic]
        low = np.maximum(li - self.xb, 0.0)
        high = np.maximum(self.xb - ui, 0.0)
        low[~np.isfinite(low)] = 0.0
        high[~np.isfinite(high)] = 0.0
        low[low <= BOUND_TOL] = 0.0
        high[high <= BOUND_TOL] = 0.0
        return float(low.sum() + high.sum())

    def phase1(self):
        while True:
            if self.iterations >= self.maxiter:
                return "iteration-limit"
            li = self.lo[self.basic]
            ui = self.hi[self.basic]
            g = np.zeros(self.M)
            g[self.xb < li - BOUND_TOL] = -1.0
            g[self.xb > ui + BOUND_TOL] = 1.0
            if not np.any(g):
                return "feasible"
            y = self.dual_values(g)
            d = self.reduced(y)
            j, direction = self.choose_entering(d, use_cost=False)
            if j < 0:
                return "infeasible"
            p = self.binv @ self.col(j)
            theta, leave_pos, leave_side = self.ratio_test(j, direction, p)
            if not math.isfinite(theta):
                raise LpError("unbounded phase-1 direction (numerical breakdown)")
            self.track_degeneracy(theta)
            self.apply_step(j, direction, p, theta, leave_pos, leave_side)

    def phase2(self):
        while True:
            if self.iterations >= self.maxiter:
                return "iteration-limit"
            if self.infeasibility() > 10 * BOUND_TOL:
                return "drifted"
            cb = self.c[self.basic]
            y = self.dual_values(cb)
            d = self.reduced(y)
            j, direction = self.choose_entering(d, use_cost=True)
            if j < 0:
                return "optimal"
            p = self.binv @ self.col(j)
            theta, leave_pos, leave_side = self.ratio_test(j, direction, p)
            if not math.isfinite(theta):
                raise LpError("LP unbounded along an entering direction")
            self.track_degeneracy(theta)
            self.apply_step(j, direction, p, theta, leave_pos, leave_side)

    def solution(self):
        x = self.nonbasic_values()
        x[self.basic] = self.xb
        return x

    def equation_residual(self) -> float:
        """Worst violation of the defining equations A x = s; nonzero means
        the maintained inverse has drifted."""
        x = self.solution()
        r = self.A @ x[: self.n] - x[self.n:]
        return float(np.max(np.abs(r))) if self.M else 0.0

    def run(self, warm):
        if not self.install_warm(warm):
            self.cold_start()
            if not self.refactor():
                raise LpError("initial slack basis is singular")
        for _ in range(4):
            status = self.phase1()
            if status != "feasible":
                return status
            status = self.phase2()
            if status == "drifted":
                if not self.refactor():
                    raise LpError("singular basis after drift recovery")
                continue
            if status == "optimal":
                # audit the claimed optimum without a fresh inversion; a
                # drifted inverse shows up as an equation residual
                self.recompute_xb()
                if self.infeasibility() > 10 * BOUND_TOL \
                        or self.equation_residual() > 10 * BOUND_TOL:
                    if not self.refactor():
                        raise LpError("singular basis at the optimality check")
                    continue
            return status
        raise LpError("repeated feasibility drift; giving up")


def solve_lp(model: MilpModel, overrides: dict | None = None, warm: Basis | None = None,
             iteration_limit: int | None = None) -> LpResult:
    """Solve the LP relaxation of `model` (integrality ignored).

    `overrides` maps variable index -> (lower, upper) and must stay inside the
    variable's declared bounds; branch-and-bound uses it to fix binaries.
    Contradictory override boxes (lower > upper) are a caller error.
    Deterministic: identical inputs produce identical results.
    """
    A, c, lo, hi, rlo, rhi = model.solver_arrays()
    lo, hi = lo.copy(), hi.copy()
    if overrides:
        for j, (l2, h2) in overrides.items():
            if l2 < lo[j] - BOUND_TOL or h2 > hi[j] + BOUND_TOL:
                raise ValueError(f"override [{l2}, {h2}] outside bounds of variable {model.variables[j].name}")
            if l2 > h2:
                raise ValueError(f"override [{l2}, {h2}] empty for variable {model.variables[j].name}")
            lo[j], hi[j] = l2, h2
    M, n = A.shape
    maxiter = iteration_limit if iteration_limit is not None else max(100, 10 * (M + n))
    sx = _Simplex(A, c, lo, hi, rlo, rhi, maxiter)
    status = sx.run(warm)
    if status == "optimal":
        full = sx.solution()
        x = np.clip(full[:n], lo, hi)
        snapshot = Basis(basic=sx.basic.copy(), vstat=sx.vstat.copy(), binv=sx.binv.copy())
        return LpResult("optimal", float(c @ x), x, sx.iterations, snapshot)
    snapshot = Basis(basic=sx.basic.copy(), vstat=sx.vstat.copy())
    if status == "infeasible":
        return LpResult("infeasible", INF, np.full(n, np.nan), sx.iterations, snapshot)
    return LpResult("iteration-limit", INF, np.full(n, np.nan), sx.iterations, snapshot)


def audit_lp(model: MilpModel, result: LpResult, tol: float = 1e-7) -> None:
    """From-scratch audit of an optimal result: primal values inside variable
    boxes, row activities inside row bounds, objective consistent.  Raises
    AssertionError on any violation; test suites run this after every solve."""
    assert result.status == "optimal", f"audit expects an optimal result, got {result.status}"
    x = result.x
    lo, hi, rlo, rhi = model.bounds_arrays()
    assert np.all(x >= lo - tol) and np.all(x <= hi + tol), "variable bound violated"
    act = model.dense_matrix() @ x
    assert np.all(act >= rlo - tol) and np.all(act <= rhi + tol), "row activity violated"
    obj = float(model.objective_vector() @ x)
    assert abs(obj - result.objective) <= tol * max(1.0, abs(obj)), "objective mismatch"


# ---------------------------------------------------------------------------
# MPS interchange.
#
# Emitted layout (classic fixed columns, whitespace-compatible):
#   field 1 cols 2-3, field 2 cols 5-12, field 3 cols 15-22,
#   field 4 cols 25+, field 5/6 appended one pair per line.
# Values are written with repr(float) so doubles round-trip exactly; a value
# wider than its nominal field simply extends the line, which every
# whitespace-splitting reader (including ours) accepts.
# Two-sided rows are written as L rows with a positive RANGES entry.  The
# row's lower bound is reconstructed on import as rhs - range, so it can be
# one ulp off for irrational spans; the vote-weighting models only emit
# one-sided rows and round-trip bit-exactly.
# Minimization is assumed; no OBJSENSE section is written.
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _field_line(f1: str, f2: str, f3: str = "", f4: str = "") -> str:
    line = f" {f1:<2} {f2:<8}"
    if f3:
        line += f"  {f3:<8}"
    if f4:
        line += f"  {f4}"
    return line.rstrip()


def export_mps(model: MilpModel, path: str) -> None:
    """Write fixed-format MPS with RANGES for two-sided rows, BOUNDS for the
    variable boxes, and MARKER sections around integral variables."""
    model.validate(strict=False)
    lines = [f"NAME          {model.name}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    row_kind = []
    for r in model.constraints:
        lo_f, hi_f = math.isfinite(r.lower), math.isfinite(r.upper)
        if lo_f and hi_f and r.lower == r.upper:
            kind = "E"
        elif lo_f and hi_f:
            kind = "L"  # plus a RANGES entry
        elif hi_f:
            kind = "L"
        else:
            kind = "G"
        row_kind.append(kind)
        lines.append(f" {kind}  {r.name}")
    by_col = {j: [] for j in range(model.n_vars)}
    for r in model.constraints:
        for j, a in zip(r.indices, r.coeffs):
            by_col[j].append((r.name, a))
    lines.append("COLUMNS")
    in_int = False
    marker_id = 0
    for j, v in enumerate(model.variables):
        if v.integral != in_int:
            tag = "'INTORG'" if v.integral else "'INTEND'"
            lines.append(_field_line("", f"MARKER{marker_id}", "'MARKER'", tag))
            marker_id += 1
            in_int = v.integral
        entries = list(by_col[j])
        if j in model.objective and model.objective[j] != 0.0:
            entries.insert(0, ("OBJ", model.objective[j]))
        if not entries:
            entries = [("OBJ", 0.0)]  # keep empty columns representable
        for rname, a in entries:
            lines.append(_field_line("", v.name, rname, _fmt(a)))
    if in_int:
        lines.append(_field_line("", f"MARKER{marker_id}", "'MARKER'", "'INTEND'"))
    lines.append("RHS")
    for r, kind in zip(model.constraints, row_kind):
        if kind == "E" or kind == "L" and math.isfinite(r.upper):
            rhs = r.upper if kind == "L" else r.lower
        else:  # G
            rhs = r.lower
        if rhs != 0.0:
            lines.append(_field_line("", "RHS", r.name, _fmt(rhs)))
    ranged = [(r, kind) for r, kind in zip(model.constraints, row_kind)
              if kind == "L" and math.isfinite(r.lower) and r.lower != r.upper]
    if ranged:
        lines.append("RANGES")
        for r, _ in ranged:
            lines.append(_field_line("", "RNG", r.name, _fmt(r.upper - r.lower)))
    lines.append("BOUNDS")
    for v in model.variables:
        if v.integral and v.lower == 0.0 and v.upper == 1.0:
            lines.append(_field_line("BV", "BND", v.name))
            continue
        if v.lower == v.upper:
            lines.append(_field_line("FX", "BND", v.name, _fmt(v.lower)))
            continue
        if math.isfinite(v.lower):
            if v.lower != 0.0:
                lines.append(_field_line("LO", "BND", v.name, _fmt(v.lower)))
        else:
            lines.append(_field_line("MI", "BND", v.name))
        if math.isfinite(v.upper):
            lines.append(_field_line("UP", "BND", v.name, _fmt(v.upper)))
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_mps(path: str) -> MilpModel:
    """Parse an MPS file into a MilpModel.

    Exact inverse of export_mps on files it produced; best-effort on external
    files (free N rows beyond the objective are ignored).  Parse errors
    report the offending line number.
    """
    name = "MODEL"
    obj_name = None
    row_order = []
    row_type = {}
    var_order = []
    var_entries = {}
    var_integral = {}
    obj_coeffs = {}
    rhs = {}
    ranges = {}
    bounds = {}
    section = None
    in_int = False

    def err(ln, msg):
        return ValueError(f"{path}: line {ln}: {msg}")

    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.lstrip().startswith("*"):
                continue
            if not raw[0].isspace():
                parts = raw.split()
                section = parts[0].upper()
                if section == "NAME" and len(parts) > 1:
                    name = parts[1]
                if section == "ENDATA":
                    break
                continue
            parts = raw.split()
            if section == "ROWS":
                if len(parts) != 2:
                    raise err(ln, f"ROWS entry needs 2 fields, got {len(parts)}")
                kind, rname = parts[0].upper(), parts[1]
                if kind == "N":
                    if obj_name is None:
                        obj_name = rname
                    continue  # extra free rows ignored
                if kind not in ("L", "G", "E"):
                    raise err(ln, f"unknown row type {kind!r}")
                row_order.append(rname)
                row_type[rname] = kind
            elif section == "COLUMNS":
                if len(parts) >= 3 and parts[1] == "'MARKER'":
                    tag = parts[2]
                    in_int = tag == "'INTORG'"
                    continue
                if len(parts) not in (3, 5):
                    raise err(ln, f"COLUMNS entry needs 3 or 5 fields, got {len(parts)}")
                vname = parts[0]
                if vname not in var_entries:
                    var_order.append(vname)
                    var_entries[vname] = {}
                    var_integral[vname] = in_int
                for k in range(1, len(parts), 2):
                    rname, value = parts[k], parts[k + 1]
                    try:
                        val = float(value)
                    except ValueError:
                        raise err(ln, f"bad numeric value {value!r}")
                    if rname == obj_name:
                        obj_coeffs[vname] = val
                    elif rname in row_type:
                        var_entries[vname][rname] = val
                    else:
                        raise err(ln, f"unknown row {rname!r}")
            elif section == "RHS":
                if len(parts) not in (3, 5):
                    raise err(ln, f"RHS entry needs 3 or 5 fields, got {len(parts)}")
                for k in range(1, len(parts), 2):
                    rname = parts[k]
                    if rname == obj_name:
                        continue  # objective offset unsupported, ignored
                    if rname not in row_type:
                        raise err(ln, f"unknown row {rname!r}")
                    rhs[rname] = float(parts[k + 1])
            elif section == "RANGES":
                if len(parts) not in (3, 5):
                    raise err(ln, f"RANGES entry needs 3 or 5 fields, got {len(parts)}")
                for k in range(1, len(parts), 2):
                    rname = parts[k]
                    if rname not in row_type:
                        raise err(ln, f"unknown row {rname!r}")
                    ranges[rname] = float(parts[k + 1])
            elif section == "BOUNDS":
                kind = parts[0].upper()
                if kind in ("FR", "MI", "PL", "BV"):
                    if len(parts) != 3:
                        raise err(ln, f"{kind} bound needs 3 fields, got {len(parts)}")
                    vname, val = parts[2], None
                else:
                    if len(parts) != 4:
                        raise err(ln, f"{kind} bound needs 4 fields, got {len(parts)}")
                    vname, val = parts[2], float(parts[3])
                bounds.setdefault(vname, []).append((kind, val))
            elif section in (None, "OBJSENSE", "OBJSENSE:"):
                continue
            else:
                raise err(ln, f"unexpected data in section {section!r}")

    variables = []
    var_index = {}
    for vname in var_order:
        lo_b, hi_b = 0.0, INF
        integral = var_integral[vname]
        for kind, val in bounds.get(vname, []):
            if kind == "LO":
                lo_b = val
            elif kind == "UP":
                hi_b = val
                if val < 0 and lo_b == 0.0:
                    lo_b = -INF  # classic MPS quirk for negative UP
            elif kind == "FX":
                lo_b = hi_b = val
            elif kind == "FR":
                lo_b, hi_b = -INF, INF
            elif kind == "MI":
                lo_b = -INF
            elif kind == "PL":
                hi_b = INF
            elif kind == "BV":
                lo_b, hi_b, integral = 0.0, 1.0, True
            elif kind == "LI":
                lo_b, integral = val, True
            elif kind == "UI":
                hi_b, integral = val, True
            else:
                raise ValueError(f"{path}: unsupported bound type {kind!r}")
        var_index[vname] = len(variables)
        variables.append(Variable(vname, lo_b, hi_b, integral))

    constraints = []
    for rname in row_order:
        b = rhs.get(rname, 0.0)
        kind = row_type[rname]
        if kind == "E":
            lo_b, hi_b = b, b
            if rname in ranges:
                r = ranges[rname]
                lo_b, hi_b = (b, b + r) if r >= 0 else (b + r, b)
        elif kind == "L":
            hi_b = b
            lo_b = b - abs(ranges[rname]) if rname in ranges else -INF
        else:  # G
            lo_b = b
            hi_b = b + abs(ranges[rname]) if rname in ranges else INF
        idxs, coefs = [], []
        for vname in var_order:
            if rname in var_entries[vname]:
                idxs.append(var_index[vname])
                coefs.append(var_entries[vname][rname])
        constraints.append(Constraint(rname, idxs, coefs, lo_b, hi_b))

    objective = {var_index[v]: a for v, a in obj_coeffs.items() if a != 0.0}
    return MilpModel(variables, constraints, objective, name=name)
