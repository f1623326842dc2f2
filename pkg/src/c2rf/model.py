"""Build the big-M vote-weighting MILP from a vote matrix and a class count.

Decision variables: one weight per tree group in [ell, u], a deviation
variable eta >= 0, and one binary z per point group.  Paired big-M rows tie
each z to the sign of the weighted vote combination for its point, and a
two-row cardinality window keeps the weighted positive count within eta of
the target.  The objective minimizes eta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forest import VoteMatrix
from .milp import Constraint, MilpModel, Variable


@dataclass
class ModelSpec:
    """Bounds and target for a model build.

    `big_m` and `eta_bar` are derived quantities; build_milp always
    recomputes them from the actual (possibly reduced) matrix so stale
    values can never leak in after presolve.
    """

    ell: float
    u: float
    lam: int
    big_m: float = None
    eta_bar: float = None

    def validated(self) -> "ModelSpec":
        if not (0 < self.ell < self.u):
            raise ValueError(f"need 0 < ell < u, got ell={self.ell}, u={self.u}")
        if self.lam < 0:
            raise ValueError(f"class-count target must be nonnegative, got {self.lam}")
        return self


def big_m(t_eff: int, u: float) -> float:
    """Smallest safe deactivation constant for the paired margin rows:
    u * t_eff + 1, where t_eff counts trees with their multiplicities."""
    if t_eff < 1 or u <= 0:
        raise ValueError("need t_eff >= 1 and u > 0")
    return u * t_eff + 1.0


def eta_bar(lam: int, m_eff: int) -> int:
    """Upper bound on the optimal deviation: max(lam, m_eff - lam)."""
    if lam < 0 or m_eff < 0:
        raise ValueError("lam and m_eff must be nonnegative")
    return max(lam, m_eff - lam)


def build_milp(R: VoteMatrix, spec: ModelSpec) -> MilpModel:
    """Assemble the weighting MILP for a (possibly presolve-reduced) vote
    matrix.

    Variable order is fixed -- weight block, eta, z block -- so exports and
    solver traces are reproducible.  Row order: for each point column i the
    upper margin row then the lower margin row, then the two cardinality
    rows.
    """
    spec = spec.validated()
    t, m = R.n_trees, R.n_points
    t_eff = R.t_eff
    m_eff = R.m_eff
    # A reduced instance may carry lam > m_eff (variable fixing can make the
    # residual target unreachable); eta absorbs the gap, so only lam >= 0 is
    # required here.  Raw instances always satisfy lam <= m_eff upstream.
    M = big_m(t_eff, spec.u) if t >= 1 else 1.0
    eb = float(eta_bar(spec.lam, m_eff))

    variables = [Variable(f"a{j + 1}", spec.ell, spec.u) for j in range(t)]
    eta_idx = t
    variables.append(Variable("eta", 0.0, eb))
    z0 = t + 1
    variables += [Variable(f"z{i + 1}", 0.0, 1.0, integral=True) for i in range(m)]

    wcols = R.weighted_columns()  # t x m, tree multiplicities folded in
    alpha_idx = list(range(t))
    constraints = []
    for i in range(m):
        coefs = wcols[:, i].tolist()
        # weighted vote sum <= -1 + z_i M
        constraints.append(Constraint(f"u{i + 1}", alpha_idx + [z0 + i],
                                      coefs + [-M], upper=-1.0))
        # weighted vote sum >= 1 - (1 - z_i) M
        constraints.append(Constraint(f"g{i + 1}", alpha_idx + [z0 + i],
                                      coefs + [-M], lower=1.0 - M))
    zw = R.point_weights.astype(float)
    z_idx = list(range(z0, z0 + m))
    # lam - eta <= sum w_i z_i <= lam + eta, as two rows
    constraints.append(Constraint("clo", z_idx + [eta_idx],
                                  zw.tolist() + [1.0], lower=float(spec.lam)))
    constraints.append(Constraint("chi", z_idx + [eta_idx],
                                  zw.tolist() + [-1.0], upper=float(spec.lam)))

    integral_obj = bool(np.all(R.point_weights == np.round(R.point_weights))
                        and float(spec.lam).is_integer())
    model = MilpModel(
        variables=variables,
        constraints=constraints,
        objective={eta_idx: 1.0},
        name="C2RF",
        metadata={
            "kind": "c2rf",
            "n_tree_groups": t,
            "n_point_groups": m,
            "tree_weights": R.tree_weights.tolist(),
            "point_weights": R.point_weights.tolist(),
            "lambda": int(spec.lam),
            "ell": spec.ell,
            "u": spec.u,
            "big_m": M,
            "eta_bar": eb,
            "integral_objective": integral_obj,
        },
    )
    model.validate(strict=True)
    return model


def split_solution_vector(model: MilpModel, x: np.ndarray):
    """(alpha, eta, z) blocks of a primal vector for a model built here."""
    t = model.metadata["n_tree_groups"]
    m = model.metadata["n_point_groups"]
    return x[:t], float(x[t]), x[t + 1: t + 1 + m]


def check_solution(R: VoteMatrix, spec: ModelSpec, alpha: np.ndarray,
                   eta: float, z: np.ndarray, tol: float = 1e-6) -> list:
    """Violated-row report for a candidate (alpha, eta, z); empty if the
    point satisfies every constraint of the weighting problem at `tol`."""
    spec = spec.validated()
    problems = []
    t_eff = R.t_eff
    M = big_m(t_eff, spec.u) if R.n_trees >= 1 else 1.0
    wcols = R.weighted_columns()
    act = np.asarray(alpha, dtype=float) @ wcols
    z = np.asarray(z, dtype=float)
    for i in range(R.n_points):
        if act[i] > -1.0 + z[i] * M + tol:
            problems.append(f"point {i}: upper margin row violated ({act[i]:.6g})")
        if act[i] < 1.0 - (1.0 - z[i]) * M - tol:
            problems.append(f"point {i}: lower margin row violated ({act[i]:.6g})")
    total = float(R.point_weights @ z)
    if total < spec.lam - eta - tol or total > spec.lam + eta + tol:
        problems.append(f"cardinality window violated: sum={total:.6g}, "
                        f"target={spec.lam}, eta={eta:.6g}")
    a = np.asarray(alpha, dtype=float)
    if np.any(a < spec.ell - tol) or np.any(a > spec.u + tol):
        problems.append("weight bounds violated")
    if eta < -tol:
        problems.append("negative deviation")
    return problems
