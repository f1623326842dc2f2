import numpy as np
import pytest

from c2rf.bnb import Solution, brute_force_solve, solve_milp
from c2rf.forest import VoteMatrix
from c2rf.model import ModelSpec, build_milp, check_solution
from c2rf.presolve import (PresolveMap, fix_variables, lift_solution,
                           merge_points, merge_trees, presolve, update_lambda)
from conftest import random_votes, structured_votes


class TestFixVariables:
    def test_unanimous_positive_forced(self):
        R = VoteMatrix(np.ones((20, 1), dtype=np.int8))
        rep = fix_variables(R, 1.0, 100.0)
        assert rep.phi[0] == 20.0
        assert rep.pos == [0] and rep.neg == []

    def test_unanimous_negative_forced(self):
        R = VoteMatrix(-np.ones((20, 1), dtype=np.int8))
        rep = fix_variables(R, 1.0, 100.0)
        assert rep.psi[0] == -20.0
        assert rep.neg == [0] and rep.pos == []

    def test_balanced_votes_unfixed(self):
        votes = np.concatenate([np.ones(10), -np.ones(10)]).astype(np.int8)
        R = VoteMatrix(votes.reshape(20, 1))
        rep = fix_variables(R, 1.0, 100.0)
        assert rep.phi[0] == -990.0 and rep.psi[0] == 990.0
        assert rep.pos == [] and rep.neg == []

    def test_margin_identity(self, rng):
        # psi - phi == (u - ell) * weighted tree count, always
        for _ in range(50):
            R = random_votes(rng, int(rng.integers(1, 9)), int(rng.integers(1, 12)))
            u = float(rng.uniform(1.1, 50))
            ell = float(rng.uniform(0.1, u - 0.1))
            rep = fix_variables(R, ell, u)
            assert np.allclose(rep.psi - rep.phi, (u - ell) * R.t_eff)
            assert not set(rep.pos) & set(rep.neg)


class TestUpdateLambda:
    def test_examples(self):
        assert update_lambda(5, 2) == 3
        assert update_lambda(2, 7) == 0
        assert update_lambda(0, 0) == 0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            update_lambda(1, -1)


class TestMerging:
    def test_two_identical_columns(self):
        R = VoteMatrix(np.array([[1, 1], [-1, -1]], dtype=np.int8))
        reduced, groups = merge_points(R)
        assert reduced.n_points == 1
        assert reduced.point_weights.tolist() == [2]
        assert groups == [(0, [0, 1])]

    def test_all_columns_identical(self):
        R = VoteMatrix(np.tile([[1], [-1]], (1, 7)).astype(np.int8))
        reduced, _ = merge_points(R)
        assert reduced.n_points == 1
        assert reduced.point_weights.tolist() == [7]

    def test_distinct_columns_identity(self):
        R = VoteMatrix(np.array([[1, 1, -1], [1, -1, 1]], dtype=np.int8))
        reduced, groups = merge_points(R)
        assert reduced.n_points == 3
        assert np.array_equal(reduced.votes, R.votes)
        assert all(len(m) == 1 for _, m in groups)

    def test_tree_merging_mirrors(self):
        R = VoteMatrix(np.array([[1, -1], [1, -1], [-1, 1]], dtype=np.int8))
        reduced, groups = merge_trees(R)
        assert reduced.n_trees == 2
        assert reduced.tree_weights.tolist() == [2, 1]
        assert groups == [(0, [0, 1]), (2, [2])]

    def test_weights_accumulate(self):
        R = VoteMatrix(np.array([[1, 1]], dtype=np.int8),
                       point_weights=np.array([2, 3]))
        reduced, _ = merge_points(R)
        assert reduced.point_weights.tolist() == [5]


class TestPresolvePipeline:
    def test_unanimous_matrix_fully_fixed(self):
        # every point unanimously voted: no binaries remain and the lifted
        # objective is | fixed-positive - lam |, cross-checked by the oracle
        votes = np.concatenate([np.ones((5, 3)), -np.ones((5, 2))], axis=1).astype(np.int8)
        R = VoteMatrix(votes)
        for lam in range(0, 6):
            reduced, lam_red, pmap, stats = presolve(R, lam, 1.0, 100.0)
            assert reduced.n_points == 0
            model = build_milp(reduced, ModelSpec(1.0, 100.0, lam_red))
            assert sum(v.integral for v in model.variables) == 0
            lifted = lift_solution(solve_milp(model), pmap)
            oracle = brute_force_solve(R, lam, 1.0, 100.0)
            assert lifted.objective == pytest.approx(abs(3 - lam), abs=1e-9)
            assert oracle.objective == pytest.approx(lifted.objective, abs=1e-9)

    def test_wide_bounds_identity(self):
        R = VoteMatrix(np.array([[1, 1, -1], [1, -1, 1], [-1, 1, 1]], dtype=np.int8))
        reduced, lam_red, pmap, stats = presolve(R, 2, 1.0, 100.0)
        assert reduced.n_points == 3 and reduced.n_trees == 3
        assert lam_red == 2 and pmap.eta_offset == 0
        assert np.array_equal(reduced.votes, R.votes)

    def test_known_duplicate_structure(self):
        rng = np.random.default_rng(7)
        base = rng.choice([-1, 1], size=(15, 6)).astype(np.int8)
        votes = np.concatenate([base, base[:, :3]], axis=1)  # 3 duplicated columns
        votes = np.vstack([votes, votes[:5]])  # 5 duplicated trees
        R = VoteMatrix(votes)
        reduced, _, pmap, stats = presolve(R, 4, 1.0, 100.0)
        distinct_rows = len({r.tobytes() for r in votes})
        distinct_cols = len({c.tobytes() for c in votes.T})
        assert stats.trees_before == 20 and stats.trees_after == distinct_rows <= 15
        assert stats.points_after <= distinct_cols <= 6
        assert reduced.t_eff == 20 and reduced.m_eff == 9

    def test_idempotent(self, rng):
        for _ in range(25):
            R = structured_votes(rng)
            lam = int(rng.integers(0, R.n_points + 1))
            r1, l1, _, _ = presolve(R, lam, 1.0, 100.0)
            r2, l2, _, s2 = presolve(r1, l1, 1.0, 100.0)
            assert l1 == l2
            assert np.array_equal(r1.votes, r2.votes)
            assert np.array_equal(r1.tree_weights, r2.tree_weights)
            assert np.array_equal(r1.point_weights, r2.point_weights)
            assert s2.fixed_pos == 0 and s2.fixed_neg == 0

    def test_equivalence_and_lift_feasibility(self, rng):
        for _ in range(40):
            R = structured_votes(rng)
            lam = int(rng.integers(0, R.n_points + 1))
            u = float(rng.choice([2.0, 100.0]))
            spec = ModelSpec(1.0, u, lam)
            direct = solve_milp(build_milp(R, spec))
            reduced, lam_red, pmap, _ = presolve(R, lam, 1.0, u)
            lifted = lift_solution(
                solve_milp(build_milp(reduced, ModelSpec(1.0, u, lam_red))), pmap)
            assert direct.status == lifted.status
            if direct.status == "optimal":
                assert lifted.objective == pytest.approx(direct.objective, abs=1e-9)
                assert check_solution(R, spec, lifted.alpha, lifted.eta, lifted.z) == []

    def test_fixing_consistent_with_every_oracle_optimum(self, rng):
        for _ in range(30):
            R = structured_votes(rng, t=4, distinct_cols=2, copies=(2, 6),
                                 unanimous=(1, 4), dup_trees=(0, 2))
            if R.n_points > 10:
                continue
            lam = int(rng.integers(0, R.n_points + 1))
            rep = fix_variables(R, 1.0, 100.0)
            oracle = brute_force_solve(R, lam, 1.0, 100.0, collect_all=True)
            if oracle.status != "optimal":
                continue
            for z in oracle.stats["all_optimal_z"]:
                assert all(z[i] == 1 for i in rep.pos)
                assert all(z[i] == 0 for i in rep.neg)

    def test_forced_deviation_certificate(self):
        # 3 unanimous-negative points, lam = 3: every remaining budget is
        # unreachable and the certificate reports the floor
        votes = np.concatenate([-np.ones((4, 3)), [[1], [1], [-1], [-1]]], axis=1).astype(np.int8)
        R = VoteMatrix(votes)
        reduced, lam_red, pmap, stats = presolve(R, 3, 1.0, 100.0)
        assert stats.fixed_neg == 3
        assert lam_red == 3
        assert stats.forced_deviation == 3 - reduced.m_eff


class TestLift:
    def test_identity_map(self):
        R = VoteMatrix(np.array([[1, -1], [-1, 1]], dtype=np.int8))
        reduced, lam_red, pmap, _ = presolve(R, 1, 1.0, 100.0)
        sol = solve_milp(build_milp(reduced, ModelSpec(1.0, 100.0, lam_red)))
        lifted = lift_solution(sol, pmap)
        assert np.array_equal(lifted.z, sol.z)
        assert np.array_equal(lifted.alpha, sol.alpha)
        assert lifted.eta == sol.eta

    def test_point_group_members_copy_representative(self):
        pmap = PresolveMap(
            fixed=__import__("c2rf.presolve", fromlist=["FixReport"]).FixReport([], [], np.zeros(3), np.zeros(3)),
            point_groups=[(0, [0, 1]), (2, [2])],
            tree_groups=[(0, [0])],
            lambda_original=1, lambda_reduced=1, eta_offset=0,
            t_original=1, m_original=3)
        sol = Solution(np.array([2.5]), 0.0, np.array([1, 0], dtype=np.int8),
                       "optimal", 0.0, {})
        lifted = lift_solution(sol, pmap)
        assert lifted.z.tolist() == [1, 1, 0]

    def test_tree_group_members_copy_representative(self):
        from c2rf.presolve import FixReport
        pmap = PresolveMap(
            fixed=FixReport([], [], np.zeros(1), np.zeros(1)),
            point_groups=[(0, [0])],
            tree_groups=[(0, [0]), (1, [1, 2])],
            lambda_original=0, lambda_reduced=0, eta_offset=0,
            t_original=3, m_original=1)
        sol = Solution(np.array([1.0, 2.5]), 0.0, np.array([0], dtype=np.int8),
                       "optimal", 0.0, {})
        lifted = lift_solution(sol, pmap)
        assert lifted.alpha.tolist() == [1.0, 2.5, 2.5]

    def test_dimension_mismatch_rejected(self):
        from c2rf.presolve import FixReport
        pmap = PresolveMap(FixReport([], [], np.zeros(1), np.zeros(1)),
                           [(0, [0])], [(0, [0])], 0, 0, 0, 1, 1)
        sol = Solution(np.array([1.0, 2.0]), 0.0, np.array([0], dtype=np.int8),
                       "optimal", 0.0, {})
        with pytest.raises(ValueError):
            lift_solution(sol, pmap)

    def test_map_json_round_trip(self, rng, tmp_path):
        R = structured_votes(rng)
        _, _, pmap, _ = presolve(R, 3, 1.0, 100.0)
        path = tmp_path / "map.json"
        pmap.save(str(path))
        back = PresolveMap.load(str(path))
        assert back.point_groups == pmap.point_groups
        assert back.tree_groups == pmap.tree_groups
        assert back.fixed.pos == pmap.fixed.pos
        assert back.lambda_reduced == pmap.lambda_reduced
        assert back.eta_offset == pmap.eta_offset
