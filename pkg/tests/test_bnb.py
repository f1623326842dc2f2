import numpy as np
import pytest

from c2rf.bnb import (SolverConfig, branching_priorities, brute_force_solve,
                      solve_milp)
from c2rf.forest import VoteMatrix
from c2rf.model import ModelSpec, build_milp, check_solution
from conftest import random_votes


def reference_instance():
    # columns r1=(1,1,1), r2=(-1,-1,-1), r3=(1,-1,-1), r4=(-1,1,1)
    votes = np.array([[1, -1, 1, -1],
                      [1, -1, -1, 1],
                      [1, -1, -1, 1]], dtype=np.int8)
    return VoteMatrix(votes)


class TestPriorities:
    def test_mean_rank_example(self):
        # column vote sums 2, 10, 4 over 10 trees: unanimity 0.2 < 0.4 < 1.0
        cols = np.stack([np.array([1] * 6 + [-1] * 4),
                         np.array([1] * 10),
                         np.array([1] * 7 + [-1] * 3)], axis=1).astype(np.int8)
        assert branching_priorities(VoteMatrix(cols)).tolist() == [0, 2, 1]

    def test_unanimous_column_ranks_highest(self, rng):
        votes = rng.choice([-1, 1], size=(6, 5)).astype(np.int8)
        votes[:, 2] = 1
        prio = branching_priorities(VoteMatrix(votes))
        assert prio[2] == prio.max()

    def test_ties_share_rank(self):
        votes = np.array([[1, -1, 1], [1, -1, 1]], dtype=np.int8)
        prio = branching_priorities(VoteMatrix(votes))
        assert prio[0] == prio[1] == prio[2]

    def test_weighted_mean(self):
        R = VoteMatrix(np.array([[1, 1], [-1, 1]], dtype=np.int8),
                       tree_weights=np.array([3, 1]))
        # sums: |3-1|=2 and |3+1|=4
        assert branching_priorities(R).tolist() == [0, 1]


class TestSolveMilp:
    def test_reference_instance(self):
        R = reference_instance()
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 2)))
        assert sol.status == "optimal"
        assert sol.objective == 0.0
        assert sol.z.tolist() == [1, 0, 0, 1]
        assert check_solution(R, ModelSpec(1.0, 100.0, 2), sol.alpha, sol.eta, sol.z) == []

    def test_no_points_trivial(self):
        R = VoteMatrix(np.zeros((3, 0), dtype=np.int8))
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 0)))
        assert sol.status == "optimal" and sol.objective == 0.0

    def test_single_forced_point(self):
        R = VoteMatrix(np.array([[1]], dtype=np.int8))
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 0)))
        assert sol.objective == 1.0 and sol.z.tolist() == [1]

    def test_identical_columns(self):
        R = VoteMatrix(np.tile([[1], [-1], [1]], (1, 6)).astype(np.int8))
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 3)))
        oracle = brute_force_solve(R, 3, 1.0, 100.0)
        assert sol.objective == oracle.objective

    def test_oracle_equivalence(self, rng):
        for _ in range(60):
            t = int(rng.integers(2, 6))
            m = int(rng.integers(1, 11))
            lam = int(rng.integers(0, m + 1))
            u = float(rng.choice([2.0, 100.0]))
            R = random_votes(rng, t, m)
            oracle = brute_force_solve(R, lam, 1.0, u)
            sol = solve_milp(build_milp(R, ModelSpec(1.0, u, lam)))
            assert sol.status == oracle.status
            if oracle.status == "optimal":
                assert sol.objective == oracle.objective  # both exact integers

    def test_lower_bound_soundness(self, rng):
        for _ in range(30):
            R = random_votes(rng, int(rng.integers(2, 5)), int(rng.integers(2, 9)))
            lam = int(rng.integers(0, R.n_points + 1))
            sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, lam)))
            assert sol.stats["lower_bound"] <= sol.objective + 1e-9

    def test_priority_relabeling_keeps_objective(self, rng):
        for _ in range(20):
            R = random_votes(rng, 3, 7)
            lam = 3
            prio = branching_priorities(R)
            spec = ModelSpec(1.0, 100.0, lam)
            base = solve_milp(build_milp(R, spec), SolverConfig(priorities=prio))
            perm = rng.permutation(R.n_points)
            Rp = VoteMatrix(R.votes[:, perm])
            pp = solve_milp(build_milp(Rp, spec),
                            SolverConfig(priorities=branching_priorities(Rp)))
            assert pp.objective == base.objective
            # the returned assignment solves the permuted problem exactly
            assert check_solution(Rp, spec, pp.alpha, pp.eta, pp.z) == []

    def test_incumbents_monotone(self, rng):
        for _ in range(15):
            R = random_votes(rng, 4, 9)
            sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 4)))
            seq = sol.stats["incumbents"]
            assert all(a >= b for a, b in zip(seq, seq[1:]))

    def test_equal_priorities_still_optimal(self, rng):
        for _ in range(15):
            R = random_votes(rng, 3, 8)
            lam = int(rng.integers(0, 9))
            oracle = brute_force_solve(R, lam, 1.0, 100.0)
            flat = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, lam)),
                              SolverConfig(priorities=np.zeros(8, dtype=int), gap=0.0))
            if oracle.status == "optimal":
                assert flat.objective == oracle.objective

    def test_node_limit_reports_feasible(self, rng):
        R = random_votes(np.random.default_rng(5), 6, 14)
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 7)),
                         SolverConfig(node_limit=3))
        assert sol.stats["limit"] == "nodes"
        assert sol.status in ("feasible", "unknown", "optimal")
        if sol.status == "feasible":
            assert sol.stats["lower_bound"] <= sol.objective

    def test_time_limit_respected(self):
        rng = np.random.default_rng(17)
        R = random_votes(rng, 8, 18)
        sol = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 9)),
                         SolverConfig(time_limit=0.05))
        assert sol.stats["wall_time"] < 5.0

    def test_depth_first_matches_best_bound(self, rng):
        for _ in range(10):
            R = random_votes(rng, 3, 8)
            lam = int(rng.integers(0, 9))
            a = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, lam)))
            b = solve_milp(build_milp(R, ModelSpec(1.0, 100.0, lam)),
                           SolverConfig(strategy="depth-first"))
            assert a.status == b.status
            if a.status == "optimal":
                assert a.objective == b.objective

    def test_trace_file(self, tmp_path, rng):
        R = random_votes(rng, 3, 6)
        path = tmp_path / "trace.csv"
        solve_milp(build_milp(R, ModelSpec(1.0, 100.0, 3)),
                   SolverConfig(trace_path=str(path)))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "node,depth,bound,n_fractional,branch_var"
        assert len(lines) >= 2

    def test_deterministic_rerun(self, rng):
        R = random_votes(rng, 4, 10)
        model_a = build_milp(R, ModelSpec(1.0, 100.0, 5))
        model_b = build_milp(R, ModelSpec(1.0, 100.0, 5))
        a = solve_milp(model_a)
        b = solve_milp(model_b)
        assert a.objective == b.objective
        assert np.array_equal(a.z, b.z)
        assert a.stats["nodes"] == b.stats["nodes"]


class TestBruteForce:
    def test_reference_instance(self):
        sol = brute_force_solve(reference_instance(), 2, 1.0, 100.0)
        assert sol.objective == 0.0
        assert sol.z.tolist() == [1, 0, 0, 1]  # lexicographically smallest optimum

    def test_empty_matrix(self):
        sol = brute_force_solve(VoteMatrix(np.zeros((0, 0), dtype=np.int8)), 0, 1.0, 100.0)
        assert sol.objective == 0.0

    def test_size_cap(self):
        R = VoteMatrix(np.ones((1, 21), dtype=np.int8))
        with pytest.raises(ValueError):
            brute_force_solve(R, 0, 1.0, 100.0)

    def test_tight_bounds_never_infeasible_here(self, rng):
        # with ell=1, u=2 every column is individually classifiable, and on
        # these small instances a global weighting always exists
        for _ in range(25):
            R = random_votes(rng, int(rng.integers(1, 5)), int(rng.integers(1, 7)))
            sol = brute_force_solve(R, int(rng.integers(0, R.n_points + 1)), 1.0, 2.0)
            assert sol.status == "optimal"

    def test_collect_all_contains_best(self):
        R = reference_instance()
        sol = brute_force_solve(R, 2, 1.0, 100.0, collect_all=True)
        assert tuple(sol.z.tolist()) in set(sol.stats["all_optimal_z"])
        assert all(abs(sum(z) - 2) == sol.objective for z in sol.stats["all_optimal_z"])
