import numpy as np
import pytest

from c2rf.forest import VoteMatrix


def random_votes(rng, t, m):
    return VoteMatrix(rng.choice([-1, 1], size=(t, m)).astype(np.int8))


def structured_votes(rng, t=6, distinct_cols=4, copies=(2, 10), unanimous=(1, 6),
                     dup_trees=(0, 3)):
    """Vote matrix with injected duplicate columns, unanimous columns, and
    duplicate rows; the structure the presolve reductions target."""
    base = rng.choice([-1, 1], size=(t, distinct_cols)).astype(np.int8)
    cols = [base[:, rng.integers(0, distinct_cols)]
            for _ in range(int(rng.integers(*copies)))]
    for _ in range(int(rng.integers(*unanimous))):
        cols.append(np.full(t, rng.choice([-1, 1]), dtype=np.int8))
    rng.shuffle(cols)
    votes = np.array(cols).T.copy()
    extra = [votes[rng.integers(0, t)] for _ in range(int(rng.integers(*dup_trees)))]
    if extra:
        votes = np.vstack([votes] + extra)
    return VoteMatrix(votes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
