import numpy as np
import pytest

from zigzag_pca.core_types import FiniteAlphabet, TransitionTensor


def three_letter_tensor() -> TransitionTensor:
    """Three-letter chain with an absorbing letter 0 and a positive block on
    {1, 2}; the standard worked example for the finite pipeline."""
    t = np.zeros((3, 3, 3))
    for i in range(3):
        t[0, i, i] = 1.0
        t[i, 0, i] = 1.0
    t[1, 1, 1] = t[1, 1, 2] = t[2, 2, 1] = t[2, 2, 2] = 0.5
    t[1, 2, 1] = t[2, 1, 2] = 0.8
    t[1, 2, 2] = t[2, 1, 1] = 0.2
    return TransitionTensor(FiniteAlphabet(3, ("0", "1", "2")), t)


@pytest.fixture(scope="session")
def full_tensor():
    return three_letter_tensor()


@pytest.fixture(scope="session")
def two_letter(full_tensor):
    """The positive {1, 2} block, reindexed to {0, 1}."""
    return full_tensor.restrict([1, 2])


def corpus_seeds(total: int = 200):
    """(kind, kappa, seed) triples: half factorizable, half generic."""
    out = []
    for i in range(total // 2):
        out.append(("factorized", 2 + i % 2, 1000 + i))
    for i in range(total - total // 2):
        out.append(("random", 2 + i % 2, 2000 + i))
    return out
