import numpy as np
import pytest

from wctops import CondExp, Mfunc, make_partition, make_space
from wctops.cli import random_instance


@pytest.fixture
def uniform4():
    """Uniform 4-atom probability space with the {0,1}/{2,3} partition."""
    space = make_space([0.25, 0.25, 0.25, 0.25])
    partition = make_partition(space, [[0, 1], [2, 3]])
    return space, partition, CondExp(space, partition)


def random_instances(seed, count, dim_range=(2, 10), block_range=(1, 4), stratum=None):
    rng = np.random.default_rng(seed)
    return [
        random_instance(rng, dim_range, block_range, stratum=stratum, label=f"i{i}")
        for i in range(count)
    ]


def mf(values):
    return Mfunc(np.asarray(values))
