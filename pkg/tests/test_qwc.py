import numpy as np
import pytest

from conftest import h2_model, random_sum
from mfpart.pauli import PauliSum, PauliWord, qwc_commutes
from mfpart.qwc import qwc_partition


def test_groups_cover_terms_exactly_once():
    rng = np.random.default_rng(0)
    h = random_sum(rng, 4, 12)
    grouping = qwc_partition(h)
    total = PauliSum.zero(4)
    seen = 0
    for group in grouping.groups:
        total = total + group
        seen += group.n_terms
    assert seen == h.n_terms
    assert total.allclose(h)


@pytest.mark.parametrize("seed", range(5))
def test_groups_are_internally_qwc(seed):
    rng = np.random.default_rng(seed)
    grouping = qwc_partition(random_sum(rng, 5, 15))
    for group in grouping.groups:
        words = [w for w, _ in group]
        assert all(qwc_commutes(a, b) for a in words for b in words)


def test_grouping_is_deterministic():
    rng = np.random.default_rng(3)
    h = random_sum(rng, 4, 10)
    a = qwc_partition(h)
    b = qwc_partition(h)
    assert [g.sorted_terms() for g in a.groups] == [g.sorted_terms() for g in b.groups]


def test_single_group_when_all_compatible():
    h = PauliSum.from_terms(
        3,
        [
            (PauliWord.from_axes(3, {0: "Z"}), 1.0),
            (PauliWord.from_axes(3, {0: "Z", 1: "Z"}), 0.5),
            (PauliWord.from_axes(3, {2: "Z"}), -0.25),
        ],
    )
    assert qwc_partition(h).n_groups == 1


def test_h2_shape_gives_three_groups():
    rng = np.random.default_rng(42)
    assert qwc_partition(h2_model(rng)).n_groups == 3


def test_empty_sum_rejected():
    with pytest.raises(ValueError):
        qwc_partition(PauliSum.zero(2))
