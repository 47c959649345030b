import pytest

from fedirec.ranking import RankedList, format_ranked_list, write_ranked_list
from tests.conftest import u, users


TARGET = u("subject")


def make(items, requested_k=None):
    return RankedList(
        target=TARGET,
        system_id="sys",
        items=tuple(items),
        requested_k=requested_k if requested_k is not None else len(items),
    )


class TestInvariants:
    def test_target_in_items_rejected(self):
        with pytest.raises(ValueError):
            make([(TARGET, 1.0)])

    def test_duplicate_items_rejected(self):
        a = u("a")
        with pytest.raises(ValueError):
            make([(a, 2.0), (a, 1.0)])

    def test_increasing_scores_rejected(self):
        a, b = users(2)
        with pytest.raises(ValueError):
            make([(a, 1.0), (b, 2.0)])

    def test_ties_allowed(self):
        a, b = users(2)
        rl = make([(a, 1.0), (b, 1.0)])
        assert rl.k == 2

    def test_empty_list_allowed(self):
        rl = make([], requested_k=5)
        assert rl.k == 0
        assert rl.short


class TestAccessors:
    def test_rank_of_present_and_absent(self):
        a, b, c = users(3)
        rl = make([(a, 3.0), (b, 2.0)])
        assert rl.rank_of(a) == 1
        assert rl.rank_of(b) == 2
        assert rl.rank_of(c) == 3  # one past the end

    def test_users_in_rank_order(self):
        a, b, c = users(3)
        rl = make([(c, 3.0), (a, 2.0), (b, 1.0)])
        assert rl.users == (c, a, b)

    def test_short_flag(self):
        a = u("a")
        assert make([(a, 1.0)], requested_k=3).short
        assert not make([(a, 1.0)], requested_k=1).short


class TestExport:
    def test_format_shape(self):
        a, b = users(2)
        text = format_ranked_list(make([(a, 0.5), (b, 0.25)]))
        lines = text.splitlines()
        assert lines[0].startswith("# fedirec-ranking system=sys")
        assert lines[1] == f"rank 1 {a.canonical} 0.5"
        assert lines[2] == f"rank 2 {b.canonical} 0.25"

    def test_write_round_trip_text(self, tmp_path):
        a = u("a")
        rl = make([(a, 1.0)])
        path = tmp_path / "list.txt"
        write_ranked_list(rl, path)
        assert path.read_text() == format_ranked_list(rl)
