"""Grading and reporting: the exhaustive vote table, strict letter cleanup,
the judge fallback with per-round seeds, and aggregation against a naive
recount oracle."""

from __future__ import annotations

import itertools
import random

import pytest

from avharness.bench.dataset import (
    AUDIO_TYPES,
    CATEGORIES,
    CONTENT_TYPES,
    DURATION_BUCKETS,
    TASKS_BY_CATEGORY,
)
from avharness.bench.shuffling import shuffle_options
from avharness.errors import JoinMiss, WrongArity
from avharness.gateway import Gateway, ScriptedBackend, ScriptRule
from avharness.grading.grade import (
    VOTE_ROUNDS,
    Verdict,
    clean_letter,
    failed_verdict,
    grade,
    majority,
    verdict_from_dict,
    verdict_to_dict,
)
from avharness.grading.report import (
    DIMENSIONS,
    aggregate,
    build_tables,
    render_csv,
    render_markdown,
)
from conftest import make_item


class TestMajority:
    def test_all_32_patterns(self):
        for votes in itertools.product((0, 1), repeat=5):
            assert majority(list(votes)) == (sum(votes) >= 3), votes

    @pytest.mark.parametrize("n", [0, 1, 4, 6])
    def test_wrong_arity(self, n):
        with pytest.raises(WrongArity):
            majority([1] * n)


class TestCleanLetter:
    @pytest.mark.parametrize("text,expected", [
        ("B", "B"),
        ("B.", "B"),
        ("  B ,", "B"),
        ("(B)", "B"),
        ("[C].", "C"),
        ("Answer: B", "B"),
        ("The answer is B.", "B"),
        ("final answer: D", "D"),
        ("Option C", "C"),
        ("B Reason: the audio shows it", "B"),
        ("b", None),  # lowercase is not a clean shape
        ("B is my answer", None),  # trailing prose
        ("I think B", None),
        ("E", None),  # out of range for 4 options
        ("AB", None),
        ("", None),
        ("1", None),
    ])
    def test_shapes(self, text, expected):
        assert clean_letter(text, 4) == expected

    def test_range_respects_option_count(self):
        assert clean_letter("F", 6) == "F"
        assert clean_letter("F", 5) is None
        assert clean_letter("C", 2) is None


def _judge_gateway(responses: list[str]) -> Gateway:
    backend = ScriptedBackend(
        "grader", rules=[ScriptRule(role="grader", responses=responses)]
    )
    return Gateway(backends={"grader": backend})


class TestGrade:
    def _shuffled(self):
        return shuffle_options(make_item(n_options=4, gold_index=1), 5)

    def test_clean_letter_path(self):
        shuffled = self._shuffled()
        right = grade(shuffled, shuffled.gold_letter)
        assert right.correct and right.method == "letter_match"
        wrong_letter = next(l for l in "ABCD" if l != shuffled.gold_letter)
        wrong = grade(shuffled, wrong_letter)
        assert not wrong.correct and wrong.method == "letter_match"
        assert not wrong.manual_review

    def test_judge_path_majority_correct(self):
        gateway = _judge_gateway(["1", "0", "1", "1", "0"])
        verdict = grade(self._shuffled(), "the second option, definitely", gateway)
        assert verdict.method == "llm_vote"
        assert verdict.votes == (1, 0, 1, 1, 0)
        assert verdict.correct
        assert not verdict.manual_review

    def test_judge_path_majority_incorrect(self):
        gateway = _judge_gateway(["0", "0", "1", "0", "1"])
        verdict = grade(self._shuffled(), "something vague", gateway)
        assert not verdict.correct

    def test_judge_rounds_have_distinct_seeds(self):
        seeds = []

        class Spy(ScriptedBackend):
            def complete(self, req):
                seeds.append(req.decode.seed)
                return super().complete(req)

        gateway = Gateway(backends={
            "grader": Spy("grader", rules=[ScriptRule(role="grader", response="1")])
        })
        grade(self._shuffled(), "prose answer", gateway)
        assert seeds == list(range(VOTE_ROUNDS))

    def test_unparseable_vote_counts_zero_and_flags(self):
        gateway = _judge_gateway(["1", "1", "definitely!", "1", "0"])
        verdict = grade(self._shuffled(), "prose", gateway)
        assert verdict.votes == (1, 1, 0, 1, 0)
        assert verdict.correct  # three clean 1s still carry it
        assert verdict.manual_review

    def test_no_grader_binding_flags_manual_review(self):
        gateway = Gateway(backends={})
        verdict = grade(self._shuffled(), "prose with no letter", gateway)
        assert not verdict.correct
        assert verdict.manual_review
        assert verdict.method == "letter_match"

    def test_no_gateway_at_all(self):
        verdict = grade(self._shuffled(), "prose")
        assert not verdict.correct and verdict.manual_review

    def test_judge_prompt_contains_gold_option_text(self):
        prompts_seen = []

        class Spy(ScriptedBackend):
            def complete(self, req):
                prompts_seen.append(req.joined_text())
                return super().complete(req)

        gateway = Gateway(backends={
            "grader": Spy("grader", rules=[ScriptRule(role="grader", response="0")])
        })
        shuffled = self._shuffled()
        grade(shuffled, "who knows", gateway)
        gold_text = shuffled.options["ABCD".index(shuffled.gold_letter)]
        body = prompts_seen[0]
        assert f"{shuffled.gold_letter}. {gold_text}" in body
        assert "incorrect (0)" in body
        assert "Only return the result as a single digit." in body

    def test_failed_verdict_shape(self):
        verdict = failed_verdict("q9")
        assert verdict.failed and not verdict.correct and verdict.manual_review

    def test_verdict_dict_round_trip(self):
        for verdict in (
            Verdict("a", True, "letter_match"),
            Verdict("b", False, "llm_vote", votes=(1, 0, 0, 0, 1), manual_review=True),
            failed_verdict("c"),
        ):
            assert verdict_from_dict(verdict_to_dict(verdict)) == verdict


def _random_verdict_set(n: int, seed: int):
    """Synthetic verdicts + items across every dimension value."""
    rng = random.Random(seed)
    items = []
    verdicts = []
    buckets = {"<10s": 5.0, "10s-30s": 15.0, "30s-1min": 45.0,
               "1min-2min": 90.0, ">2min": 200.0}
    for i in range(n):
        category = rng.choice(CATEGORIES)
        item = make_item(
            item_id=f"v{i}",
            category=category,
            task=rng.choice(TASKS_BY_CATEGORY[category]),
            audio_type=rng.choice(AUDIO_TYPES),
            content_type=rng.choice(CONTENT_TYPES),
            duration=buckets[rng.choice(DURATION_BUCKETS)],
        )
        items.append(item)
        failed = rng.random() < 0.05
        verdicts.append(Verdict(
            item_id=item.id,
            correct=(not failed) and rng.random() < 0.6,
            method="letter_match",
            manual_review=rng.random() < 0.1,
            failed=failed,
        ))
    return verdicts, items


class TestAggregation:
    def test_two_hundred_item_recount_oracle(self):
        verdicts, items = _random_verdict_set(200, seed=13)
        by_id = {i.id: i for i in items}
        for dimension in DIMENSIONS:
            table = aggregate(verdicts, items, dimension)
            # Naive recount, entirely independent of the aggregation code.
            want_totals: dict[str, int] = {}
            want_correct: dict[str, int] = {}
            for v in verdicts:
                key = by_id[v.item_id].dimension_value(dimension)
                want_totals[key] = want_totals.get(key, 0) + 1
                want_correct[key] = want_correct.get(key, 0) + int(v.correct)
            got = {c.key: (c.n_items, c.n_correct) for c in table.cells}
            want = {k: (want_totals[k], want_correct.get(k, 0)) for k in want_totals}
            assert got == want, dimension
            assert table.n_failed == sum(1 for v in verdicts if v.failed)

    def test_weighted_cell_mean_equals_overall(self):
        verdicts, items = _random_verdict_set(200, seed=29)
        overall = aggregate(verdicts, items, "overall")
        overall_accuracy = overall.cells[0].accuracy
        for dimension in DIMENSIONS[1:]:
            table = aggregate(verdicts, items, dimension)
            weighted = sum(c.accuracy * c.n_items for c in table.cells) / table.total_items
            assert abs(weighted - overall_accuracy) < 0.05, dimension

    def test_join_miss(self):
        verdicts, items = _random_verdict_set(5, seed=1)
        with pytest.raises(JoinMiss):
            aggregate(verdicts, items[:-1], "overall")

    def test_empty_cells_omitted(self):
        items = [make_item(item_id="only", category="reasoning",
                           task="emotion_reasoning")]
        verdicts = [Verdict("only", True, "letter_match")]
        table = aggregate(verdicts, items, "category")
        assert [c.key for c in table.cells] == ["reasoning"]

    def test_cells_in_canonical_order(self):
        items = [
            make_item(item_id="r1", category="reasoning", task="emotion_reasoning"),
            make_item(item_id="r2", category="recognition", task="counting"),
        ]
        verdicts = [Verdict("r1", True, "letter_match"),
                    Verdict("r2", False, "letter_match")]
        table = aggregate(verdicts, items, "category")
        assert [c.key for c in table.cells] == ["recognition", "reasoning"]

    def test_unknown_dimension(self):
        with pytest.raises(ValueError):
            aggregate([], [], "sideways")


class TestRendering:
    def test_markdown_and_csv_deterministic(self):
        verdicts, items = _random_verdict_set(60, seed=3)
        tables = build_tables(verdicts, items)
        md_one, md_two = render_markdown(tables), render_markdown(tables)
        csv_one, csv_two = render_csv(tables), render_csv(tables)
        assert md_one == md_two
        assert csv_one == csv_two

    def test_accuracy_formatting_one_decimal(self):
        items = [make_item(item_id=f"x{i}") for i in range(3)]
        verdicts = [Verdict(f"x{i}", i == 0, "letter_match") for i in range(3)]
        md = render_markdown(build_tables(verdicts, items))
        assert "| all | 3 | 1 | 33.3 |" in md
        csv_text = render_csv(build_tables(verdicts, items))
        assert "overall,all,3,1,33.3" in csv_text.splitlines()[1]

    def test_failed_and_manual_footnote(self):
        items = [make_item(item_id="a"), make_item(item_id="b")]
        verdicts = [failed_verdict("a"), Verdict("b", True, "letter_match")]
        md = render_markdown(build_tables(verdicts, items))
        assert "1 item(s) failed before answering" in md
        assert "flagged for manual review" in md

    def test_no_footnote_when_clean(self):
        items = [make_item(item_id="a")]
        verdicts = [Verdict("a", True, "letter_match")]
        md = render_markdown(build_tables(verdicts, items))
        assert "_Note:" not in md

    def test_csv_header(self):
        csv_text = render_csv([])
        assert csv_text == "dimension,cell,n_items,n_correct,accuracy\n"
