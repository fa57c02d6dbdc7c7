"""Grading: deterministic letter match first, five-round judge vote second.

The deterministic path only accepts unambiguous short answers ("B", "(B).",
"Answer: B", "B Reason: ..."). Prose goes to the judge; with no judge bound it
is marked incorrect and flagged for manual review. A letter past the item's
option count is likewise rejected here, never silently wrapped."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .. import prompts
from ..errors import WrongArity
from ..gateway import ChatRequest, DecodeParams, Gateway
from ..bench.shuffling import ShuffledItem

log = logging.getLogger(__name__)

VOTE_ROUNDS = 5

_PREFIX_RE = re.compile(
    r"^\s*(?:the\s+)?(?:final\s+)?(?:answer|option|choice)\s*(?:is)?\s*[::]?\s*",
    re.IGNORECASE,
)
_CLEAN_LETTER_RE = re.compile(
    r"^[\(\[]?([A-F])[\)\]]?\s*[.,::]?\s*(?:Reason\s*[::].*)?$",
    re.DOTALL,
)


@dataclass(frozen=True)
class Verdict:
    item_id: str
    correct: bool
    method: str  # "letter_match" | "llm_vote"
    votes: tuple[int, ...] | None = None
    manual_review: bool = False
    failed: bool = False  # record never produced an answer (pipeline fault)


def clean_letter(text: str, n_options: int) -> str | None:
    """Extract a letter only from unambiguous short-answer shapes, and only if
    it is within the item's option range."""
    candidate = _PREFIX_RE.sub("", text.strip(), count=1)
    match = _CLEAN_LETTER_RE.match(candidate)
    if not match:
        return None
    letter = match.group(1)
    if prompts.LETTERS.index(letter) >= n_options:
        return None
    return letter


def majority(votes: list[int] | tuple[int, ...]) -> bool:
    """Correct iff at least three of exactly five votes say so."""
    if len(votes) != VOTE_ROUNDS:
        raise WrongArity(f"majority needs exactly {VOTE_ROUNDS} votes, got {len(votes)}")
    return sum(votes) >= 3


def _parse_vote(text: str) -> int | None:
    stripped = text.strip()
    if stripped == "1":
        return 1
    if stripped == "0":
        return 0
    return None


def grade(shuffled: ShuffledItem, answer_text: str, gateway: Gateway | None = None,
          grader_binding: str = "grader") -> Verdict:
    """Grade one answer against the shuffled gold letter."""
    letter = clean_letter(answer_text, len(shuffled.options))
    if letter is not None:
        return Verdict(
            item_id=shuffled.id,
            correct=letter == shuffled.gold_letter,
            method="letter_match",
        )
    if gateway is None or grader_binding not in getattr(gateway, "backends", {}):
        return Verdict(
            item_id=shuffled.id, correct=False, method="letter_match", manual_review=True
        )
    instruction = prompts.grader_instruction(
        shuffled.question, shuffled.options, shuffled.gold_letter, answer_text
    )
    votes: list[int] = []
    unparseable = False
    # Distinct per-round seeds keep the five fingerprints distinct, so replay
    # preserves vote diversity instead of collapsing all rounds to one entry.
    for round_index in range(VOTE_ROUNDS):
        request = ChatRequest(
            role_tag="grader",
            text_parts=(instruction,),
            decode=DecodeParams(temperature=0.0, seed=round_index),
        )
        response = gateway.send(grader_binding, request)
        vote = _parse_vote(response.text)
        if vote is None:
            unparseable = True
            vote = 0
        votes.append(vote)
    return Verdict(
        item_id=shuffled.id,
        correct=majority(votes),
        method="llm_vote",
        votes=tuple(votes),
        manual_review=unparseable,
    )


def failed_verdict(item_id: str) -> Verdict:
    """Verdict for a record that never produced an answer: incorrect, counted
    in the report footnote."""
    return Verdict(
        item_id=item_id, correct=False, method="letter_match",
        manual_review=True, failed=True,
    )


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "item_id": verdict.item_id,
        "correct": verdict.correct,
        "method": verdict.method,
        "votes": list(verdict.votes) if verdict.votes is not None else None,
        "manual_review": verdict.manual_review,
        "failed": verdict.failed,
    }


def verdict_from_dict(data: dict) -> Verdict:
    votes = data.get("votes")
    return Verdict(
        item_id=data["item_id"],
        correct=bool(data["correct"]),
        method=data["method"],
        votes=tuple(votes) if votes is not None else None,
        manual_review=bool(data.get("manual_review", False)),
        failed=bool(data.get("failed", False)),
    )
