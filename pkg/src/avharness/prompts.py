"""Every prompt template in one place.

The agent and baseline templates are load-bearing: downstream parsing and the
scripted fixtures key on their exact wording, so edit with care and keep the
formatting helpers (`fmt_seconds`, `letter_range`, `question_block`) in sync
with the tests.
"""

from __future__ import annotations

LETTERS = "ABCDEF"
MAX_OPTIONS = len(LETTERS)


def fmt_seconds(value: float) -> str:
    """43.0 -> '43', 7.5 -> '7.5'."""
    return f"{value:g}"


def letter_range(n_options: int) -> str:
    """'A, B, C, D' for four options."""
    return ", ".join(LETTERS[:n_options])


def question_block(question: str, options: list[str] | tuple[str, ...]) -> str:
    lines = [question]
    for i, option in enumerate(options):
        lines.append(f"{LETTERS[i]}. {option}")
    return "\n".join(lines)


def unit_context(start: float, end: float, subtitle: str, description: str,
                 video_description: str | None = None) -> str:
    """The per-window context line that precedes each ChatRequest text part."""
    line = (
        f"The above frames and audio are extracted from {fmt_seconds(start)}s to "
        f"{fmt_seconds(end)}s. Subtitle: {subtitle}. Audio description: {description}."
    )
    if video_description is not None:
        line += f" Video description: {video_description}."
    return line


def planner_instruction(question: str, duration: float) -> str:
    return (
        f"The video lasts for {fmt_seconds(duration)} seconds. Please carefully read the "
        "questions related to audio-visual perception, understanding, and reasoning "
        "abilities, closely observe the video frames, audio, subtitle, and audio "
        "descriptions. Please determine which time segment(s) of the video provide the "
        "necessary information to answer the question and provide the corresponding "
        f"reasoning. Question: {question} No need to answer the question itself, just "
        "identify the time range(s) in [start time] to [end time] and provide the "
        "corresponding reasoning.\n"
        'Reply me with a structured output in JSON format: "{"time_segments": '
        '[{ "start_time": , "end_time": , "reasoning": }...]}" '
        "If there is no content related to the question, only answer 'No.'"
    )


def executor_instruction(question: str, options: tuple[str, ...]) -> str:
    return (
        "Please closely observe the video frames, audio, subtitle, and audio "
        "descriptions. Based on your observations, select the best answer to the "
        f"following multiple-choice question. Respond with only the letter "
        f"({letter_range(len(options))}) of the correct option, followed by 'Reason:' "
        f"and your reasoning. Question: {question_block(question, options)}"
    )


def decider_instruction(responses: list[tuple[str, str]], question: str,
                        options: tuple[str, ...]) -> str:
    """`responses` is (answer, reason) per executor, in executor order."""
    lines = []
    for i, (answer, reason) in enumerate(responses, start=1):
        lines.append(f"Executor {i}'s response: {answer}, {reason}.")
    count_phrase = "two" if len(responses) == 2 else "multiple"
    lines.append(
        f"For this multiple-choice question, there are {count_phrase} different answers. "
        "Based on the all video frames, audio, subtitle, and audio descriptions, "
        "determine which option is correct. Respond with only the letter "
        f"({letter_range(len(options))}) of the correct option. "
        f"Question: {question_block(question, options)}"
    )
    return " ".join(lines)


def baseline_instruction(question: str, options: tuple[str, ...],
                         subtitle: str | None = None) -> str:
    subtitle_clause = ""
    if subtitle is not None:
        subtitle_clause = f"The subtitle of this video: {subtitle}. "
    return (
        f"These are the frames of the video and the corresponding audio. {subtitle_clause}"
        "Please select the best answer to the following multiple-choice question based on "
        f"the video. Respond with only the letter ({letter_range(len(options))}) of the "
        f"correct option.\nQuestion: {question_block(question, options)}"
    )


def grader_instruction(question: str, options: tuple[str, ...], gold_letter: str,
                       answer: str) -> str:
    gold_index = LETTERS.index(gold_letter)
    gold = f"{gold_letter}. {options[gold_index]}"
    return (
        f"Given the question {question_block(question, options)}, the correct answer is "
        f"the option {gold}. The respondent's answer is {answer}. Determine if the "
        "respondent's answer is correct (1) or incorrect (0). If uncertain, also provide "
        "0. Only return the result as a single digit."
    )


def describe_instruction(subtitle: str, speech_present: bool) -> str:
    if speech_present:
        return (
            f"The subtitle of this audio: {subtitle}. Please describe the background "
            "sounds and music. Do not respond using list or dictionary formats. Instead, "
            "write your response in full sentences."
        )
    return (
        "This audio does not contain clear speech. Please the background sounds, emotion "
        "and music. Do not respond using list or dictionary formats. Instead, write your "
        "response in full sentences."
    )


TRANSCRIBE_INSTRUCTION = (
    "Transcribe the speech in this audio. Return a JSON array where each element is an "
    'object with keys "start", "end", and "text" (times are seconds from the start of '
    "the audio). Return [] if there is no speech."
)
