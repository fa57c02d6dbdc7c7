"""avharness: a multi-agent audio-visual question answering pipeline and the
benchmark harness that evaluates it.

The pieces, bottom up: `media` probes assets and extracts frames/clips into a
content-addressed cache; `gateway` routes every model call through one
fingerprinted, record/replayable chokepoint; `perception` produces transcripts
and per-clip audio descriptions; `pipeline` runs the plan/execute/reflect
agents; `bench` loads datasets, shuffles options, and drives suites; `grading`
scores answers and renders reports; `cli` ties it together.
"""

__version__ = "0.1.0"
