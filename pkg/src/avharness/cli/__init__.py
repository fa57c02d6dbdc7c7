"""Command line layer: entry point, run manifest, fixture generation."""

from .fixtures import generate_fixtures
from .main import cli
from .manifest import MANIFEST_NAME, build_manifest, write_manifest

__all__ = [
    "MANIFEST_NAME",
    "build_manifest",
    "cli",
    "generate_fixtures",
    "write_manifest",
]
