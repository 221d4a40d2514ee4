"""Versioned prompt templates with named slots.

Templates are plain text files shipped next to this module; slots use
``string.Template`` syntax ($name) so literal JSON braces in the template
bodies need no escaping. Each template's content hash is recorded in the
session for provenance.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources
from string import Template

TEMPLATE_NAMES = (
    "analysis_system",
    "ie_agent",
    "ie_few_shots",
    "semantic_score",
    "score_few_shots",
    "io_context",
    "io_topic",
)


@lru_cache(maxsize=None)
def load(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    ref = resources.files(__name__) / f"{name}.txt"
    return ref.read_text(encoding="utf-8")


def render(name: str, **slots: str) -> str:
    return Template(load(name)).substitute(slots)


@lru_cache(maxsize=None)
def template_hash(name: str) -> str:
    return hashlib.sha256(load(name).encode("utf-8")).hexdigest()


def all_hashes() -> dict[str, str]:
    return {name: template_hash(name) for name in TEMPLATE_NAMES}
