"""Shared fixtures: repo paths, scripted bundles, and replayed sessions."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from chatinsights.config import AppConfig
from chatinsights.engine import SessionEngine
from chatinsights.executor import ScriptedExecutor
from chatinsights.gateway import ScriptedProvider

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def load_bundle(name: str) -> dict:
    return json.loads((FIXTURES / name / "fixture.json").read_text(encoding="utf-8"))


def scripted_engine(bundle: dict, session_id: str = "test", config: AppConfig | None = None) -> SessionEngine:
    return SessionEngine(
        session_id,
        ScriptedProvider(bundle.get("gateway", {})),
        ScriptedExecutor.from_fixture(bundle.get("executor", {})),
        config=config or AppConfig(),
    )


def run_bundle(name: str, session_id: str, dataset: str = "cars/cars.csv",
               config: AppConfig | None = None) -> SessionEngine:
    """Replay a fixture bundle end to end and return the finished engine."""
    bundle = load_bundle(name)
    engine = scripted_engine(bundle, session_id, config)
    engine.ingest_dataset((FIXTURES / dataset).read_bytes(), Path(dataset).stem)
    for query in bundle["queries"]:
        engine.post_message(query)
    engine.close()
    return engine


@pytest.fixture
def cars_csv() -> bytes:
    return (FIXTURES / "cars" / "cars.csv").read_bytes()


@pytest.fixture(scope="session")
def cars_session() -> SessionEngine:
    """The golden 10-turn session, replayed once per test run."""
    return run_bundle("cars", "golden")


@pytest.fixture(scope="session")
def negative_session() -> SessionEngine:
    return run_bundle("negative", "neg")


@pytest.fixture(scope="session")
def threshold_session() -> SessionEngine:
    return run_bundle("threshold", "thr")
