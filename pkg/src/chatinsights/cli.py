"""Command-line entry points: replay, extract, evaluate, serve.

replay and extract run the full pipeline against scripted fixtures, so
their outputs are pure functions of the input files; evaluate does the
label arithmetic; serve starts the HTTP facade.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .engine import SessionEngine
from .evaluate import (
    LabelsError,
    evaluate_labels,
    load_labels,
    render_report,
    snapshot_insight_ids,
)
from .executor import ScriptedExecutor
from .gateway import GatewayError, RecordingProvider, ScriptedProvider
from .model import canonical_json, insight_to_dict, topic_to_dict
from .store import load_snapshot, save_session


def _load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _app_config(config_path) -> AppConfig:
    return load_config(config_path) if config_path else AppConfig()


def _scripted_engine(session_id: str, bundle: dict, config: AppConfig) -> SessionEngine:
    # the recording wrapper re-captures the consumed script so every replay
    # emits a transcript that is itself a valid fixture
    provider = RecordingProvider(ScriptedProvider(bundle.get("gateway", {})))
    executor = ScriptedExecutor.from_fixture(bundle.get("executor", {}))
    return SessionEngine(session_id, provider, executor, config=config)


def _write_outputs(out_dir: Path, engine: SessionEngine) -> None:
    save_session(out_dir, engine.state)
    if isinstance(engine.provider, RecordingProvider):
        engine.provider.save(out_dir / "transcript.fixture.json")
    ordered = sorted(engine.state.insights.values(), key=lambda i: i.created_seq)
    (out_dir / "insights.json").write_bytes(
        (canonical_json({"insights": [insight_to_dict(i) for i in ordered]}) + "\n").encode("utf-8")
    )
    topics = [topic_to_dict(engine.state.topics[k]) for k in sorted(engine.state.topics)]
    (out_dir / "topics.json").write_bytes(
        (canonical_json({"topics": topics}) + "\n").encode("utf-8")
    )


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Conversational data-analysis insight pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--fixtures", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--session-id", default="replay", show_default=True)
def replay(dataset: Path, fixtures: Path, out: Path, config_path, session_id: str) -> None:
    """Replay a scripted conversation; write snapshot, insights, topics."""
    bundle = _load_json(fixtures)
    queries = bundle.get("queries", [])
    if not isinstance(queries, list) or any(not isinstance(q, str) for q in queries):
        raise click.ClickException("fixture bundle needs 'queries': list of strings")
    engine = _scripted_engine(session_id, bundle, _app_config(config_path))
    try:
        engine.ingest_dataset(dataset.read_bytes(), dataset.stem)
        for query in queries:
            engine.post_message(query)
    except (GatewayError, ValueError, RuntimeError) as exc:
        raise click.ClickException(f"{exc} (seq {engine.state.next_seq()})")
    finally:
        engine.close()
    out.mkdir(parents=True, exist_ok=True)
    _write_outputs(out, engine)
    click.echo(
        f"replayed {len(queries)} turns: {len(engine.state.insights)} insights, "
        f"{len(engine.state.topics)} topics -> {out}"
    )


@main.command()
@click.option("--transcript", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dataset", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--fixtures", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
def extract(transcript: Path, dataset: Path, fixtures: Path, out: Path, config_path) -> None:
    """Run IE/IO over a pre-recorded turn transcript (no analysis chat)."""
    from .model import turn_from_dict

    raw = _load_json(transcript)
    turn_dicts = raw["turns"] if isinstance(raw, dict) else raw
    if not isinstance(turn_dicts, list):
        raise click.ClickException("transcript must be a list of turns or {'turns': [...]}")
    bundle = _load_json(fixtures)
    engine = _scripted_engine("extract", bundle, _app_config(config_path))
    try:
        engine.ingest_dataset(dataset.read_bytes(), dataset.stem)
        for turn_dict in turn_dicts:
            engine.ingest_turn(turn_from_dict(turn_dict))
    except (GatewayError, ValueError, RuntimeError, KeyError) as exc:
        raise click.ClickException(f"{exc} (seq {engine.state.next_seq()})")
    finally:
        engine.close()
    out.mkdir(parents=True, exist_ok=True)
    _write_outputs(out, engine)
    report = {
        "turns": len(turn_dicts),
        "insights": len(engine.state.insights),
        "topics": len(engine.state.topics),
        "counters": dict(sorted(engine.state.counters.items())),
    }
    (out / "report.json").write_bytes((canonical_json(report) + "\n").encode("utf-8"))
    click.echo(render_extract_report(report))


def render_extract_report(report: dict) -> str:
    counters = report["counters"]
    return (
        f"extracted {report['insights']} insights across {report['turns']} turns; "
        f"dropped evidence refs: {counters['evidence_dropped']}, "
        f"fabricated attributes: {counters['fabricated_attributes']}, "
        f"topic regenerations: {counters['topic_regenerations']}"
    )


@main.command()
@click.option("--snapshot", "snapshot_path", type=click.Path(exists=True, path_type=Path))
@click.option("--labels", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path))
def evaluate(snapshot_path, labels: Path, out) -> None:
    """Score a session against annotator labels; exact rational arithmetic."""
    try:
        label_data = load_labels(labels)
        known = None
        if snapshot_path:
            known = snapshot_insight_ids(load_snapshot(snapshot_path))
        report = evaluate_labels(label_data, known)
    except (LabelsError, json.JSONDecodeError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(render_report(report))
    if out:
        Path(out).write_bytes((canonical_json(report) + "\n").encode("utf-8"))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--fixtures", type=click.Path(exists=True, path_type=Path),
              help="Serve with scripted providers from this fixture bundle (offline demo).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(config_path, fixtures, host: str, port: int) -> None:
    """Start the HTTP API server."""
    import uvicorn

    from .server import create_app

    config = _app_config(config_path)
    engine_factory = None
    if fixtures:
        bundle = _load_json(Path(fixtures))

        def engine_factory(session_id: str) -> SessionEngine:
            return _scripted_engine(session_id, bundle, config)

    app = create_app(config=config, engine_factory=engine_factory)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
