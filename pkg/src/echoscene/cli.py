"""Operator command line: serve, catalog workflows, scripted sessions, ablation runs.

Exit codes: 0 success, 1 failed suggestions or runtime error, 2 bad
usage/config, 3 unknown suggestion id in a script. All commands honor
--provider mock | replay:<path> | external.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog as catalog_mod
from .engine import SuggestionEngine, SuggestionState
from .errors import ApplyFailed, EchoSceneError, NotFound
from .pipeline import CONDITIONS, PipelineConfig
from .providers import mock_provider, provider_from_spec, replay_provider
from .scene import coerce_field_value, render_top_view, Vector3
from .seeds import SEEDS, living_room_scene

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_UNKNOWN_ID = 3


def _packaged(name: str) -> Path:
    from importlib.resources import files

    return Path(str(files("echoscene").joinpath(f"data/{name}")))


def load_instructions(path: Path | None) -> list[str]:
    source = path or _packaged("ablation_instructions.json")
    data = json.loads(Path(source).read_text())
    return list(data["instructions"]) if isinstance(data, dict) else list(data)


def _load_catalog(path: Path | None) -> catalog_mod.Catalog:
    if path is None:
        return catalog_mod.fixture_catalog()
    return catalog_mod.load_catalog(path)


# --- serve ----------------------------------------------------------------------

def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    try:
        config = ServiceConfig.load(args.config) if args.config else ServiceConfig()
        if args.data_dir:
            config.data_dir = Path(args.data_dir)
        if args.port:
            config.port = args.port
        if args.provider:
            config.provider = args.provider
    except (EchoSceneError, OSError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        serve(config)
    except RuntimeError as exc:
        print(f"startup failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


# --- catalog ---------------------------------------------------------------------

def cmd_catalog_build(args) -> int:
    provider = provider_from_spec(args.provider, args.provider_config)
    thumbnails = sorted(p for p in Path(args.thumbnails).iterdir() if p.is_file())
    if not thumbnails:
        print(f"no thumbnail files in {args.thumbnails}", file=sys.stderr)
        return EXIT_USAGE
    embedder = catalog_mod.HashNgramEmbedder()
    catalog = catalog_mod.Catalog(embedder_id=embedder.embedder_id)
    for path in thumbnails:
        record = catalog_mod.annotate_asset(path.stem, path.read_bytes(), provider, thumbnail_ref=str(path))
        catalog.add(record)
        print(f"labeled {record.asset_id}: category={record.category}")
    catalog.ensure_embeddings(embedder)
    catalog_mod.save_catalog(catalog, args.out)
    print(f"wrote {len(catalog)} records to {args.out}")
    return EXIT_OK


def cmd_catalog_lint(args) -> int:
    source = args.catalog or _packaged("fixture_catalog.json")
    data = json.loads(Path(source).read_text())
    problems = catalog_mod.lint_records(data.get("records", []))
    for problem in problems:
        print(problem)
    print(f"{len(problems)} problem(s) in {source}")
    return EXIT_FAILED if problems else EXIT_OK


def cmd_catalog_search(args) -> int:
    catalog = _load_catalog(args.catalog)
    ranked = catalog_mod.search(
        catalog, args.query, category=args.category, embedder=catalog_mod.HashNgramEmbedder()
    )
    for asset_id, score in ranked[: args.limit]:
        print(f"{asset_id}\t{score:.6f}")
    return EXIT_OK


# --- run-script ----------------------------------------------------------------------

def _find_entry(engine: SuggestionEngine, suggestion_id: str):
    for session in engine.sessions.values():
        for entry in session.entries:
            if entry.suggestion_id == suggestion_id:
                return session, entry
    raise NotFound(f"no suggestion {suggestion_id!r}")


def run_script(engine: SuggestionEngine, steps: list[dict], *, lenient: bool = False) -> int:
    """Execute one scripted session against the engine; returns an exit code."""
    for i, step in enumerate(steps):
        if not isinstance(step, dict) or len(step) < 1:
            print(f"step {i}: not a step object", file=sys.stderr)
            return EXIT_USAGE
        try:
            if "instruct" in step:
                raw = step.get("config") or {}
                config = None
                if raw:
                    raw = dict(raw)
                    condition = raw.pop("condition", None)
                    config = (
                        PipelineConfig.from_condition(condition, **raw)
                        if condition
                        else PipelineConfig.from_dict(raw)
                    )
                session = engine.instruct(step["instruct"], config)
                session.wait()
            elif "apply" in step:
                if step["apply"] == "all":
                    for session in engine.sessions.values():
                        for entry in session.entries:
                            if entry.state is SuggestionState.PENDING:
                                try:
                                    engine.apply(session, entry.suggestion_id)
                                except ApplyFailed:
                                    if not lenient:
                                        raise
                else:
                    session, _ = _find_entry(engine, step["apply"])
                    engine.apply(session, step["apply"])
            elif "undo" in step:
                session, _ = _find_entry(engine, step["undo"])
                engine.undo(session, step["undo"])
            elif "regenerate" in step:
                session, _ = _find_entry(engine, step["regenerate"])
                engine.regenerate(session, step["regenerate"])
                session.wait()
            elif "manual" in step:
                op = dict(step["manual"])
                kind = op.pop("op", None)
                if kind == "add":
                    position = op.pop("position", None)
                    engine.manual_add(
                        position=coerce_field_value("position", position) if position else Vector3(0.0, 0.0, 0.0),
                        **op,
                    )
                elif kind == "mutate":
                    engine.manual_mutate(op["name"], op["field"], coerce_field_value(op["field"], op["value"]))
                elif kind == "destroy":
                    engine.manual_destroy(op["name"])
                elif kind == "undo":
                    engine.manual_undo()
                else:
                    print(f"step {i}: unknown manual op {kind!r}", file=sys.stderr)
                    return EXIT_USAGE
            else:
                print(f"step {i}: unknown step kind {sorted(step)}", file=sys.stderr)
                return EXIT_USAGE
        except NotFound as exc:
            print(f"step {i}: {exc}", file=sys.stderr)
            return EXIT_UNKNOWN_ID
        except ApplyFailed as exc:
            print(f"step {i}: {exc}", file=sys.stderr)
            if not lenient:
                return EXIT_FAILED
        except EchoSceneError as exc:
            print(f"step {i}: {exc}", file=sys.stderr)
            return EXIT_FAILED
    if not lenient:
        for session in engine.sessions.values():
            for entry in session.entries:
                if entry.state is SuggestionState.FAILED:
                    print(
                        f"suggestion {entry.suggestion_id} failed: "
                        + "; ".join(d.message for d in entry.diagnostics[-2:]),
                        file=sys.stderr,
                    )
                    return EXIT_FAILED
    return EXIT_OK


def cmd_run_script(args) -> int:
    try:
        steps = json.loads(Path(args.script).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read script: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not isinstance(steps, list):
        print("script must be a JSON array of steps", file=sys.stderr)
        return EXIT_USAGE
    provider = provider_from_spec(args.provider, args.provider_config)
    scene = SEEDS[args.seed]("script-scene")
    engine = SuggestionEngine(
        scene, provider, PipelineConfig(), catalog=_load_catalog(args.catalog)
    )
    code = run_script(engine, steps, lenient=args.lenient)
    if args.record_transcript:
        provider.transcript.save(args.record_transcript)
    print(scene.serialize_parameters())
    return code


# --- ablate -------------------------------------------------------------------------

def run_ablation(
    instructions: list[str],
    conditions: list[str],
    out_dir: Path,
    *,
    provider_spec: str = "mock",
    replay_from: Path | None = None,
    resolution: int = 256,
) -> list[Path]:
    """One cell per (condition, instruction): final scene, top view, transcript."""
    cells = []
    for condition in conditions:
        for index, instruction in enumerate(instructions):
            cell_dir = out_dir / condition / str(index)
            cell_dir.mkdir(parents=True, exist_ok=True)
            if replay_from is not None:
                provider = replay_provider(replay_from / condition / str(index) / "transcript.jsonl")
            elif provider_spec == "mock":
                provider = mock_provider()
            else:
                provider = provider_from_spec(provider_spec)
            scene = living_room_scene(f"ablate-{condition}-{index}")
            engine = SuggestionEngine(
                scene,
                provider,
                PipelineConfig.from_condition(condition),
                catalog=catalog_mod.fixture_catalog(),
            )
            session = engine.instruct(instruction)
            session.wait()
            for entry in session.entries:
                if entry.state is SuggestionState.PENDING:
                    try:
                        engine.apply(session, entry.suggestion_id)
                    except ApplyFailed:
                        pass  # cell keeps going; the transcript shows what happened
            (cell_dir / "scene.json").write_text(scene.serialize_parameters())
            ppm, _ = render_top_view(scene, resolution)
            (cell_dir / "topview.ppm").write_bytes(ppm)
            provider.transcript.save(cell_dir / "transcript.jsonl")
            cells.append(cell_dir)
    return cells


def cmd_ablate(args) -> int:
    conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
    unknown = [c for c in conditions if c not in CONDITIONS]
    if unknown:
        print(f"unknown conditions: {unknown}; known: {sorted(CONDITIONS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        instructions = load_instructions(args.instructions)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot read instructions: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cells = run_ablation(
        instructions,
        conditions,
        Path(args.out),
        provider_spec=args.provider,
        replay_from=Path(args.replay_from) if args.replay_from else None,
        resolution=args.resolution,
    )
    print(f"wrote {len(cells)} cells under {args.out}")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------------

def _add_provider_args(parser) -> None:
    parser.add_argument("--provider", default="mock", help="mock | replay:<path> | external")
    parser.add_argument("--provider-config", type=Path, default=None, help="provider.toml for external")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echoscene")
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument("--config", type=Path, default=None, help="service.toml")
    serve_p.add_argument("--data-dir", type=Path, default=None)
    serve_p.add_argument("--port", type=int, default=None)
    serve_p.add_argument("--provider", default=None)
    serve_p.set_defaults(func=cmd_serve)

    catalog_p = sub.add_parser("catalog", help="labeling-module workflows")
    catalog_sub = catalog_p.add_subparsers(dest="catalog_command", required=True)

    build_p = catalog_sub.add_parser("build", help="label a directory of thumbnails")
    build_p.add_argument("--thumbnails", type=Path, required=True)
    build_p.add_argument("--out", type=Path, default=Path("catalog.json"))
    _add_provider_args(build_p)
    build_p.set_defaults(func=cmd_catalog_build)

    lint_p = catalog_sub.add_parser("lint", help="flag empty descriptions, banned categories, duplicates")
    lint_p.add_argument("--catalog", type=Path, default=None)
    lint_p.set_defaults(func=cmd_catalog_lint)

    search_p = catalog_sub.add_parser("search", help="rank assets for a description")
    search_p.add_argument("--query", required=True)
    search_p.add_argument("--category", default=None)
    search_p.add_argument("--catalog", type=Path, default=None)
    search_p.add_argument("--limit", type=int, default=10)
    search_p.set_defaults(func=cmd_catalog_search)

    script_p = sub.add_parser("run-script", help="execute a scripted design session")
    script_p.add_argument("script", type=Path)
    script_p.add_argument("--seed", choices=sorted(SEEDS), default="empty")
    script_p.add_argument("--catalog", type=Path, default=None)
    script_p.add_argument("--lenient", action="store_true")
    script_p.add_argument("--record-transcript", type=Path, default=None)
    _add_provider_args(script_p)
    script_p.set_defaults(func=cmd_run_script)

    ablate_p = sub.add_parser("ablate", help="run the instruction x condition grid")
    ablate_p.add_argument("--instructions", type=Path, default=None)
    ablate_p.add_argument("--conditions", default=",".join(CONDITIONS))
    ablate_p.add_argument("--out", type=Path, required=True)
    ablate_p.add_argument("--replay-from", type=Path, default=None)
    ablate_p.add_argument("--resolution", type=int, default=256)
    _add_provider_args(ablate_p)
    ablate_p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except EchoSceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
