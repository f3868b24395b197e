#!/usr/bin/env python3
"""Walk one suggestion lifecycle on the furnished living room, offline.

Shows the whole loop: instruction -> suggestions -> apply all -> selective
undo of the first suggestion -> regenerate it -> apply again.
"""

from echoscene.catalog import fixture_catalog
from echoscene.engine import SuggestionEngine, SuggestionState
from echoscene.pipeline import PipelineConfig
from echoscene.providers import mock_provider
from echoscene.seeds import living_room_scene


def show(engine, session, note):
    states = {e.suggestion_id: e.state.value for e in session.entries}
    print(f"{note}: {states} | {len(engine.scene.objects)} objects, revision {engine.scene.revision}")


def main() -> None:
    engine = SuggestionEngine(
        living_room_scene("demo"),
        mock_provider(),
        PipelineConfig(),
        catalog=fixture_catalog(),
    )
    session = engine.instruct("Set up a home theater area for movie nights.")
    session.wait()
    show(engine, session, "after instruct")

    for entry in session.entries:
        if entry.state is SuggestionState.PENDING:
            engine.apply(session, entry.suggestion_id)
    show(engine, session, "after apply-all")

    first = session.entries[0].suggestion_id
    engine.undo(session, first)
    show(engine, session, f"after undo {first}")

    engine.regenerate(session, first)
    session.wait()
    if session.entries[0].state is SuggestionState.PENDING:
        engine.apply(session, first)
    show(engine, session, f"after regenerate+apply {first}")

    print("\nfinal scene:")
    print(engine.scene.serialize_parameters())


if __name__ == "__main__":
    main()
