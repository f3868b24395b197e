#!/usr/bin/env python3
"""Run the full 9-instruction x 4-condition grid with the mock provider.

Writes cells under out/ablation/ and prints one summary line per cell:
how many suggestions were generated and how many objects the final scene
holds. Pass --replay-from OUT to reproduce a previous run byte-exactly.
"""

import argparse
import json
from pathlib import Path

from echoscene.cli import load_instructions, run_ablation
from echoscene.pipeline import CONDITIONS


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("out/ablation"))
    parser.add_argument("--replay-from", type=Path, default=None)
    args = parser.parse_args()

    instructions = load_instructions(None)
    cells = run_ablation(
        instructions, list(CONDITIONS), args.out, replay_from=args.replay_from
    )
    for cell in cells:
        scene = json.loads((cell / "scene.json").read_text())
        transcript = (cell / "transcript.jsonl").read_text().splitlines()
        print(f"{cell.relative_to(args.out)}: {len(scene)} objects, {len(transcript)} provider calls")
    print(f"\n{len(cells)} cells under {args.out}")


if __name__ == "__main__":
    main()
