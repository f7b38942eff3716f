"""Regenerate docs/openapi.json from the live app definition."""

import json
import sys
import tempfile
from pathlib import Path

from drumweave.dataset import save_corpus, synth_corpus
from drumweave.service import ServiceConfig, create_app


def main() -> int:
    repo = Path(__file__).resolve().parent.parent
    with tempfile.TemporaryDirectory() as tmp:
        corpus = synth_corpus({"Techno": 1}, seed=0)
        save_corpus(corpus, Path(tmp) / "corpus")
        app = create_app(ServiceConfig(corpus_path=Path(tmp) / "corpus"))
        spec = app.openapi()
    out = repo / "docs" / "openapi.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
