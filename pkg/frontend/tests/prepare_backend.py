"""Build the cached backend artifacts for the UI end-to-end test.

Creates a small corpus plus VAE/GAN checkpoints under tests/.cache so the
e2e test can launch the real service. Idempotent: skips work when the
cache is already complete.
"""

import sys
from pathlib import Path

CACHE = Path(__file__).resolve().parent / ".cache"


def main() -> int:
    marker = CACHE / "ready"
    if marker.exists():
        print(f"backend cache ready at {CACHE}")
        return 0
    CACHE.mkdir(exist_ok=True)

    from drumweave.dataset import save_corpus, synth_corpus
    from drumweave.gan import GanModel, SMALL_GAN_ARCHITECTURE
    from drumweave.nn import Prng
    from drumweave.vae import SMALL_ARCHITECTURE, VaeTrainConfig, train

    corpus = synth_corpus({"Techno": 6, "Electro": 6, "IDM": 6}, seed=91)
    save_corpus(corpus, CACHE / "corpus")

    config = VaeTrainConfig(epochs=10, batch_size=6, seed=92)
    result = train(corpus.patterns, config, arch=SMALL_ARCHITECTURE)
    result.model.save(CACHE / "vae", {"seed": 92})

    GanModel(SMALL_GAN_ARCHITECTURE, rng=Prng(93)).save(CACHE / "gan", {"seed": 93})

    marker.write_text("ok\n")
    print(f"backend cache built at {CACHE}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
