"""Command-line entry point.

Subcommands: dataset gen/ingest, train vae/gan, interpolate, swirl, pca,
gradcheck, serve. A JSON config file (--config or $DRUMWEAVE_CONFIG) can
supply any flag, keyed by subcommand ("train vae": {"epochs": 200});
explicit flags win. All randomness flows from --seed and every run
prints the effective seed. Report paths write figures next to their
delimited outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

CONFIG_ENV_VAR = "DRUMWEAVE_CONFIG"

DEFAULTS: dict[str, dict] = {
    "dataset gen": {"counts": "608,690,484", "tempo": 129.0, "out": "corpus"},
    "dataset ingest": {"dir": None, "out": None},
    "train vae": {"corpus": None, "out": "vae-ckpt", "epochs": 500, "batch": 4,
                  "lr": 3e-3, "beta": None, "warmup": 0.5, "arch": "full"},
    "train gan": {"corpus": None, "out": "gan-ckpt", "epochs": 300, "batch": 16,
                  "lr": 1e-3, "arch": "full", "noise": 0.15},
    "interpolate": {"corpus": None, "vae": None, "start": None, "goal": None,
                    "length": 6, "method": "slerp", "floor": 0.1,
                    "out": "transition"},
    "swirl": {"gan": None, "steps": 124, "omegas": "2,19,-20,20",
              "floor": 0.1, "out": "swirl"},
    "pca": {"corpus": None, "vae": None, "transitions": 0, "length": 6,
            "out": "pca"},
    "gradcheck": {"model": "vae-small", "samples": 6, "tolerance": 1e-4},
    "serve": {"corpus": None, "vae": None, "gan": None, "host": "127.0.0.1",
              "port": 8077, "ui": None},
}


class CliError(RuntimeError):
    pass


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from None


def _resolve(section: str, args: argparse.Namespace) -> dict:
    """defaults < config-file section < explicit flags."""
    config = _load_config(args.config)
    merged = dict(DEFAULTS[section])
    for key, value in config.get(section, {}).items():
        if key not in merged:
            raise CliError(f"config section {section!r} has unknown key {key!r}")
        merged[key] = value
    for key in merged:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            merged[key] = value
    return merged


def _resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    return int(_load_config(args.config).get("seed", 0))


def _require(opts: dict, *keys: str) -> None:
    for key in keys:
        if opts[key] is None:
            raise CliError(f"--{key} is required (flag or config)")


def _parse_counts(text: str) -> dict[str, int]:
    parts = [int(v) for v in str(text).split(",")]
    if len(parts) != 3:
        raise CliError("--counts expects three comma-separated numbers: IDM,Electro,Techno")
    return {"IDM": parts[0], "Electro": parts[1], "Techno": parts[2]}


def _parse_omegas(text: str) -> tuple[int, int, int, int]:
    parts = [int(v) for v in str(text).split(",")]
    if len(parts) != 4:
        raise CliError("--omegas expects four comma-separated integers")
    return tuple(parts)  # type: ignore[return-value]


# --- subcommand implementations ---------------------------------------------

def cmd_dataset_gen(opts: dict, seed: int) -> int:
    from drumweave.dataset import save_corpus, synth_corpus

    counts = _parse_counts(opts["counts"])
    corpus = synth_corpus(counts, seed=seed)
    out = Path(opts["out"])
    save_corpus(corpus, out, tempo_bpm=float(opts["tempo"]))
    print(f"wrote {len(corpus)} patterns to {out}")
    for genre, count in sorted(corpus.genre_counts().items()):
        print(f"  {genre}: {count}")
    print(f"fingerprint: {corpus.fingerprint()}")
    return 0


def cmd_dataset_ingest(opts: dict, seed: int) -> int:
    from drumweave.dataset import ingest, save_corpus

    _require(opts, "dir")
    report = ingest(opts["dir"])
    print(f"read {report.files_read} files, {len(report.corpus)} unique patterns")
    for genre, count in sorted(report.genre_counts.items()):
        print(f"  {genre}: {count}")
    print(f"duplicates dropped: {report.duplicates_dropped}")
    print(f"unmapped note events ignored: {report.unmapped_notes}")
    if opts["out"]:
        save_corpus(report.corpus, Path(opts["out"]))
        print(f"saved canonical corpus to {opts['out']}")
    return 0


def cmd_train_vae(opts: dict, seed: int) -> int:
    from drumweave.dataset import load_corpus
    from drumweave.reports import save_loss_curves
    from drumweave.vae import (DEFAULT_BETA, SMALL_ARCHITECTURE,
                               VaeArchitecture, VaeTrainConfig, train,
                               write_history_csv)

    _require(opts, "corpus")
    corpus = load_corpus(opts["corpus"])
    arch = SMALL_ARCHITECTURE if opts["arch"] == "small" else VaeArchitecture()
    beta = DEFAULT_BETA if opts["beta"] is None else float(opts["beta"])
    cfg = VaeTrainConfig(epochs=int(opts["epochs"]), batch_size=int(opts["batch"]),
                         learning_rate=float(opts["lr"]), beta=beta,
                         seed=seed, warmup_frac=float(opts["warmup"]))
    print(f"training VAE on {len(corpus)} patterns "
          f"({cfg.epochs} epochs, batch {cfg.batch_size}, beta {cfg.beta:.5f})")
    result = train(corpus.patterns, cfg, arch=arch,
                   log_every=max(1, cfg.epochs // 10))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    result.model.save(out, {
        "beta": cfg.beta, "seed": seed, "epochs": cfg.epochs,
        "dataset_fingerprint": corpus.fingerprint(),
    })
    write_history_csv(result.history, out / "loss_history.csv")
    save_loss_curves(result.history, out / "loss_curves.png")
    final = result.history[-1]
    print(f"final: total={final.total:.5f} recon={final.recon:.5f} kl={final.kl:.5f}")
    print(f"checkpoint written to {out}")
    return 0


def cmd_train_gan(opts: dict, seed: int) -> int:
    import csv

    from drumweave.dataset import load_corpus
    from drumweave.gan import (GanArchitecture, GanTrainConfig,
                               SMALL_GAN_ARCHITECTURE, gan_train)
    from drumweave.reports import save_gan_history

    _require(opts, "corpus")
    corpus = load_corpus(opts["corpus"])
    arch = SMALL_GAN_ARCHITECTURE if opts["arch"] == "small" else GanArchitecture()
    cfg = GanTrainConfig(epochs=int(opts["epochs"]), batch_size=int(opts["batch"]),
                         learning_rate=float(opts["lr"]), seed=seed,
                         instance_noise=float(opts["noise"]))
    print(f"training GAN on {len(corpus)} patterns ({cfg.epochs} epochs)")
    result = gan_train(corpus.patterns, cfg, arch=arch,
                       log_every=max(1, cfg.epochs // 10))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    result.model.save(out, {
        "seed": seed, "epochs": cfg.epochs,
        "dataset_fingerprint": corpus.fingerprint(),
    })
    with open(out / "gan_history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "j_d", "j_g", "accuracy"])
        for s in result.history:
            writer.writerow([s.epoch, repr(s.j_d), repr(s.j_g), repr(s.accuracy)])
    save_gan_history(result.history, out / "gan_history.png")
    final = result.history[-1]
    print(f"final: J_d={final.j_d:.4f} J_g={final.j_g:.4f} acc={final.accuracy:.3f}")
    print(f"checkpoint written to {out}")
    return 0


def cmd_interpolate(opts: dict, seed: int) -> int:
    from drumweave.analysis import novelty_score, write_novelty_csv
    from drumweave.dataset import load_corpus
    from drumweave.interp import (LATENT_METHODS, InterpolationRequest,
                                  interpolate)
    from drumweave.midi import pattern_to_midi, write_smf
    from drumweave.patterns import GM_PERCUSSION_MAP
    from drumweave.reports import save_sequence_figure
    from drumweave.vae import VaeModel

    _require(opts, "corpus", "start", "goal")
    corpus = load_corpus(opts["corpus"])
    model = None
    if opts["method"] in LATENT_METHODS:
        _require(opts, "vae")
        model, _ = VaeModel.load(opts["vae"])
    request = InterpolationRequest(start=opts["start"], goal=opts["goal"],
                                   length=int(opts["length"]),
                                   method=opts["method"],
                                   velocity_floor=float(opts["floor"]))
    result = interpolate(model, request, corpus=corpus)
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    data = write_smf(pattern_to_midi(result.to_sequence(), GM_PERCUSSION_MAP))
    (out / "transition.mid").write_bytes(data)
    (out / "result.json").write_text(json.dumps(result.to_json(), indent=2) + "\n")
    scores = [novelty_score(p, corpus.patterns, float(opts["floor"]))
              for p in result.patterns]
    write_novelty_csv(scores, out / "novelty.csv")
    save_sequence_figure(result.patterns, out / "sequence.png")
    print(f"{len(result.patterns)} patterns ({opts['method']}) written to {out}")
    print("novelty per step:", " ".join(f"{s:.2f}" for s in scores))
    return 0


def cmd_swirl(opts: dict, seed: int) -> int:
    import csv

    from drumweave.gan import GanModel, SwirlConfig, swirl_point, swirl_sequence, swirl_times
    from drumweave.midi import pattern_to_midi, write_smf
    from drumweave.patterns import GM_PERCUSSION_MAP
    from drumweave.reports import save_sequence_figure, save_swirl_figure

    _require(opts, "gan")
    model, _ = GanModel.load(opts["gan"])
    cfg = SwirlConfig(steps=int(opts["steps"]), omegas=_parse_omegas(opts["omegas"]))
    seq = swirl_sequence(model, cfg, velocity_floor=float(opts["floor"]))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    data = write_smf(pattern_to_midi(seq, GM_PERCUSSION_MAP))
    (out / "swirl.mid").write_bytes(data)
    times = swirl_times(cfg)
    points = np.stack([swirl_point(t, cfg) for t in times])
    with open(out / "swirl.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "re", "im"])
        for t, (re, im) in zip(times, points):
            writer.writerow([repr(float(t)), repr(float(re)), repr(float(im))])
    save_swirl_figure(points, out / "swirl.png")
    if cfg.steps <= 32:
        save_sequence_figure(seq.patterns, out / "sequence.png")
    print(f"{cfg.steps} swirl patterns written to {out}")
    return 0


def cmd_pca(opts: dict, seed: int) -> int:
    from drumweave.analysis import pca_fit, pca_project, write_points_csv
    from drumweave.dataset import load_corpus
    from drumweave.interp import InterpolationRequest, interpolate
    from drumweave.nn import Prng
    from drumweave.reports import save_pca_figure
    from drumweave.vae import VaeModel

    _require(opts, "corpus")
    corpus = load_corpus(opts["corpus"])
    model = pca_fit(corpus.patterns)
    points = pca_project(model, corpus.patterns)
    rows = [(p.genre or "Generated", pt[0], pt[1])
            for p, pt in zip(corpus.patterns, points)]

    by_label: dict[str, list] = {}
    for label, pc1, pc2 in rows:
        by_label.setdefault(label, []).append((pc1, pc2))

    trajectories = []
    n_transitions = int(opts["transitions"])
    if n_transitions > 0:
        _require(opts, "vae")
        vae, _ = VaeModel.load(opts["vae"])
        rng = Prng(seed)
        genres = sorted({p.genre for p in corpus.patterns if p.genre})
        if len(genres) < 2:
            raise CliError("need at least two genres for transitions")
        for _ in range(n_transitions):
            g1 = genres[int(rng.integers(len(genres)))]
            g2 = g1
            while g2 == g1:
                g2 = genres[int(rng.integers(len(genres)))]
            group1, group2 = corpus.by_genre(g1), corpus.by_genre(g2)
            a = group1[int(rng.integers(len(group1)))]
            b = group2[int(rng.integers(len(group2)))]
            result = interpolate(vae, InterpolationRequest(
                a, b, length=int(opts["length"]), method="slerp"))
            traj = pca_project(model, list(result.patterns))
            trajectories.append((f"{g1}-{g2}", traj))
            rows += [(f"{g1}-{g2}", pt[0], pt[1]) for pt in traj]

    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_points_csv(rows, out / "pca_points.csv")
    save_pca_figure({k: np.array(v) for k, v in by_label.items()},
                    trajectories, out / "pca.png")
    var1, var2 = model.explained_variance
    print(f"explained variance: {var1:.4f}, {var2:.4f}")
    print(f"{len(rows)} points written to {out}")
    return 0


def cmd_gradcheck(opts: dict, seed: int) -> int:
    from drumweave.nn import Prng, bce_loss, gradient_check
    from drumweave.patterns import DrumPattern

    tolerance = float(opts["tolerance"])
    samples = int(opts["samples"])
    rng = Prng(seed)
    reports = []

    def rand_patterns(n):
        return [DrumPattern(np.round(rng.uniform(0, 1, (6, 64))
                                     * (rng.uniform(0, 1, (6, 64)) < 0.3) * 127) / 127)
                for _ in range(n)]

    if opts["model"] == "vae-small":
        from drumweave.vae import SMALL_ARCHITECTURE, VaeModel, _pattern_batch

        model = VaeModel(SMALL_ARCHITECTURE, rng=rng.derive())
        seqs, targets = _pattern_batch(rand_patterns(2))
        eps = rng.normal((2, SMALL_ARCHITECTURE.latent_dim))

        def loss_fn():
            return model.loss_batch(seqs, targets, eps, beta=1.0)[0]

        model.zero_grads()
        model.loss_batch(seqs, targets, eps, beta=1.0, with_grads=True)
        reports.append(("vae total loss", gradient_check(
            loss_fn, model.params(), tolerance=tolerance,
            sample_per_tensor=samples, rng=rng.derive())))
    elif opts["model"] == "gan-small":
        from drumweave.gan import GanArchitecture, GanModel, sample_noise

        arch = GanArchitecture(generator_widths=(8, 16), lstm_hidden=4,
                               discriminator_widths=(8, 4))
        model = GanModel(arch, rng=rng.derive())
        real = np.stack([p.grid.reshape(-1) for p in rand_patterns(2)])
        noise = sample_noise(rng, 2, arch.noise_dim)
        fake_fixed, _ = model.generate_batch(noise)
        fake_fixed = fake_fixed.copy()

        def j_d():
            d_r, _ = model.discriminate_batch(real)
            d_f, _ = model.discriminate_batch(fake_fixed)
            return bce_loss(d_r, np.ones_like(d_r))[0] + \
                bce_loss(d_f, np.zeros_like(d_f))[0]

        model.zero_grads()
        model.discriminator_step_grads(real, fake_fixed)
        reports.append(("gan J_d", gradient_check(
            j_d, model.discriminator_params(), tolerance=tolerance,
            sample_per_tensor=samples, rng=rng.derive())))

        def j_g():
            fake, _ = model.generate_batch(noise)
            d_f, _ = model.discriminate_batch(fake)
            return bce_loss(d_f, np.ones_like(d_f))[0]

        model.zero_grads()
        model.generator_step_grads(noise)
        reports.append(("gan J_g", gradient_check(
            j_g, model.generator_params(), tolerance=tolerance,
            sample_per_tensor=samples, rng=rng.derive())))
    else:
        raise CliError(f"unknown gradcheck model {opts['model']!r}")

    all_passed = True
    for name, report in reports:
        print(f"{name}: {report.summary()}")
        all_passed &= report.passed
    return 0 if all_passed else 1


def cmd_serve(opts: dict, seed: int) -> int:
    import uvicorn

    from drumweave.service import ServiceConfig, create_app

    _require(opts, "corpus")
    config = ServiceConfig(
        corpus_path=opts["corpus"],
        vae_path=opts["vae"],
        gan_path=opts["gan"],
        ui_dir=opts["ui"],
        host=opts["host"],
        port=int(opts["port"]),
    )
    app = create_app(config)
    print(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drumweave",
        description="Drum pattern generation and genre transitions")
    parser.add_argument("--seed", type=int, default=None,
                        help="master random seed (default 0)")
    parser.add_argument("--config", default=None,
                        help=f"JSON config file (or ${CONFIG_ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True)

    dataset = sub.add_parser("dataset", help="corpus generation and ingestion")
    dataset_sub = dataset.add_subparsers(dest="subcommand", required=True)
    gen = dataset_sub.add_parser("gen", help="generate a synthetic corpus")
    gen.add_argument("--counts", help="IDM,Electro,Techno pattern counts")
    gen.add_argument("--tempo", type=float, help="tempo written to MIDI files")
    gen.add_argument("--out", help="output corpus directory")
    ing = dataset_sub.add_parser("ingest", help="ingest a MIDI directory")
    ing.add_argument("--dir", help="directory of .mid files (genre subdirs)")
    ing.add_argument("--out", help="optional canonical corpus output")

    train = sub.add_parser("train", help="model training")
    train_sub = train.add_subparsers(dest="subcommand", required=True)
    tv = train_sub.add_parser("vae", help="train the pattern VAE")
    tv.add_argument("--corpus", help="corpus directory")
    tv.add_argument("--out", help="checkpoint output directory")
    tv.add_argument("--epochs", type=int)
    tv.add_argument("--batch", type=int)
    tv.add_argument("--lr", type=float)
    tv.add_argument("--beta", type=float, help="KL weight (default 1/384)")
    tv.add_argument("--warmup", type=float, help="autoencoder warm-up fraction")
    tv.add_argument("--arch", choices=["small", "full"])
    tg = train_sub.add_parser("gan", help="train the pattern GAN")
    tg.add_argument("--corpus", help="corpus directory")
    tg.add_argument("--out", help="checkpoint output directory")
    tg.add_argument("--epochs", type=int)
    tg.add_argument("--batch", type=int)
    tg.add_argument("--lr", type=float)
    tg.add_argument("--noise", type=float, help="starting instance noise")
    tg.add_argument("--arch", choices=["small", "full"])

    interp = sub.add_parser("interpolate", help="build a start-goal transition")
    interp.add_argument("--corpus", help="corpus directory")
    interp.add_argument("--vae", help="VAE checkpoint (latent methods)")
    interp.add_argument("--start", help="start pattern id")
    interp.add_argument("--goal", help="goal pattern id")
    interp.add_argument("--length", type=int)
    interp.add_argument("--method",
                        choices=["lerp", "slerp", "crossfade_linear",
                                 "crossfade_equal_power"])
    interp.add_argument("--floor", type=float, help="velocity floor")
    interp.add_argument("--out", help="output directory")

    swirl = sub.add_parser("swirl", help="autonomous drumming via noise sweep")
    swirl.add_argument("--gan", help="GAN checkpoint directory")
    swirl.add_argument("--steps", type=int)
    swirl.add_argument("--omegas", help="four comma-separated frequencies")
    swirl.add_argument("--floor", type=float)
    swirl.add_argument("--out", help="output directory")

    pca = sub.add_parser("pca", help="project corpus (and transitions) to 2-D")
    pca.add_argument("--corpus", help="corpus directory")
    pca.add_argument("--vae", help="VAE checkpoint for transition overlays")
    pca.add_argument("--transitions", type=int,
                     help="number of random cross-genre transitions to overlay")
    pca.add_argument("--length", type=int)
    pca.add_argument("--out", help="output directory")

    grad = sub.add_parser("gradcheck", help="finite-difference gradient check")
    grad.add_argument("--model", choices=["vae-small", "gan-small"])
    grad.add_argument("--samples", type=int,
                      help="coordinates checked per tensor")
    grad.add_argument("--tolerance", type=float)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--corpus", help="corpus directory")
    serve.add_argument("--vae", help="VAE checkpoint directory")
    serve.add_argument("--gan", help="GAN checkpoint directory")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--ui", help="static UI directory to serve at /")

    return parser


_HANDLERS = {
    "dataset gen": cmd_dataset_gen,
    "dataset ingest": cmd_dataset_ingest,
    "train vae": cmd_train_vae,
    "train gan": cmd_train_gan,
    "interpolate": cmd_interpolate,
    "swirl": cmd_swirl,
    "pca": cmd_pca,
    "gradcheck": cmd_gradcheck,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    section = args.command
    if getattr(args, "subcommand", None):
        section = f"{args.command} {args.subcommand}"
    try:
        seed = _resolve_seed(args)
        opts = _resolve(section, args)
        print(f"effective seed: {seed}")
        return _HANDLERS[section](opts, seed)
    except (CliError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
