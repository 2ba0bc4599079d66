"""Command-line entry point.

Subcommands cover the batch pipeline end to end: `synth` writes a
synthetic dataset, `extract` dumps descriptors, `train-gmm`, `encode`,
`train-rank` and `evaluate` run the stages separately on saved model
files, and `loyo` runs the whole leave-one-year-out protocol in one go.

Every subcommand also accepts `--config FILE` with `key=value` lines
(`#` starts a comment); config values override command-line flags.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import CatwalkRankError, InvalidArgument, ManifestError
from .features import FeatureConfig, extract_descriptors, write_descriptor_dump
from .gmm import GmmFitConfig, fit_gmm, load_gmm, save_gmm
from .harness import LoyoReport, PipelineConfig, YearResult, run_loyo, write_report
from .ingest import iter_dataset, load_scores_csv
from .metrics import (
    concordance,
    ndcg,
    order_by_score,
    ratings_from_scores,
    winner_predicted_rank,
)
from .rank import build_pairs, load_rank, save_rank, score, train_ranksvm
from .reduction import load_reducer
from .sfv import SfvConfig, encode_fv_baseline, encode_sfv, load_encoded, save_encoded
from .synth import SynthConfig, generate

__all__ = ["main"]


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="keep all reductions in a fixed order (always on; flag kept for compatibility)",
    )
    common.add_argument("--config", type=str, default=None, help="key=value file overriding flags")

    parser = argparse.ArgumentParser(
        prog="catwalkrank",
        description="rank catwalk videos by predicted judge score",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = parsers["synth"] = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p.add_argument("--out", required=True, help="dataset root to create")
    p.add_argument("--years", type=int, default=5)
    p.add_argument("--participants", type=int, default=10)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--noise", type=float, default=0.2, help="judge-score noise sigma")
    p.add_argument("--jitter", type=float, default=1.0, help="low-quality motion jitter scale")
    p.add_argument("--start-year", type=int, default=2001)

    p = parsers["extract"] = sub.add_parser("extract", parents=[common], help="dump per-video descriptors")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output directory for .desc dumps")
    p.add_argument("--beta", type=float, default=40.0, help="gradient magnitude threshold")

    p = parsers["train-gmm"] = sub.add_parser("train-gmm", parents=[common], help="fit a descriptor vocabulary")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--k", type=int, required=True, help="number of components")
    p.add_argument("--beta", type=float, default=40.0)
    p.add_argument("--years", type=str, default=None, help="comma-separated training years (default: all)")
    p.add_argument("--sample-cap", type=int, default=500_000)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-5)

    p = parsers["encode"] = sub.add_parser("encode", parents=[common], help="encode every video with saved models")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output directory for .enc files")
    p.add_argument("--method", required=True, choices=["fv", "sfv-pca", "sfv-rp"])
    p.add_argument("--gmm", required=True, help="first-layer vocabulary file")
    p.add_argument("--reducer", default=None, help="reducer file (sfv methods)")
    p.add_argument("--gmm2", default=None, help="second-layer vocabulary file (sfv methods)")
    p.add_argument("--beta", type=float, default=40.0)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)

    p = parsers["train-rank"] = sub.add_parser("train-rank", parents=[common], help="train the ranking weights")
    p.add_argument("--data", required=True, help="dataset root (for scores.csv)")
    p.add_argument("--encodings", required=True, help="directory of .enc files")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--c", type=float, default=1.0, help="hinge-loss trade-off")
    p.add_argument("--years", type=str, default=None, help="comma-separated training years (default: all)")

    p = parsers["evaluate"] = sub.add_parser("evaluate", parents=[common], help="score encodings against true ranks")
    p.add_argument("--data", required=True, help="dataset root (for scores.csv)")
    p.add_argument("--encodings", required=True, help="directory of .enc files")
    p.add_argument("--model", required=True, help="ranking model file")
    p.add_argument("--out", required=True, help="report CSV to write")

    p = parsers["loyo"] = sub.add_parser("loyo", parents=[common], help="full leave-one-year-out protocol")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--method", default="sfv-pca", choices=["fv", "sfv-pca", "sfv-rp"])
    p.add_argument("--k", type=int, default=256)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--beta", type=float, default=40.0)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--energy", type=float, default=0.9)
    p.add_argument("--sample-cap", type=int, default=500_000)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--parallel-folds", type=int, default=1)

    return parser, parsers


def _apply_config(args, subparser):
    """Overwrite parsed flags with key=value lines from the config file."""
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    text = Path(args.config).read_text(encoding="utf-8")
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"{args.config}:{ln}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in actions:
            raise InvalidArgument(f"{args.config}:{ln}: unknown config key {key!r}")
        action = actions[dest]
        if isinstance(action, argparse.BooleanOptionalAction) or action.type is None and isinstance(
            action.default, bool
        ):
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                parsed = True
            elif low in ("0", "false", "no", "off"):
                parsed = False
            else:
                raise InvalidArgument(f"{args.config}:{ln}: bad boolean {value!r}")
        elif action.type is not None:
            try:
                parsed = action.type(value)
            except ValueError:
                raise InvalidArgument(f"{args.config}:{ln}: bad value {value!r} for {key}") from None
        else:
            parsed = value
        setattr(args, dest, parsed)


def _year_list(arg):
    if arg is None:
        return None
    try:
        return sorted({int(v) for v in arg.split(",") if v.strip()})
    except ValueError:
        raise InvalidArgument(f"bad year list {arg!r}") from None


def _require_model(path, flag):
    if path is None or not Path(path).is_file():
        shown = path if path is not None else f"{flag} not given"
        raise ManifestError(f"missing model: {shown}")


def _cmd_synth(args):
    cfg = SynthConfig(
        years=args.years,
        participants=args.participants,
        frames=args.frames,
        score_noise=args.noise,
        jitter=args.jitter,
        seed=args.seed,
        start_year=args.start_year,
    )
    generate(cfg, args.out)
    print(f"wrote {cfg.years} years x {cfg.participants} participants under {args.out}")
    return 0


def _cmd_extract(args):
    out = Path(args.out)
    fcfg = FeatureConfig(magnitude_threshold=args.beta)
    n = 0
    for year, pid, video, _ in iter_dataset(args.data):
        dset = extract_descriptors(video, fcfg)
        ydir = out / str(year)
        ydir.mkdir(parents=True, exist_ok=True)
        write_descriptor_dump(dset, ydir / f"{pid}.desc")
        n += 1
    print(f"extracted descriptors for {n} videos into {out}")
    return 0


def _cmd_train_gmm(args):
    years = _year_list(args.years)
    fcfg = FeatureConfig(magnitude_threshold=args.beta)
    blocks = []
    used = set()
    for year, _, video, _ in iter_dataset(args.data):
        if years is not None and year not in years:
            continue
        used.add(year)
        blocks.append(extract_descriptors(video, fcfg).descriptors)
    if years is not None and used != set(years):
        raise ManifestError(f"years {sorted(set(years) - used)} not present in {args.data}")
    if not blocks:
        raise ManifestError("no training videos selected")
    model = fit_gmm(
        np.vstack(blocks),
        GmmFitConfig(
            n_components=args.k,
            max_iterations=args.max_iter,
            tolerance=args.tol,
            seed=args.seed,
            sample_cap=args.sample_cap,
        ),
    )
    model.trained_years = tuple(sorted(used))
    save_gmm(model, args.out)
    print(f"fit K={args.k} vocabulary on {sum(b.shape[0] for b in blocks)} descriptors -> {args.out}")
    return 0


def _cmd_encode(args):
    _require_model(args.gmm, "--gmm")
    gmm1 = load_gmm(args.gmm)
    if args.method == "fv":
        reducer = gmm2 = None
    else:
        _require_model(args.reducer, "--reducer")
        _require_model(args.gmm2, "--gmm2")
        reducer = load_reducer(args.reducer)
        gmm2 = load_gmm(args.gmm2)
    fcfg = FeatureConfig(magnitude_threshold=args.beta)
    scfg = SfvConfig(window=args.window, stride=args.stride)
    out = Path(args.out)
    n = 0
    for year, pid, video, _ in iter_dataset(args.data):
        dset = extract_descriptors(video, fcfg)
        if args.method == "fv":
            enc = encode_fv_baseline(dset, gmm1, participant_id=pid, year=year)
        else:
            enc = encode_sfv(dset, gmm1, reducer, gmm2, scfg, participant_id=pid, year=year)
        ydir = out / str(year)
        ydir.mkdir(parents=True, exist_ok=True)
        save_encoded(enc, ydir / f"{pid}.enc")
        n += 1
    print(f"encoded {n} videos with {args.method} into {out}")
    return 0


def _load_encoding_groups(enc_root, data_root, years=None):
    """Pair saved .enc files with the dataset's true scores, per year."""
    enc_root = Path(enc_root)
    if not enc_root.is_dir():
        raise ManifestError(f"encoding directory {enc_root} is not a directory")
    groups = []
    year_dirs = sorted(
        (int(p.name), p) for p in enc_root.iterdir() if p.is_dir() and p.name.isdigit()
    )
    if not year_dirs:
        raise ManifestError(f"no year directories under {enc_root}")
    for year, ydir in year_dirs:
        if years is not None and year not in years:
            continue
        scores = load_scores_csv(Path(data_root) / str(year) / "scores.csv")
        encs = []
        true = []
        for f in sorted(ydir.glob("*.enc")):
            pid = f.stem
            if pid not in scores:
                raise ManifestError(f"{f}: participant {pid!r} not in year {year} scores.csv")
            encs.append(load_encoded(f, participant_id=pid, year=year))
            true.append(scores[pid])
        if not encs:
            raise ManifestError(f"{ydir}: no .enc files")
        groups.append((year, encs, true))
    if years is not None:
        missing = sorted(set(years) - {g[0] for g in groups})
        if missing:
            raise ManifestError(f"years {missing} not present in {enc_root}")
    return groups


def _cmd_train_rank(args):
    groups = _load_encoding_groups(args.encodings, args.data, _year_list(args.years))
    model = train_ranksvm(build_pairs(groups), c=args.c, seed=args.seed)
    model.trained_years = tuple(g[0] for g in groups)
    save_rank(model, args.out)
    print(f"trained ranking weights on {len(groups)} year(s) -> {args.out}")
    return 0


def _cmd_evaluate(args):
    _require_model(args.model, "--model")
    model = load_rank(args.model)
    groups = _load_encoding_groups(args.encodings, args.data)
    results = []
    for year, encs, true in groups:
        predicted = score(model, np.stack([e.vector for e in encs]))
        true = np.asarray(true)
        c, d = concordance(predicted, true)
        results.append(YearResult(
            year=year,
            ndcg=float(ndcg(order_by_score(predicted), ratings_from_scores(true))),
            kendall=(c - d) / (c + d),
            concordant=c,
            discordant=d,
            winner_predicted_rank=winner_predicted_rank(predicted, true),
        ))
    report = LoyoReport(
        results=results,
        mean_ndcg=float(np.mean([r.ndcg for r in results])),
        mean_kendall=float(np.mean([r.kendall for r in results])),
    )
    write_report(report, args.out)
    print(f"evaluated {len(results)} year(s): mean NDCG {report.mean_ndcg:.4f}, "
          f"mean Kendall {report.mean_kendall:.4f} -> {args.out}")
    return 0


def _cmd_loyo(args):
    cfg = PipelineConfig(
        method=args.method,
        k=args.k,
        k2=args.k2,
        magnitude_threshold=args.beta,
        window=args.window,
        stride=args.stride,
        svm_c=args.c,
        energy=args.energy,
        seed=args.seed,
        sample_cap=args.sample_cap,
        em_iterations=args.max_iter,
        em_tolerance=args.tol,
        parallel_folds=args.parallel_folds,
        deterministic=args.deterministic,
    )
    report = run_loyo(cfg, args.data)
    write_report(report, args.out)
    print(f"{len(report.results)} folds: mean NDCG {report.mean_ndcg:.4f}, "
          f"mean Kendall {report.mean_kendall:.4f} -> {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "extract": _cmd_extract,
    "train-gmm": _cmd_train_gmm,
    "encode": _cmd_encode,
    "train-rank": _cmd_train_rank,
    "evaluate": _cmd_evaluate,
    "loyo": _cmd_loyo,
}


def main(argv=None):
    parser, parsers = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            _apply_config(args, parsers[args.command])
        return _COMMANDS[args.command](args)
    except CatwalkRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
