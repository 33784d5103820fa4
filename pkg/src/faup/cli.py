"""Command-line surface: synth, train, classify, bench, transitions, rules.

Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline, report, rules, synth
from .aucodes import EMOTIONS, Emotion, dump_tables
from .errors import FaupError
from .geometry import read_landmarks
from .imaging import DEFAULT_WORKING_SIZE
from .synth import DEFAULT_INTENSITY, DEFAULT_NOISE, SynthConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _emotion(name: str) -> Emotion:
    for e in EMOTIONS:
        if e.value.lower() == name.lower():
            return e
    raise argparse.ArgumentTypeError(
        f"unknown emotion {name!r}; choose from {[e.value for e in EMOTIONS]}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faup",
                     description="Facial action unit toolkit: synthesize data, "
                                 "train, classify, benchmark pruning, detect "
                                 "emotion transitions, dump rule tables.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset or sequence")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--per-class", type=int, default=10,
                   help="samples per emotion (default: %(default)s)")
    p.add_argument("--noise", type=float, default=DEFAULT_NOISE,
                   help="landmark noise sigma (default: %(default)s)")
    p.add_argument("--intensity", type=float, default=DEFAULT_INTENSITY,
                   help="AU displacement magnitude (default: %(default)s)")
    p.add_argument("--seed", type=int, default=42,
                   help="random seed (default: %(default)s)")
    p.add_argument("--render", action="store_true",
                   help="also render PGM sketches with pixel landmarks (default: off)")
    p.add_argument("--path", default=None,
                   help="comma-separated emotion path; generates a frame "
                        "sequence instead of a dataset (default: %(default)s)")
    p.add_argument("--frames-per-state", type=int, default=5,
                   help="frames per state in sequence mode (default: %(default)s)")

    p = sub.add_parser("train", help="train the detector bank on a dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--mode", choices=["landmark", "image"], default="landmark",
                   help="feature mode (default: %(default)s)")
    p.add_argument("--components", type=int, default=16,
                   help="PCA components in image mode (default: %(default)s)")
    p.add_argument("--svm-c", type=float, default=1.0,
                   help="SVM soft-margin C (default: %(default)s)")
    p.add_argument("--seed", type=int, default=42,
                   help="split seed (default: %(default)s)")
    p.add_argument("--split-ratio", type=float, default=pipeline.DEFAULT_SPLIT_RATIO,
                   help="training fraction (default: %(default)s)")
    p.add_argument("--tau", type=float, default=pipeline.DEFAULT_TAU,
                   help="AU-presence displacement threshold (default: %(default)s)")
    p.add_argument("--working-width", type=int, default=DEFAULT_WORKING_SIZE[0],
                   help="image working width (default: %(default)s)")
    p.add_argument("--working-height", type=int, default=DEFAULT_WORKING_SIZE[1],
                   help="image working height (default: %(default)s)")
    p.add_argument("--patch-radius", type=int, default=3,
                   help="pixel patch radius (default: %(default)s)")
    p.add_argument("--canny-sigma", type=float, default=1.4,
                   help="Canny blur sigma (default: %(default)s)")
    p.add_argument("--canny-low", type=float, default=0.1,
                   help="Canny low threshold, fraction of max gradient "
                        "(default: %(default)s)")
    p.add_argument("--canny-high", type=float, default=0.3,
                   help="Canny high threshold, fraction of max gradient "
                        "(default: %(default)s)")
    p.add_argument("--edge-source", choices=["pca", "raw"], default="pca",
                   help="run Canny on PCA reconstructions or raw images "
                        "(default: %(default)s)")
    p.add_argument("--patch-source", choices=["edges", "luminance"], default="edges",
                   help="patch values from edge mask or luminance "
                        "(default: %(default)s)")
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("classify", help="classify one sample")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--input", required=True,
                   help="landmarks file, or PGM with a sibling .pixlandmarks")
    p.add_argument("--prior", type=_emotion, default=None,
                   help="previous emotion state (default: %(default)s)")
    p.add_argument("--pruned", action="store_true",
                   help="use the pruned path (default: full path)")

    p = sub.add_parser("bench", help="benchmark full vs pruned classification")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--report", required=True,
                   help="TSV output path; summary and charts land next to it")

    p = sub.add_parser("transitions", help="detect emotion transitions in a sequence")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--sequence", required=True,
                   help="directory of frame_*.landmarks files")
    p.add_argument("--initial", type=_emotion, default=None,
                   help="initial state; inferred when omitted (default: %(default)s)")

    p = sub.add_parser("rules", help="dump rule tables or decision trees")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--dump", action="store_true", help="print all rule tables")
    group.add_argument("--tree", choices=["absence", "transition"],
                       help="print an induced decision tree")
    p.add_argument("--format", choices=["text", "dot"], default="text",
                   help="tree rendering format (default: %(default)s)")

    return parser


def _cmd_synth(args) -> int:
    cfg = SynthConfig(per_class=args.per_class, noise_sigma=args.noise,
                      intensity=args.intensity, seed=args.seed,
                      render=args.render)
    if args.path:
        names = [part.strip() for part in args.path.split(",") if part.strip()]
        path = [_emotion(name) for name in names]
        seq = synth.generate_sequence(path, args.frames_per_state, cfg)
        synth.write_sequence(seq, args.out)
        print(f"wrote {len(seq.faces)} frames to {args.out}")
    else:
        samples = synth.generate_dataset(cfg)
        synth.write_dataset(samples, args.out, cfg.seed)
        print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    records = synth.load_dataset(args.data)
    config = pipeline.PipelineConfig(
        mode=args.mode,
        working_size=(args.working_width, args.working_height),
        patch_radius=args.patch_radius,
        canny_sigma=args.canny_sigma,
        canny_low=args.canny_low,
        canny_high=args.canny_high,
        components=args.components,
        svm_c=args.svm_c,
        split_ratio=args.split_ratio,
        seed=args.seed,
        tau=args.tau,
        edge_source=args.edge_source,
        patch_source=args.patch_source,
    )
    bundle, split = pipeline.train(records, config)
    pipeline.save_bundle(bundle, args.out)
    print(f"trained on {len(split.train_indices)} samples "
          f"({len(split.test_indices)} held out); model saved to {args.out}")
    for label, model in bundle.detectors.items():
        print(f"  {label}: sv_count={model.sv_count} margin={model.margin:.4f}")
    return 0


def _load_input_sample(path_str: str) -> object:
    from .synth import DatasetRecord, parse_pixlandmarks
    from .imaging import read_pgm

    path = Path(path_str)
    if path.suffix == ".pgm":
        image = read_pgm(path)
        pix_path = path.with_suffix(".pixlandmarks")
        if not pix_path.is_file():
            raise FaupError(f"no pixel landmarks next to {path}")
        pix = parse_pixlandmarks(pix_path.read_text())
        lm_path = path.with_suffix(".landmarks")
        if lm_path.is_file():
            face = read_landmarks(lm_path)
        else:
            face = synth.pixels_to_face(pix, image.width, image.height)
        # the record label is a placeholder; classification ignores it
        return DatasetRecord(str(path), EMOTIONS[0], face, image, pix)
    return read_landmarks(path)


def _cmd_classify(args) -> int:
    bundle = pipeline.load_bundle(args.model)
    sample = _load_input_sample(args.input)
    if args.pruned:
        result = pipeline.classify_pruned(bundle, sample, prior=args.prior)
        print(f"emotion={result.emotion.value} "
              f"points_examined={result.points_examined} "
              f"fallback={'yes' if result.used_fallback else 'no'}")
    else:
        result = pipeline.classify_full(bundle, sample)
        scores = " ".join(f"{label}={score:+.4f}"
                          for label, score in result.scores.items())
        flag = " (low confidence)" if result.low_confidence else ""
        print(f"emotion={result.emotion.value}{flag} {scores}")
    return 0


def _cmd_bench(args) -> int:
    bundle = pipeline.load_bundle(args.model)
    records = synth.load_dataset(args.data)
    bench = pipeline.bench_compare(bundle, records)
    written = report.write_bench_report(bench, args.report)
    print(report.bench_summary(bench), end="")
    print("wrote: " + ", ".join(str(p) for p in written))
    return 0


def _cmd_transitions(args) -> int:
    bundle = pipeline.load_bundle(args.model)
    frames = synth.load_sequence(args.sequence)
    events = pipeline.detect_transitions(bundle, frames, initial=args.initial)
    if not events:
        print("no transitions detected")
    for event in events:
        tag = " (heuristic rule)" if event.rule.derived else ""
        print(f"frame={event.frame} from={event.source.value} "
              f"to={event.target.value}{tag}")
    return 0


def _cmd_rules(args) -> int:
    if args.dump:
        print(dump_tables(), end="")
        return 0
    tree = (rules.build_absence_tree() if args.tree == "absence"
            else rules.build_transition_tree())
    text = tree.render_dot() if args.format == "dot" else tree.render_text()
    print(text, end="")
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "classify": _cmd_classify,
    "bench": _cmd_bench,
    "transitions": _cmd_transitions,
    "rules": _cmd_rules,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _HANDLERS[args.command](args)
    except FaupError as exc:
        print(f"faup {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
