"""Command-line surface: ``subalign align``, ``subalign eval``, ``subalign gen``.

Machine-readable JSON goes to stdout (keys sorted), human-readable tables to
stderr; exit code 1 signals I/O or validation failures, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import metrics, synth
from .align import (
    METHODS,
    assemble_document,
    ctc_forced_align,
    dtw_align,
    sbaam_align,
)
from .core import parse_srt, read_tagged_file, write_srt
from .errors import SubalignError
from .signal import (
    AttentionMatrix,
    CtcPosterior,
    DEFAULT_FRAME_MS,
    FrameTimeMap,
    read_matrix,
)

PROVIDER_URL_ENV = "SUBALIGN_PROVIDER_URL"


def _positive_float(value: str) -> float:
    try:
        f = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if f <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return f


def _odd_int(value: str) -> int:
    try:
        i = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if i < 1 or i % 2 == 0:
        raise argparse.ArgumentTypeError(f"must be odd and positive: {value}")
    return i


def _non_negative_int(value: str) -> int:
    try:
        i = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if i < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {value}")
    return i


def read_vocab_map(path) -> dict[str, int]:
    """Read a ``label_id<TAB>token`` vocabulary file."""
    vocab: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise SubalignError(f"{path}:{lineno}: expected 'label_id<TAB>token'")
            try:
                vocab[parts[1]] = int(parts[0])
            except ValueError:
                raise SubalignError(f"{path}:{lineno}: bad label id {parts[0]!r}") from None
    if not vocab:
        raise SubalignError(f"{path}: empty vocabulary map")
    return vocab


def _read_bool_labels(path) -> list[bool]:
    truthy = {"1", "true", "yes"}
    falsy = {"0", "false", "no"}
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            val = line.strip().lower()
            if not val:
                continue
            if val in truthy:
                labels.append(True)
            elif val in falsy:
                labels.append(False)
            else:
                raise SubalignError(f"{path}:{lineno}: not a boolean label: {val!r}")
    return labels


def _emit_json(obj, quiet: bool, table_lines=None) -> None:
    print(json.dumps(obj, sort_keys=True))
    if not quiet and table_lines:
        for line in table_lines:
            print(line, file=sys.stderr)


def cmd_align(args) -> int:
    utterances = read_tagged_file(args.tokens, per_line=args.per_line)
    if len(utterances) != 1:
        raise SubalignError(
            f"align expects exactly one utterance, got {len(utterances)} from {args.tokens}"
        )
    tokens = utterances[0]

    if args.method == "ctcseg":
        matrix = read_matrix(args.posterior)
        if not isinstance(matrix, CtcPosterior):
            raise SubalignError(f"{args.posterior} is not a posterior matrix")
        if args.frame_ms is not None:
            matrix = CtcPosterior(
                matrix.logprobs, matrix.blank_index, FrameTimeMap.uniform(args.frame_ms)
            )
        vocab = read_vocab_map(args.vocab)
        timings = ctc_forced_align(matrix, tokens, vocab)
    else:
        matrix = read_matrix(args.attention)
        if not isinstance(matrix, AttentionMatrix):
            raise SubalignError(f"{args.attention} is not an attention matrix")
        if args.frame_ms is not None:
            matrix = AttentionMatrix(matrix.values, FrameTimeMap.uniform(args.frame_ms))
        if args.method == "dtw":
            timings = dtw_align(matrix, tokens, median_width=args.median_width)
        else:
            timings = sbaam_align(
                matrix,
                tokens,
                eps=args.eps,
                skip_eob_row=args.skip_eob_row,
                extend_last=args.extend_last,
            )

    doc = assemble_document(tokens, timings)
    if args.output == "-":
        for block, (fs, fe), (ms_s, ms_e) in zip(
            doc, timings.intervals, timings.ms_intervals()
        ):
            print(f"{block.index}\t{fs}\t{fe}\t{ms_s}\t{ms_e}\t{block.text}")
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(write_srt(doc))
    return 0


def cmd_eval_conformity(args) -> int:
    doc = parse_srt(_read_text(args.srt))
    report = metrics.conformity(doc, cpl_limit=args.cpl, cps_limit=args.cps)
    obj = {
        "cpl_conform_pct": report.cpl_conform_pct,
        "cps_conform_pct": report.cps_conform_pct,
        "cpl_limit": args.cpl,
        "cps_limit": args.cps,
        "n_blocks": len(doc),
    }
    _emit_json(
        obj,
        args.quiet,
        [
            f"blocks: {len(doc)}",
            f"CPL <= {args.cpl}: {report.cpl_conform_pct:.1f}%",
            f"CPS <= {args.cps}: {report.cps_conform_pct:.1f}%",
        ],
    )
    return 0


def cmd_eval_shift(args) -> int:
    hyp = parse_srt(_read_text(args.hyp))
    ref = parse_srt(_read_text(args.ref))
    report = metrics.shift_stats(hyp, ref, threshold_ms=args.threshold_ms)
    obj = {
        "edited_start_pct": report.edited_start_pct,
        "edited_end_pct": report.edited_end_pct,
        "edited_avg_pct": report.edited_avg_pct,
        "mean_abs_shift_ms": report.mean_abs_shift_ms,
        "std_abs_shift_ms": report.std_abs_shift_ms,
        "threshold_ms": report.threshold_ms,
        "start_shifts_ms": list(report.start_shifts_ms),
        "end_shifts_ms": list(report.end_shifts_ms),
    }
    shift_txt = (
        f"{report.mean_abs_shift_ms:.0f} +/- {report.std_abs_shift_ms:.0f} ms"
        if report.mean_abs_shift_ms is not None
        else "n/a (nothing edited)"
    )
    _emit_json(
        obj,
        args.quiet,
        [
            f"edited start/end/avg: {report.edited_start_pct:.2f}% / "
            f"{report.edited_end_pct:.2f}% / {report.edited_avg_pct:.2f}%",
            f"abs shift over edited: {shift_txt}",
        ],
    )
    return 0


def cmd_eval_subsonar(args) -> int:
    provider_url = args.provider_url or os.environ.get(PROVIDER_URL_ENV)
    if args.embeddings:
        provider = metrics.file_provider(args.embeddings)
    elif provider_url:
        provider = metrics.remote_provider(provider_url)
    else:
        raise UsageError("subsonar needs --embeddings, --provider-url, or "
                         f"{PROVIDER_URL_ENV} in the environment")
    if len(args.audio) != len(args.srt):
        raise UsageError("--audio must be given once per --srt")
    file_means = {}
    pooled: list[float] = []
    for srt_path, audio_ref in zip(args.srt, args.audio):
        doc = parse_srt(_read_text(srt_path))
        scores = metrics.block_scores(doc, audio_ref, args.lang, provider)
        file_means[srt_path] = sum(scores) / len(scores)
        pooled.extend(scores)
    obj = {
        "file_means": file_means,
        "mean_of_file_means": sum(file_means.values()) / len(file_means),
        "pooled_mean": sum(pooled) / len(pooled),
        "n_blocks": len(pooled),
    }
    _emit_json(
        obj,
        args.quiet,
        [f"{path}: {score:.4f}" for path, score in file_means.items()]
        + [f"pooled mean ({len(pooled)} blocks): {obj['pooled_mean']:.4f}"],
    )
    return 0


def cmd_eval_kappa(args) -> int:
    a = _read_bool_labels(args.a)
    b = _read_bool_labels(args.b)
    kappa = metrics.cohen_kappa(a, b)
    _emit_json({"kappa": kappa, "n": len(a)}, args.quiet, [f"kappa: {kappa:.4f}"])
    return 0


def cmd_gen(args) -> int:
    spec = synth.random_spec(
        n_blocks=args.blocks,
        n_frames=args.frames,
        noise_std=args.noise,
        seed=args.seed,
        tokens_per_block=args.tokens_per_block,
    )
    synth.save_fixture(args.output, spec)
    if not args.quiet:
        print(f"wrote fixture for seed {args.seed} to {args.output}", file=sys.stderr)
    return 0


def _read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subalign")
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="estimate block timestamps and write SRT")
    p_align.add_argument("--method", required=True, choices=METHODS)
    p_align.add_argument("--tokens", required=True, help="tagged-text file (<eol>/<eob> markers)")
    p_align.add_argument("--attention", help="attention matrix file")
    p_align.add_argument("--posterior", help="CTC posterior matrix file")
    p_align.add_argument("--vocab", help="label_id<TAB>token map for ctcseg")
    p_align.add_argument("--frame-ms", type=_positive_float, default=None,
                         help=f"uniform frame duration override (default from file, {DEFAULT_FRAME_MS:g})")
    p_align.add_argument("--eps", type=_positive_float, default=0.01,
                         help="sbaam negative-clip magnitude")
    p_align.add_argument("--median-width", type=_odd_int, default=7,
                         help="dtw median filter width (odd)")
    p_align.add_argument("--extend-last", action="store_true",
                         help="sbaam: clamp the final block end to the last frame")
    p_align.add_argument("--skip-eob-row", action="store_true",
                         help="sbaam: start each block's token span after the previous <eob> row")
    p_align.add_argument("--per-line", action="store_true",
                         help="treat each line of the tokens file as one utterance")
    p_align.add_argument("-o", "--output", required=True,
                         help="output SRT path, or - for TSV on stdout")
    p_align.set_defaults(func=cmd_align)

    p_eval = sub.add_parser("eval", help="evaluate subtitle timing quality")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)

    p_conf = eval_sub.add_parser("conformity", help="CPL/CPS conformity percentages")
    p_conf.add_argument("srt")
    p_conf.add_argument("--cpl", type=int, default=metrics.CPL_LIMIT)
    p_conf.add_argument("--cps", type=_positive_float, default=metrics.CPS_LIMIT)
    p_conf.add_argument("--quiet", action="store_true")
    p_conf.set_defaults(func=cmd_eval_conformity)

    p_shift = eval_sub.add_parser("shift", help="timestamp shift statistics vs a reference")
    p_shift.add_argument("--hyp", required=True)
    p_shift.add_argument("--ref", required=True)
    p_shift.add_argument("--threshold-ms", type=_non_negative_int, default=0,
                         help=f"edit threshold; {metrics.PERCEPTION_THRESHOLD_MS} filters "
                              "sub-perceptual shifts")
    p_shift.add_argument("--quiet", action="store_true")
    p_shift.set_defaults(func=cmd_eval_shift)

    p_sonar = eval_sub.add_parser("subsonar", help="embedding-similarity timing score")
    p_sonar.add_argument("--srt", required=True, action="append")
    p_sonar.add_argument("--lang", required=True)
    p_sonar.add_argument("--audio", required=True, action="append",
                         help="audio reference passed to the provider, one per --srt")
    p_sonar.add_argument("--embeddings", help="JSON-lines embedding lookup file")
    p_sonar.add_argument("--provider-url",
                         help=f"embedding service base URL (or {PROVIDER_URL_ENV})")
    p_sonar.add_argument("--quiet", action="store_true")
    p_sonar.set_defaults(func=cmd_eval_subsonar)

    p_kappa = eval_sub.add_parser("kappa", help="Cohen's kappa between two label files")
    p_kappa.add_argument("--a", required=True)
    p_kappa.add_argument("--b", required=True)
    p_kappa.add_argument("--quiet", action="store_true")
    p_kappa.set_defaults(func=cmd_eval_kappa)

    p_gen = sub.add_parser("gen", help="generate a synthetic alignment fixture")
    p_gen.add_argument("--blocks", type=int, required=True)
    p_gen.add_argument("--frames", type=int, required=True)
    p_gen.add_argument("--noise", type=float, default=0.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--tokens-per-block", type=int, default=4)
    p_gen.add_argument("--quiet", action="store_true")
    p_gen.add_argument("-o", "--output", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "align":
        if args.method == "ctcseg":
            if not args.posterior or not args.vocab:
                parser.error("--method ctcseg requires --posterior and --vocab")
            if args.attention:
                parser.error("--attention and --posterior are mutually exclusive")
        else:
            if not args.attention:
                parser.error(f"--method {args.method} requires --attention")
            if args.posterior:
                parser.error("--attention and --posterior are mutually exclusive")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"subalign: {e}", file=sys.stderr)
        return 2
    except (SubalignError, OSError) as e:
        print(f"subalign: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
