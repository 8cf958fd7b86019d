"""Command-line pipeline: ingest, synth, shuffle, localize, diag.

Wires descriptor ingestion into difference matrices, fixed or adaptive
localization, metric reports, and plot-ready diagnostic CSVs. Every
command validates its full configuration before writing anything, and all
randomized behavior flows from explicit seeds.

Exit codes: 0 success, 1 usage or configuration error, 2 data or format
error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path

from . import fileio
from .adaptive import AdaptiveConfig, feasible_grid, p_of_L, run_adaptive
from .descriptors import (
    DIFFERENCE_OPS,
    Descriptor,
    FormatError,
    downsample,
    load_pgm,
    patch_normalize,
    wifi_vectorize,
)
from .diffmatrix import build
from .distributions import METHODS
from .evaluation import (
    GroundTruth,
    ShuffleSpec,
    SynthSpec,
    apply_permutation,
    auc,
    mtl,
    pr_curve,
    shuffle_traverse,
    synth_generate,
)
from .windows import build_prefix, fixed_localize, score_row

SWEEP_LENGTHS = (10, 25, 50, 100, 200, 350, 500)
APPROX_CHOICES = ("gaussian", "robust", "robust_gaussian", "gmm2", "gmm3")
APPROX_ALIASES = {"robust": "robust_gaussian"}
PR_MODES = {"score": "threshold_on_score", "significance": "threshold_on_significance"}


def _geometry(text: str) -> tuple[int, int]:
    """Parse WxH, e.g. 32x16."""
    try:
        w_str, h_str = text.lower().split("x")
        w, h = int(w_str), int(h_str)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"dimensions must be positive, got {text!r}")
    return w, h


def _frame_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# --------------------------------------------------------------------------
# Parser

def _add_matrix_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--ref", required=True, help="reference descriptor file stem")
    sub.add_argument("--query", required=True, help="query descriptor file stem")
    sub.add_argument("--op", choices=DIFFERENCE_OPS, default="sad", help="raw difference operator")
    sub.add_argument(
        "--threads",
        type=int,
        default=0,
        help="matrix-build parallelism; 0 = all cores (output is identical either way)",
    )


def _add_grid_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--l-min", type=int, default=10, help="smallest window length searched")
    sub.add_argument("--l-max", type=int, default=500, help="largest window length searched")
    sub.add_argument("--l-stride", type=int, default=5, help="window length grid stride")
    sub.add_argument(
        "--approx",
        choices=APPROX_CHOICES,
        default="gaussian",
        help="score-distribution approximation (robust is shorthand for robust_gaussian)",
    )
    sub.add_argument(
        "--exclude-min",
        action="store_true",
        help="fit the score distribution without the minimum score itself",
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="seqwin",
        description="Sequence localization with adaptively sized matching windows.",
    )
    subs = parser.add_subparsers(dest="command")
    registry: dict[str, argparse.ArgumentParser] = {}

    ingest = subs.add_parser(
        "ingest", help="convert raw images or Wi-Fi scans into a descriptor file"
    )
    ingest.add_argument("--images", help="directory of .pgm frames (sorted by filename)")
    ingest.add_argument("--wifi", help="Wi-Fi observation CSV (frame_index,ap_id,rssi)")
    ingest.add_argument("--ap-count", type=int, help="total access points; default: max ap_id + 1")
    ingest.add_argument("--downsample", type=_geometry, metavar="WxH", help="resize images, e.g. 32x16")
    ingest.add_argument("--patch-norm", type=int, metavar="N", help="patch normalization size, e.g. 4")
    ingest.add_argument("--out", required=True, help="output descriptor file stem")
    ingest.set_defaults(func=cmd_ingest)
    registry["ingest"] = ingest

    synth = subs.add_parser("synth", help="generate a seeded synthetic traverse pair")
    synth.add_argument("--n", type=int, required=True, help="number of reference (and query) frames")
    synth.add_argument("--modality", choices=("dense", "wifi"), default="dense")
    synth.add_argument("--dim", type=int, help="descriptor dim (dense default 128; wifi default 709 APs)")
    synth.add_argument("--noise-sigma", type=float, default=3.0, help="observation noise level")
    synth.add_argument("--speed-drift", type=float, default=0.1, help="relative frame-separation variation")
    synth.add_argument("--shuffle", action="store_true", help="segment-shuffle the query traverse")
    synth.add_argument("--min-frac", type=float, default=0.02, help="segment length lower bound (fraction)")
    synth.add_argument("--max-frac", type=float, default=0.20, help="segment length upper bound (fraction)")
    synth.add_argument("--shuffle-seed", type=int, help="segment shuffle seed; default seed + 1")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=cmd_synth)
    registry["synth"] = synth

    shuffle = subs.add_parser("shuffle", help="segment-shuffle an existing descriptor file")
    shuffle.add_argument("--descriptors", required=True, help="descriptor file stem to shuffle")
    shuffle.add_argument("--gt", help="ground truth CSV to remap alongside")
    shuffle.add_argument("--min-frac", type=float, default=0.02)
    shuffle.add_argument("--max-frac", type=float, default=0.20)
    shuffle.add_argument("--seed", type=int, default=0)
    shuffle.add_argument("--out", required=True, help="output directory")
    shuffle.set_defaults(func=cmd_shuffle)
    registry["shuffle"] = shuffle

    localize = subs.add_parser("localize", help="run fixed, adaptive, or sweep localization")
    _add_matrix_args(localize)
    localize.add_argument("--mode", choices=("fixed", "adaptive", "sweep"), default="adaptive")
    localize.add_argument("--fixed-L", type=int, help="window length for --mode fixed")
    _add_grid_args(localize)
    localize.add_argument("--gt", help="ground truth CSV (enables MTL / PR-AUC report)")
    localize.add_argument("--tolerance", type=int, default=5, help="correctness radius in frames")
    localize.add_argument(
        "--pr-mode",
        choices=tuple(PR_MODES),
        default="score",
        help="PR threshold variable: window score or significance p",
    )
    localize.add_argument("--curves", action="store_true", help="also write per-frame p(L) curves")
    localize.add_argument("--seed", type=int, default=0, help="recorded in the config digest")
    localize.add_argument("--config", help="key=value file; CLI flags override it")
    localize.add_argument("--out", required=True, help="output directory")
    localize.set_defaults(func=cmd_localize)
    registry["localize"] = localize

    diag = subs.add_parser("diag", help="emit plot-ready diagnostic CSVs")
    _add_matrix_args(diag)
    _add_grid_args(diag)
    diag.add_argument("--frames", type=_frame_list, help="query frames to sample, e.g. 100,500,900")
    diag.add_argument("--every", type=int, help="sample every Nth frame (default: ~16 frames total)")
    diag.add_argument("--out", required=True, help="output directory")
    diag.set_defaults(func=cmd_diag)
    registry["diag"] = diag

    return parser, registry


# --------------------------------------------------------------------------
# Config file support (plain key=value, CLI flags win)

def _read_config_file(path) -> dict[str, str]:
    p = Path(path)
    if not p.exists():
        raise ValueError(f"config file not found: {p}")
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{p}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _coerce_config(sub: argparse.ArgumentParser, entries: dict[str, str]) -> dict:
    actions = {a.dest: a for a in sub._actions}
    typed: dict[str, object] = {}
    for key, value in entries.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            typed[key] = value.lower() in ("1", "true", "yes", "on")
            continue
        converted = action.type(value) if action.type is not None else value
        if action.choices is not None and converted not in action.choices:
            raise ValueError(f"config key {key!r}: {converted!r} not in {tuple(action.choices)}")
        typed[key] = converted
    return typed


# --------------------------------------------------------------------------
# Commands

def cmd_ingest(args) -> int:
    if (args.images is None) == (args.wifi is None):
        raise ValueError("provide exactly one of --images or --wifi")
    if args.images is not None:
        src = Path(args.images)
        if not src.is_dir():
            raise FormatError(f"{src} is not a directory")
        paths = sorted(src.glob("*.pgm"))
        if not paths:
            raise FormatError(f"no .pgm files in {src}")
        descriptors = []
        for p in paths:
            img = load_pgm(p)
            if args.downsample is not None:
                img = downsample(img, *args.downsample)
            if args.patch_norm is not None:
                descriptors.append(patch_normalize(img, args.patch_norm))
            else:
                descriptors.append(Descriptor.dense(img.pixels.reshape(-1)))
    else:
        records = fileio.read_wifi_csv(args.wifi)
        if not records:
            raise FormatError(f"{args.wifi}: no observations")
        ap_count = args.ap_count if args.ap_count is not None else max(r.ap_id for r in records) + 1
        n_frames = max(r.frame_index for r in records) + 1
        descriptors = [wifi_vectorize(records, f, ap_count) for f in range(n_frames)]
    stem = fileio.save_descriptors(args.out, descriptors)
    print(f"ingest: wrote {len(descriptors)} descriptors, dim {descriptors[0].dim}, to {stem}.json/.bin")
    return 0


def cmd_synth(args) -> int:
    dim = args.dim if args.dim is not None else (709 if args.modality == "wifi" else 128)
    shuffle = None
    if args.shuffle:
        sseed = args.shuffle_seed if args.shuffle_seed is not None else args.seed + 1
        shuffle = ShuffleSpec(min_frac=args.min_frac, max_frac=args.max_frac, seed=sseed)
    spec = SynthSpec(
        n_ref=args.n,
        descriptor_dim=dim,
        modality=args.modality,
        noise_sigma=args.noise_sigma,
        speed_drift=args.speed_drift,
        shuffle=shuffle,
        seed=args.seed,
    )
    refs, queries, gt = synth_generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_descriptors(out / "reference", refs)
    fileio.save_descriptors(out / "query", queries)
    fileio.write_ground_truth_csv(out / "ground_truth.csv", gt.mapping)
    if shuffle is not None:
        perm = shuffle_traverse(len(queries), shuffle.min_frac, shuffle.max_frac, shuffle.seed)
        fileio.write_shuffle_manifest(out / "shuffle_manifest.csv", perm)
    manifest = {
        "n_ref": spec.n_ref,
        "descriptor_dim": spec.descriptor_dim,
        "modality": spec.modality,
        "noise_sigma": spec.noise_sigma,
        "speed_drift": spec.speed_drift,
        "seed": spec.seed,
        "shuffle": None
        if shuffle is None
        else {"min_frac": shuffle.min_frac, "max_frac": shuffle.max_frac, "seed": shuffle.seed},
    }
    fileio.write_report_json(out / "synth_spec.json", manifest)
    print(f"synth: wrote {len(refs)} reference / {len(queries)} query frames to {out}")
    return 0


def cmd_shuffle(args) -> int:
    descriptors = fileio.load_descriptors(args.descriptors)
    gt_map = fileio.read_ground_truth_csv(args.gt) if args.gt else None
    perm = shuffle_traverse(len(descriptors), args.min_frac, args.max_frac, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_descriptors(out / "shuffled", apply_permutation(descriptors, perm))
    fileio.write_shuffle_manifest(out / "shuffle_manifest.csv", perm)
    if gt_map is not None:
        remapped = {
            t: gt_map[int(perm[t])] for t in range(len(perm)) if int(perm[t]) in gt_map
        }
        fileio.write_ground_truth_csv(out / "ground_truth.csv", remapped)
    print(f"shuffle: {len(descriptors)} frames in {_segment_count(perm)} segments -> {out}")
    return 0


def _segment_count(perm) -> int:
    breaks = 1
    for k in range(1, len(perm)):
        if int(perm[k]) != int(perm[k - 1]) + 1:
            breaks += 1
    return breaks


def _localize_digest(args, method: str) -> str:
    """Digest of the algorithm-relevant configuration; paths and thread
    count are deliberately excluded so reruns elsewhere compare equal."""
    return fileio.config_digest(
        {
            "op": args.op,
            "mode": args.mode,
            "fixed_L": args.fixed_L,
            "approx": method,
            "l_min": args.l_min,
            "l_max": args.l_max,
            "l_stride": args.l_stride,
            "exclude_min": args.exclude_min,
            "tolerance": args.tolerance,
            "pr_mode": args.pr_mode,
            "seed": args.seed,
        }
    )


def _evaluate(results, gt_map, tolerance, pr_mode):
    gt = GroundTruth(mapping=gt_map, tolerance=tolerance)
    points = pr_curve(results, gt, mode=pr_mode)
    return mtl(results, gt), auc(points), points


def cmd_localize(args) -> int:
    method = APPROX_ALIASES.get(args.approx, args.approx)
    if args.mode == "fixed" and args.fixed_L is None:
        raise ValueError("--mode fixed requires --fixed-L")
    gt_map = fileio.read_ground_truth_csv(args.gt) if args.gt else None
    if args.mode == "sweep" and gt_map is None:
        raise ValueError("--mode sweep requires --gt (it reports MTL and AUC per variant)")
    refs = fileio.load_descriptors(args.ref)
    queries = fileio.load_descriptors(args.query)
    if refs[0].dim != queries[0].dim:
        raise ValueError(f"descriptor dims differ: ref {refs[0].dim} vs query {queries[0].dim}")
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    m = build(queries, refs, op=args.op, threads=threads)
    prefix = build_prefix(m)
    print(f"localize: {m.n_query}x{m.n_ref} difference matrix (op={args.op})")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pr_mode = PR_MODES[args.pr_mode]
    digest = _localize_digest(args, method)

    if args.mode == "fixed":
        results = fixed_localize(m, args.fixed_L, prefix=prefix)
        fileio.write_matches_csv(out / "matches.csv", results)
        if gt_map is not None:
            m_val, a_val, points = _evaluate(results, gt_map, args.tolerance, pr_mode)
            fileio.write_pr_csv(out / "pr_curve.csv", points)
            fileio.write_report_json(
                out / "report.json",
                {
                    "mtl": m_val,
                    "auc": a_val,
                    "n_frames": len(results),
                    "tolerance": args.tolerance,
                    "mode": f"fixed_L{args.fixed_L}",
                    "config_digest": digest,
                },
            )
            print(f"fixed L={args.fixed_L}: mtl {m_val}, auc {a_val:.3f}")
        return 0

    if args.mode == "adaptive":
        cfg = AdaptiveConfig(
            l_min=args.l_min,
            l_max=args.l_max,
            l_stride=args.l_stride,
            method=method,
            op=args.op,
            exclude_min=args.exclude_min,
        )
        trace = run_adaptive(m, cfg, collect_curves=args.curves, prefix=prefix)
        fileio.write_trace_csv(out / "trace.csv", trace.results)
        if args.curves and trace.curves is not None:
            pairs = [(r.query_index, c) for r, c in zip(trace.results, trace.curves)]
            fileio.write_pcurve_csv(out / "pcurves.csv", pairs, flag_minimum=True)
        if gt_map is not None:
            m_val, a_val, points = _evaluate(trace.results, gt_map, args.tolerance, pr_mode)
            fileio.write_pr_csv(out / "pr_curve.csv", points)
            fileio.write_report_json(
                out / "report.json",
                {
                    "mtl": m_val,
                    "auc": a_val,
                    "n_frames": len(trace.results),
                    "tolerance": args.tolerance,
                    "mode": f"adaptive_{method}",
                    "config_digest": digest,
                },
            )
            print(f"adaptive {method}: mtl {m_val}, auc {a_val:.3f}")
        return 0

    # sweep: the fixed-length grid plus all four adaptive approximations
    rows: list[tuple[str, str, int, float]] = []
    for L in SWEEP_LENGTHS:
        results = fixed_localize(m, L, prefix=prefix)
        fileio.write_matches_csv(out / f"matches_L{L}.csv", results)
        m_val, a_val, _ = _evaluate(results, gt_map, args.tolerance, pr_mode)
        rows.append(("fixed", str(L), m_val, a_val))
    for approx in METHODS:
        cfg = AdaptiveConfig(
            l_min=args.l_min,
            l_max=args.l_max,
            l_stride=args.l_stride,
            method=approx,
            op=args.op,
            exclude_min=args.exclude_min,
        )
        trace = run_adaptive(m, cfg, prefix=prefix)
        fileio.write_trace_csv(out / f"trace_{approx}.csv", trace.results)
        m_val, a_val, _ = _evaluate(trace.results, gt_map, args.tolerance, pr_mode)
        rows.append(("adaptive", approx, m_val, a_val))
    with open(out / "sweep_summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,label,mtl,auc\n")
        for kind, label, m_val, a_val in rows:
            fh.write(f"{kind},{label},{m_val},{fileio.fmt(a_val)}\n")
    fileio.write_report_json(
        out / "report.json",
        {
            "mtl": min(r[2] for r in rows),
            "auc": max(r[3] for r in rows),
            "n_frames": m.n_query,
            "tolerance": args.tolerance,
            "mode": "sweep",
            "config_digest": digest,
        },
    )
    print(f"{'kind':<10}{'label':<18}{'mtl':>6}  {'auc':>6}")
    for kind, label, m_val, a_val in rows:
        print(f"{kind:<10}{label:<18}{m_val:>6}  {a_val:>6.3f}")
    return 0


def cmd_diag(args) -> int:
    method = APPROX_ALIASES.get(args.approx, args.approx)
    if args.frames is not None and args.every is not None:
        raise ValueError("--frames and --every are mutually exclusive")
    refs = fileio.load_descriptors(args.ref)
    queries = fileio.load_descriptors(args.query)
    if refs[0].dim != queries[0].dim:
        raise ValueError(f"descriptor dims differ: ref {refs[0].dim} vs query {queries[0].dim}")
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    m = build(queries, refs, op=args.op, threads=threads)
    prefix = build_prefix(m)
    cfg = AdaptiveConfig(
        l_min=args.l_min,
        l_max=args.l_max,
        l_stride=args.l_stride,
        method=method,
        op=args.op,
        exclude_min=args.exclude_min,
    )
    if args.frames is not None:
        sampled = args.frames
        bad = [i for i in sampled if not 0 <= i < m.n_query]
        if bad:
            raise ValueError(f"frames out of range [0, {m.n_query}): {bad}")
    else:
        step = args.every if args.every is not None else max(1, m.n_query // 16)
        if step < 1:
            raise ValueError("--every must be >= 1")
        sampled = list(range(0, m.n_query, step))
    sampled = [i for i in sampled if feasible_grid(cfg, i, m.n_ref)]
    if not sampled:
        raise ValueError("no sampled frame admits any window length; lower --l-min")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "dist_stats.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_index,L,mean,std,min\n")
        for i in sampled:
            for L in feasible_grid(cfg, i, m.n_ref):
                row = score_row(prefix, i, L)
                fh.write(
                    f"{i},{L},{fileio.fmt(row.mean())},{fileio.fmt(row.std())},{fileio.fmt(row.min())}\n"
                )

    for approx in METHODS:
        curves = []
        for i in sampled:
            curve = [
                (L, p_of_L(prefix, i, L, approx, cfg.exclude_min)[0])
                for L in feasible_grid(cfg, i, m.n_ref)
            ]
            curves.append((i, curve))
        fileio.write_pcurve_csv(out / f"pcurve_{approx}.csv", curves, flag_minimum=True)

    trace = run_adaptive(m, cfg, prefix=prefix)
    with open(out / "chosen_L.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_index,chosen_L\n")
        for r in trace.results:
            fh.write(f"{r.query_index},{r.window_len}\n")
    print(f"diag: {len(sampled)} sampled frames, chosen-L series of {len(trace.results)} -> {out}")
    return 0


# --------------------------------------------------------------------------
# Entry

def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "command", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        if getattr(args, "config", None):
            sub = registry[args.command]
            sub.set_defaults(**_coerce_config(sub, _read_config_file(args.config)))
            try:
                args = parser.parse_args(argv)
            except SystemExit:
                return 1
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 3
    except Exception:
        traceback.print_exc()
        return 3


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
