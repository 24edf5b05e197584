"""Command-line entry point: replay, analyze, taxonomy, compare, gen."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import FormatError, HapticsError, TunnelingError
from .io import fmt, parse_force_frames, read_hand_file, read_scene_file, write_hand_frames
from .metrics import ROW_FIELDS, summarize_series

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FORMAT = 2
EXIT_TUNNEL = 3

ANGLE_FIELDS = ("yaw", "pitch", "roll", "grasp_angle", "angle_thumb_index",
                "angle_index_middle", "angle_thumb_middle")
FINGERS3 = ("thumb", "index", "middle")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_replay(args) -> int:
    from .engine import replay

    scene = read_scene_file(args.scene)
    frames = read_hand_file(args.hand)
    report = replay(scene, frames, rate=args.rate)
    out = Path(args.out)
    _write(out / "ticks.csv", report.ticks_csv())
    _write(out / "summary.txt", report.summary_text())
    print(f"{len(report.ticks)} ticks, outcome {report.outcome.value}; wrote {out}")
    return EXIT_OK


def metrics_csv(rows) -> str:
    lines = [",".join(ROW_FIELDS)]
    for r in rows:
        v = r.values()
        lines.append(",".join(fmt(v[name]) for name in ROW_FIELDS))
    return "\n".join(lines) + "\n"


def stats_text(analysis) -> str:
    lines = []
    for name, s in analysis.stats.items():
        lines.append(
            f"{name} n {s.n} mean {fmt(s.mean)} sd {fmt(s.sd)} min {fmt(s.min)} "
            f"q1 {fmt(s.q1)} median {fmt(s.median)} q3 {fmt(s.q3)} max {fmt(s.max)} "
            f"iqr {fmt(s.iqr)} qq_corr {fmt(s.qq_corr)} "
            f"normal_in_iqr {'yes' if s.normal_in_iqr else 'no'}"
            + (" degenerate" if s.degenerate else ""))
        if name in ANGLE_FIELDS:
            d = math.degrees
            lines.append(
                f"{name}_deg mean {fmt(d(s.mean))} sd {fmt(d(s.sd))} min {fmt(d(s.min))} "
                f"median {fmt(d(s.median))} max {fmt(d(s.max))} iqr {fmt(d(s.iqr))}")
    for name, msg in analysis.errors.items():
        lines.append(f"{name} unavailable: {msg}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    from .metrics import analyze_stream

    frames = read_hand_file(args.hand)
    analysis = analyze_stream(frames, grabbing_only=args.grabbing_only)
    out = Path(args.out)
    _write(out / "metrics.csv", metrics_csv(analysis.rows))
    _write(out / "stats.txt", stats_text(analysis))
    print(f"{len(analysis.rows)} frames; wrote {out}")
    return EXIT_OK


def cmd_taxonomy(args) -> int:
    from .taxonomy import GraspQuery, export_csv, filter_grasps, load_taxonomy

    if args.type or args.opposition or args.thumb:
        rows = filter_grasps(GraspQuery(args.type, args.opposition, args.thumb))
    else:
        rows = list(load_taxonomy())
    sys.stdout.write(export_csv(rows))
    return EXIT_OK


def _read_rendered(path) -> dict[str, list[float]]:
    cols = {f: f"vf{i}_force" for i, f in enumerate(FINGERS3, start=1)}
    out: dict[str, list[float]] = {f: [] for f in FINGERS3}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in cols.values() if c not in (reader.fieldnames or [])]
        if missing:
            raise FormatError(f"{path}: missing column {missing[0]}")
        for lineno, row in enumerate(reader, start=2):
            for f, c in cols.items():
                try:
                    out[f].append(float(row[c]))
                except (TypeError, ValueError):
                    raise FormatError(f"{path}: line {lineno}: bad value in {c}") from None
    return out


def compare_report(rendered: dict[str, list[float]], measured: dict[str, list[float]]) -> str:
    """Per-finger ranges of loaded samples (force > 0) and their overlap."""
    lines = ["finger source n min q1 median q3 max"]
    summary = []
    for f in FINGERS3:
        ranges = []
        for label, xs in (("rendered", rendered[f]), ("fsr", measured[f])):
            loaded = [x for x in xs if x > 0]
            if len(loaded) < 2:
                lines.append(f"{f} {label} {len(loaded)} - - - - -")
                ranges.append(None)
                continue
            s = summarize_series(loaded)
            lines.append(f"{f} {label} {s.n} {fmt(s.min)} {fmt(s.q1)} {fmt(s.median)} "
                         f"{fmt(s.q3)} {fmt(s.max)}")
            ranges.append((s.min, s.max))
        if None in ranges:
            summary.append(f"{f} overlap -")
            continue
        (a0, a1), (b0, b1) = ranges
        lo, hi = max(a0, b0), min(a1, b1)
        width = max(hi - lo, 0.0)
        span = max(a1, b1) - min(a0, b0)
        frac = width / span if span > 0 else 1.0
        if lo <= hi:
            summary.append(f"{f} overlap {fmt(lo)} {fmt(hi)} fraction {fmt(frac)}")
        else:
            summary.append(f"{f} overlap - - fraction {fmt(0.0)}")
    return "\n".join(lines + summary) + "\n"


def cmd_compare(args) -> int:
    rendered = _read_rendered(args.rendered)
    with open(args.fsr, encoding="utf-8") as fh:
        frames = parse_force_frames(fh)
    measured = {f: [fr.f[i] for fr in frames] for i, f in enumerate(FINGERS3)}
    sys.stdout.write(compare_report(rendered, measured))
    return EXIT_OK


def cmd_gen(args) -> int:
    from .io import scene_to_toml
    from .presets import generate, load_preset_scene

    frames = generate(args.preset, args.seed, args.duration)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_hand_frames(frames, fh)
    else:
        write_hand_frames(frames, sys.stdout)
    if args.scene_out:
        _write(Path(args.scene_out), scene_to_toml(load_preset_scene(args.preset)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tripod-haptics",
                                description="Tripod haptic grasp replay and grasp metrics.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("replay", help="replay a hand stream against a scene")
    r.add_argument("--scene", required=True)
    r.add_argument("--hand", required=True)
    r.add_argument("--rate", type=int, default=None, help="tick rate in Hz (scene default)")
    r.add_argument("--out", default=".")
    r.set_defaults(func=cmd_replay)

    a = sub.add_parser("analyze", help="per-frame grasp metrics and summaries")
    a.add_argument("--hand", required=True)
    a.add_argument("--grabbing-only", action="store_true")
    a.add_argument("--out", default=".")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("taxonomy", help="print the grasp taxonomy as CSV")
    t.add_argument("--type", choices=["Power", "Precision", "Intermediate"])
    t.add_argument("--opposition", choices=["Palm", "Pad", "Side"])
    t.add_argument("--thumb", choices=["Abducted", "Adducted"])
    t.set_defaults(func=cmd_taxonomy)

    c = sub.add_parser("compare", help="rendered vs FSR force ranges per finger")
    c.add_argument("--rendered", required=True)
    c.add_argument("--fsr", required=True)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gen", help="emit a synthetic hand stream")
    g.add_argument("--preset", required=True, choices=["tripod-press", "grasp-lift",
                                                        "free-motion"])
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--duration", type=float, default=None, help="seconds")
    g.add_argument("--out", default=None, help="file (default: standard output)")
    g.add_argument("--scene-out", default=None, help="also write the companion scene")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except TunnelingError as exc:
        print(f"tunneling: {exc}", file=sys.stderr)
        return EXIT_TUNNEL
    except (HapticsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
