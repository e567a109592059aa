"""``arls`` command line: render, track, simulate, bench.

Exit codes: 0 success, 1 configuration or I/O error, 2 no object tracked.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import figures
from .config import ConfigError, RunConfig
from .controller import LampBank, control_step, events_to_csv, port_register
from .detection import detect
from .harness import report_csv, run_batch, sweep_cells, cell_scenario, trial_frames
from .imaging import PGMError, load_frame, read_sequence, write_sequence
from .kinematics import TrackState, update_track

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY_TRACK = 2


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if not text.strip() or any(not p for p in parts):
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", default=os.environ.get("ARLS_CONFIG"),
                        help="key = value config file (default: $ARLS_CONFIG)")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--out")
    shared.add_argument("--jobs", type=int, default=1)
    shared.add_argument("--set", dest="sets", action="append", type=_key_value, default=[],
                        metavar="KEY=VALUE", help="override any config key")
    shared.add_argument("--speed", type=float, help="vehicle speed in m/s")
    shared.add_argument("--blur", type=float, help="fraction of frames blurred")
    shared.add_argument("--noise", type=int, help="noise amplitude")
    shared.add_argument("--latency", type=float, help="processing latency in seconds")

    parser = _Parser(prog="arls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("render", parents=[shared], help="write one traverse as PGM frames")
    p.add_argument("--frames", type=int, help="limit (or, for a stationary vehicle, set) the frame count")
    p.add_argument("--trial", type=int, default=0, help="trial index selecting the blur/noise draws")

    p = sub.add_parser("track", parents=[shared], help="detect and track a PGM frame sequence")
    p.add_argument("frames_dir")
    p.add_argument("--background", help="reference background PGM (default: first frame)")

    p = sub.add_parser("simulate", parents=[shared], help="run a batch of trials")
    p.add_argument("--trials", type=int)
    p.add_argument("--dump-events", metavar="DIR", help="write each trial's lamp event log")

    p = sub.add_parser("bench", parents=[shared], help="sweep speeds x blur levels")
    p.add_argument("--speeds", type=_float_list, required=True)
    p.add_argument("--blurs", type=_float_list, required=True)
    p.add_argument("--diagonal", action="store_true", help="pair speeds and blurs element-wise")
    p.add_argument("--trials", type=int)
    return parser


def _config(args) -> RunConfig:
    overrides = dict(args.sets)
    for key, attr in (
        ("seed", "seed"),
        ("true_speed", "speed"),
        ("blur_fraction", "blur"),
        ("noise_amplitude", "noise"),
        ("processing_latency", "latency"),
        ("trials", "trials"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return RunConfig.load(args.config, overrides)


def _existing_dir(path: str | None, what: str) -> Path:
    if path is None:
        raise CLIError(f"{what}: --out DIR is required")
    out = Path(path)
    if not out.is_dir():
        raise CLIError(f"{what}: output directory does not exist: {out}")
    if not os.access(out, os.W_OK):
        raise CLIError(f"{what}: output directory is not writable: {out}")
    return out


def cmd_render(args) -> int:
    scenario = _config(args).scenario()
    out = _existing_dir(args.out, "render")
    paths = write_sequence(trial_frames(scenario, args.trial, args.frames), out)
    print(f"{len(paths)} frames written to {out}")
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _config(args)
    scenario = cfg.scenario()
    cal = scenario.calibration
    frames_dir = Path(args.frames_dir)
    if not frames_dir.is_dir():
        raise CLIError(f"track: not a directory: {frames_dir}")
    frames = read_sequence(frames_dir)
    if not frames:
        raise CLIError(f"track: no frame_NNNNNN.pgm files in {frames_dir}")
    if args.background:
        bg_path = Path(args.background)
        try:
            reference = load_frame(bg_path.read_bytes())
        except OSError as exc:
            raise CLIError(f"track: cannot read {bg_path}: {exc.strerror}") from None
    else:
        reference = frames[0]
    for f in frames:
        if f.pixels.shape != reference.pixels.shape:
            raise CLIError(
                f"track: frame {f.index} is {f.width}x{f.height}, "
                f"reference is {reference.width}x{reference.height}"
            )

    track = TrackState()
    bank = LampBank(positions=tuple(scenario.lamp_positions))
    seen = False
    print("frame,centroid_x,centroid_y,area,r_m,v_mps,register_hex")
    for f in frames:
        d = detect(f, reference, scenario.threshold, scenario.min_area)
        track = update_track(track, d, cal)
        bank = control_step(bank, track, scenario.controller, cal, f.index)
        seen = seen or d.found
        if d.found:
            v = "" if track.v is None else f"{track.v:.4f}"
            print(f"{f.index},{d.centroid_x:.3f},{d.centroid_y:.3f},{d.area},{track.r:.4f},{v},"
                  f"0x{port_register(bank):02X}")
        else:
            print(f"{f.index},,,0,,,0x{port_register(bank):02X}")
    if not seen:
        print("no moving object detected", file=sys.stderr)
        return EXIT_EMPTY_TRACK
    v_mean = track.v_mean
    print(f"v_mean = {'n/a' if v_mean is None else f'{v_mean:.4f}'} m/s "
          f"over {len(track.v_history)} samples")
    return EXIT_OK


def _write_or_print(text: str, out: str | None) -> Path | None:
    if out is None:
        sys.stdout.write(text)
        return None
    path = Path(out)
    try:
        path.write_text(text, newline="\n")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc.strerror}") from None
    return path


def cmd_simulate(args) -> int:
    scenario = _config(args).scenario()
    summary = run_batch(scenario, args.jobs)
    written = _write_or_print(report_csv([summary]), args.out)
    info = sys.stdout if written else sys.stderr
    print(f"performance: {summary.performance_pct:.1f}% "
          f"({summary.successes}/{summary.trials} trials)", file=info)
    for reason, count in summary.failures.items():
        print(f"  {reason}: {count}", file=info)
    if args.dump_events:
        dump = _existing_dir(args.dump_events, "simulate --dump-events")
        for r in summary.reports:
            (dump / f"trial_{r.trial_index:04d}_events.csv").write_text(events_to_csv(r.events), newline="\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    base = _config(args).scenario()
    out = _existing_dir(args.out, "bench") if args.out else None
    try:
        cells = sweep_cells(args.speeds, args.blurs, args.diagonal)
    except ValueError as exc:
        raise CLIError(f"bench: {exc}") from None
    summaries = []
    for v, b in cells:
        start = time.perf_counter()
        summaries.append(run_batch(cell_scenario(base, v, b), args.jobs))
        elapsed = time.perf_counter() - start
        print(f"cell v={v:g} m/s blur={b:g}: {summaries[-1].performance_pct:.1f}% in {elapsed:.2f} s",
              file=sys.stderr)
    text = report_csv(summaries)
    if out is None:
        sys.stdout.write(text)
        return EXIT_OK
    _write_or_print(text, str(out / "bench.csv"))
    figures.plot_speed_correlation(summaries, out / "speed_correlation.png")
    figures.plot_performance(summaries, out / "performance.png")
    print(f"wrote {out / 'bench.csv'}, speed_correlation.png, performance.png")
    return EXIT_OK


COMMANDS = {"render": cmd_render, "track": cmd_track, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CLIError, PGMError) as exc:
        print(f"arls {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"arls {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
