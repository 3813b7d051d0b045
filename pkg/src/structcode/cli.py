"""``structcode`` command line: identify, embed, render, decode, roundtrip."""

from __future__ import annotations

import argparse
import os
import sys

from .decode import PIPELINES, decode_image
from .embedder import embed_message
from .errors import (
    CodecError,
    DecodeError,
    DesignError,
    EmbedError,
    ImageError,
    MessageTooLong,
    TooFewElements,
    UnknownStructure,
)
from .model import capacity, joint_perimeter
from .raster import read_image, write_image
from .render import RenderConfig, render
from .svg import load_design, save_design

EXIT_OK, EXIT_USAGE, EXIT_DECODE, EXIT_INFEASIBLE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _seed(args) -> int:
    env = os.environ.get("STRUCTCODE_SEED")
    if env is None or env == "":
        return args.seed
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"STRUCTCODE_SEED must be an integer, got {env!r}") from None


def _load(path):
    try:
        return load_design(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except DesignError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _angles(text: str) -> list[float]:
    """``"0,10,20"`` or ``"0:45:5"`` (start:stop:step, stop included)."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((b - a) / step))
            return [a + i * step for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle list {text!r}") from None


def cmd_identify(args, out) -> int:
    design = _load(args.design)
    lines = []
    for plate in design.plates:
        per = joint_perimeter(plate)
        if not per.edges:
            continue
        try:
            cap = capacity(per)
        except TooFewElements:
            lines.append(f"{plate.id}: finger joints, {per.n_elements} elements, too few to encode")
            continue
        lines.append(f"{plate.id}: finger joints, {cap.n_elements} elements, "
                     f"Δd {cap.delta_d_min:.2f} mm, {cap.max_chars} chars")
    for h in design.hinges:
        try:
            cap = capacity(h)
        except TooFewElements:
            lines.append(f"{h.id}: {h.n_cuts} cuts, {h.n_elements} links, too few to encode")
            continue
        lines.append(f"{h.id}: {h.n_cuts} cuts, {cap.n_elements} links, "
                     f"Δd {cap.delta_d_min:.2f} mm, {cap.max_chars} chars")
    print("\n".join(lines) if lines else "no compatible structures", file=out)
    return EXIT_OK


def cmd_embed(args, out) -> int:
    if args.alpha is not None and args.alpha <= 0:
        raise UsageError("--alpha must be positive")
    design = _load(args.design)
    try:
        new, plan = embed_message(design, args.structure, args.message, alpha=args.alpha)
    except UnknownStructure as exc:
        raise UsageError(str(exc)) from None
    save_design(new, args.output)
    bases = ", ".join(f"{d:.3f}" for d in plan.base_widths)
    print(f"{plan.target}: {len(plan.trits)} elements, Δd {plan.delta_d:.3f} mm, d {bases} mm",
          file=out)
    return EXIT_OK


def _render_config(args) -> RenderConfig:
    try:
        return RenderConfig(px_per_mm=args.pxmm, yaw=getattr(args, "yaw", 0.0), pitch=getattr(args, "pitch", 0.0),
                            blur_sigma=args.blur, noise_sigma=args.noise, seed=_seed(args),
                            material=args.material, gap=args.gap, background=args.background,
                            margin_mm=args.margin)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_render(args, out) -> int:
    cfg = _render_config(args)
    design = _load(args.design)
    img = render(design, cfg)
    write_image(img, args.output)
    print(f"{args.output}: {img.shape[1]}x{img.shape[0]} px", file=out)
    return EXIT_OK


def cmd_decode(args, out) -> int:
    try:
        img = read_image(args.image)
    except OSError as exc:
        raise UsageError(f"cannot read {args.image}: {exc.strerror or exc}") from None
    except ImageError as exc:
        raise UsageError(f"{args.image}: {exc}") from None
    try:
        report = decode_image(img, args.pipeline, seed=_seed(args))
    except (DecodeError, CodecError, ImageError) as exc:
        print(f"decode failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DECODE
    print(report.to_json(timings=args.timings), file=out)
    return EXIT_OK


def cmd_roundtrip(args, out) -> int:
    from .evaluate import structure_kind, structures, sweep

    if args.trials <= 0:
        raise UsageError("--trials must be at least 1")
    if not 0.0 <= args.require <= 1.0:
        raise UsageError("--require must lie in [0, 1]")
    base = _render_config(args)
    design = _load(args.design)
    ids = [args.structure] if args.structure else structures(design)
    if not ids:
        raise UsageError("design has no compatible structures")
    missed = False
    for sid in ids:
        try:
            kind, _ = structure_kind(design, sid)
        except UnknownStructure as exc:
            raise UsageError(str(exc)) from None
        cells = sweep(design, sid, args.angles, axis=args.axis, trials=args.trials,
                      seed=_seed(args), base=base.with_(yaw=0.0, pitch=0.0))
        print(f"{sid} ({kind}), {args.axis} sweep, {args.trials} trials per angle", file=out)
        print(f"{'angle':>8} {'success':>8} {'median s':>9}  required", file=out)
        for c in cells:
            enforced = args.within is None or abs(c.angle) <= args.within + 1e-9
            fail = enforced and c.rate < args.require
            missed |= fail
            flag = ("MISS" if fail else "ok") if enforced else "-"
            print(f"{c.angle:8.1f} {100 * c.rate:7.1f}% {c.median_seconds:9.3f}  {flag}",
                  file=out)
    return EXIT_DECODE if missed else EXIT_OK


def _add_render_flags(p: argparse.ArgumentParser, with_view: bool = True) -> None:
    d = RenderConfig()
    p.add_argument("--pxmm", type=float, default=d.px_per_mm, help="pixels per millimetre")
    if with_view:
        p.add_argument("--yaw", type=float, default=d.yaw, help="rotation about the vertical axis, degrees")
        p.add_argument("--pitch", type=float, default=d.pitch, help="rotation about the horizontal axis, degrees")
    p.add_argument("--blur", type=float, default=d.blur_sigma, help="Gaussian blur sigma in px")
    p.add_argument("--noise", type=float, default=d.noise_sigma, help="additive noise std")
    p.add_argument("--material", type=int, default=d.material)
    p.add_argument("--gap", type=int, default=d.gap)
    p.add_argument("--background", type=int, default=d.background)
    p.add_argument("--margin", type=float, default=d.margin_mm, help="frame margin in mm")
    p.add_argument("--seed", type=int, default=d.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structcode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="list structures that can carry a message")
    p.add_argument("design")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("embed", help="write a message into a structure")
    p.add_argument("design")
    p.add_argument("--structure", required=True, help="plate id or hinge id (see identify)")
    p.add_argument("--message", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="camera distance factor; defaults to 80 for joints, 45 for hinges")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("render", help="synthesise a camera image of a design")
    p.add_argument("design")
    _add_render_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("decode", help="read a message from an image, print JSON")
    p.add_argument("image")
    p.add_argument("--pipeline", choices=sorted(PIPELINES), default="auto")
    p.add_argument("--timings", action="store_true", help="include per-stage timings")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="embed random messages, render, decode, report success")
    p.add_argument("design")
    p.add_argument("--structure", default=None, help="default: every compatible structure")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--angles", "--angle-sweep", type=_angles, default=[0.0, 10.0, 20.0],
                   help="comma list or start:stop:step in degrees")
    p.add_argument("--axis", choices=("yaw", "pitch"), default="yaw")
    p.add_argument("--require", type=float, default=0.95, help="success rate to enforce")
    p.add_argument("--within", type=float, default=None,
                   help="only enforce at |angle| up to this many degrees")
    _add_render_flags(p, with_view=False)
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"structcode: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MessageTooLong, EmbedError) as exc:
        print(f"structcode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CodecError as exc:
        print(f"structcode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
