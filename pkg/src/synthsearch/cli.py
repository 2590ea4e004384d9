"""Command-line entry point.

Subcommands: generate, render, interpolate, evaluate, ablate, bench.
Exit codes are a stable contract: 0 success, 2 usage or validation error,
3 provider unreachable, 4 run aborted mid-flight (partial history is still
written). Every command that emits delimited output also renders a figure
next to it. With --seed and the surrogate provider, all data outputs are
byte-reproducible; manifest.json records wall-clock timings and is the one
intentionally non-reproducible output.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .architectures import ARCHITECTURE_IDS, ArchitectureError, SynthPatch, interpolate
from .descriptors import describe, reports_to_csv
from .driver import optimize
from .embeddings import (
    ProviderError,
    ProviderTransportError,
    SurrogateProvider,
    UnknownTargetError,
    make_provider,
)
from .engine import render_patch
from .fileio import (
    PatchFormatError,
    PatchMeta,
    WavFormatError,
    export_spectrogram,
    load_patch,
    read_wav,
    save_patch,
    write_wav,
)
from .strategies import STRATEGY_IDS, StrategyConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROVIDER = 3
EXIT_ABORTED = 4


class UsageError(Exception):
    """Validation failure that maps to exit code 2."""


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list[str],
                    status: str = "completed", timings: dict | None = None) -> None:
    doc = {
        "manifest_version": 1,
        "tool": "synthsearch",
        "tool_version": __version__,
        "command": command,
        "created_at": _utc_now(),
        "status": status,
        "config": config,
        "outputs": outputs,
        "timings": timings or {},
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n",
                                           encoding="utf-8")


def _write_history_csv(path: Path, history) -> None:
    lines = ["iteration,best,mean"]
    lines += [f"{i + 1},{best:.9f},{mean:.9f}" for i, (best, mean) in enumerate(history)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _round_theta(theta: np.ndarray) -> np.ndarray:
    # Patch JSON stores 9 decimals; render from the quantized values so the
    # saved audio and a later render of the saved patch are bit-identical.
    return np.round(theta, 9)


def _build_provider(spec: str):
    try:
        return make_provider(spec)
    except ValueError as exc:
        raise UsageError(str(exc))
    except ProviderError:
        raise


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    if bool(args.prompt) == bool(args.target_audio):
        raise UsageError("exactly one of --prompt or --target-audio is required")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    provider = _build_provider(args.provider)
    if args.target_audio:
        if not Path(args.target_audio).exists():
            raise UsageError(f"target audio not found: {args.target_audio}")
        target = str(args.target_audio)
        if isinstance(provider, SurrogateProvider):
            provider.register(target, args.target_audio)
        else:
            from .embeddings import AudioTargetAdapter

            provider = AudioTargetAdapter(provider, read_wav(args.target_audio))
    else:
        target = args.prompt

    config = StrategyConfig(strategy=args.strategy, population_size=args.popsize,
                            seed=args.seed)
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc))

    def log_iteration(i, run):
        best, mean = run.history[-1]
        print(f"iteration {i}/{args.iterations}  best {best:.6f}  mean {mean:.6f}",
              file=sys.stderr)

    started = time.perf_counter()
    try:
        run = optimize(target, args.arch, provider, config,
                       iterations=args.iterations, duration=args.duration,
                       on_iteration=log_iteration if not args.quiet else None)
    except UnknownTargetError as exc:
        raise UsageError(str(exc))

    outputs: list[str] = []
    config_doc = {
        "target": target, "architecture": args.arch, "strategy": args.strategy,
        "population_size": args.popsize, "iterations": args.iterations,
        "duration": args.duration, "seed": args.seed, "provider": args.provider,
    }
    _write_history_csv(out_dir / "history.csv", run.history)
    outputs.append("history.csv")

    if not run.completed:
        _write_manifest(out_dir, "generate", config_doc, outputs, status="aborted",
                        timings={"iteration_seconds": run.iteration_seconds,
                                 "total_seconds": time.perf_counter() - started})
        print(f"run aborted: {run.error}", file=sys.stderr)
        return EXIT_ABORTED

    best = SynthPatch(args.arch, _round_theta(run.best_theta))
    meta = PatchMeta(prompt=target, seed=args.seed, fitness=run.best_fitness)
    save_patch(best, meta, out_dir / "best.patch.json")
    outputs.append("best.patch.json")

    audio = render_patch(best, args.duration, noise_seed=args.seed)
    write_wav(audio, out_dir / "best.wav", encoding="float32")
    outputs.append("best.wav")

    export_spectrogram(audio, out_dir / "best_spectrogram.csv")
    outputs.append("best_spectrogram.csv")

    if not args.no_figures:
        from . import plotting

        plotting.save_history_figure(run.history, out_dir / "history.png")
        plotting.save_spectrogram_figure(audio, out_dir / "best_spectrogram.png",
                                         title=target)
        outputs += ["history.png", "best_spectrogram.png"]

    _write_manifest(out_dir, "generate", config_doc, outputs,
                    timings={"iteration_seconds": run.iteration_seconds,
                             "total_seconds": time.perf_counter() - started})
    if not args.quiet:
        print(f"best fitness {run.best_fitness:.6f} "
              f"(final population best {run.final_best_fitness:.6f})")
        print(f"wrote {', '.join(outputs)} to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# render / interpolate
# ---------------------------------------------------------------------------

def _load_patch_file(path: str):
    try:
        return load_patch(path)
    except (PatchFormatError, FileNotFoundError, OSError) as exc:
        raise UsageError(str(exc))


def cmd_render(args) -> int:
    pf = _load_patch_file(args.patch)
    seed = args.seed if args.seed is not None else (pf.meta.seed or 0)
    audio = render_patch(pf.to_patch(), args.duration, noise_seed=seed)
    write_wav(audio, args.out, encoding=args.encoding)
    if not args.quiet:
        print(f"rendered {args.patch} -> {args.out} ({audio.duration:.2f} s)")
    return EXIT_OK


def cmd_interpolate(args) -> int:
    pf_a = _load_patch_file(args.patch_a)
    pf_b = _load_patch_file(args.patch_b)
    if pf_a.architecture != pf_b.architecture:
        raise UsageError(
            f"patches use different architectures: "
            f"{pf_a.architecture} vs {pf_b.architecture}"
        )
    if args.steps < 0:
        raise UsageError("--steps must be >= 0")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else (pf_a.meta.seed or 0)

    a, b = pf_a.to_patch(), pf_b.to_patch()
    outputs: list[str] = []
    buffers = []
    n_points = args.steps + 2
    for i in range(n_points):
        lam = i / (n_points - 1)
        patch = interpolate(a, b, lam)
        audio = render_patch(patch, args.duration, noise_seed=seed)
        buffers.append(audio)
        wav_name = f"step_{i:02d}.wav"
        patch_name = f"step_{i:02d}.patch.json"
        write_wav(audio, out_dir / wav_name, encoding="float32")
        save_patch(patch, PatchMeta(seed=seed), out_dir / patch_name)
        outputs += [wav_name, patch_name]

    if not args.no_figures:
        from . import plotting

        plotting.save_interpolation_figure(buffers, out_dir / "interpolation.png")
        outputs.append("interpolation.png")

    _write_manifest(out_dir, "interpolate",
                    {"patch_a": args.patch_a, "patch_b": args.patch_b,
                     "steps": args.steps, "duration": args.duration, "seed": seed},
                    outputs)
    if not args.quiet:
        print(f"wrote {n_points} interpolation steps to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    paths: list[str] = []
    for pattern in args.inputs:
        paths.extend(globmod.glob(pattern))
    paths = sorted(set(paths))
    if not paths:
        raise UsageError(f"no files match {args.inputs}")

    rows = []
    for path in paths:
        try:
            buffer = read_wav(path)
        except WavFormatError as exc:
            raise UsageError(str(exc))
        rows.append((path, describe(buffer)))

    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(reports_to_csv(rows), encoding="utf-8")
    if not args.no_figures:
        from . import plotting

        plotting.save_descriptor_figure(rows, out.with_suffix(".png"))
    if not args.quiet:
        print(f"evaluated {len(rows)} files -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------

def _read_prompts(path: str) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read prompts file: {exc}")
    prompts = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            prompts.append(line)
    if not prompts:
        raise UsageError(f"prompts file {path} contains no prompts")
    return prompts


def cmd_ablate(args) -> int:
    axes = [("arch", args.archs), ("duration", args.durations),
            ("strategy", args.strategies)]
    chosen = [(name, spec) for name, spec in axes if spec]
    if len(chosen) != 1:
        raise UsageError("exactly one of --archs, --durations, --strategies is required")
    axis, spec = chosen[0]
    variants = [v.strip() for v in spec.split(",") if v.strip()]
    if not variants:
        raise UsageError(f"--{axis}s list is empty")

    prompts = _read_prompts(args.prompts)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []   # (prompt, variant, repeat, final_best)
    curves: dict[str, list[np.ndarray]] = {v: [] for v in variants}
    run_index = 0
    for prompt in prompts:
        for variant in variants:
            for repeat in range(args.repeats):
                arch = variant if axis == "arch" else args.arch
                duration = float(variant) if axis == "duration" else args.duration
                strategy = variant if axis == "strategy" else args.strategy
                provider = _build_provider(args.provider)
                config = StrategyConfig(strategy=strategy,
                                        population_size=args.popsize,
                                        seed=args.seed + run_index)
                try:
                    run = optimize(prompt, arch, provider, config,
                                   iterations=args.iterations, duration=duration)
                except UnknownTargetError as exc:
                    raise UsageError(str(exc))
                if not run.completed:
                    print(f"run aborted: {run.error}", file=sys.stderr)
                    return EXIT_ABORTED
                results.append((prompt, variant, repeat, run.best_fitness))
                curves[variant].append(np.array([b for b, _ in run.history]))
                run_index += 1
                if not args.quiet:
                    print(f"{prompt} | {axis}={variant} | repeat {repeat}: "
                          f"best {run.best_fitness:.6f}", file=sys.stderr)

    lines = ["prompt,variant,repeat,final_best"]
    lines += [f"{p},{v},{r},{f:.9f}" for p, v, r, f in results]
    (out_dir / "results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    mean_curves = {v: np.mean(np.stack(rows), axis=0) for v, rows in curves.items()}
    lines = ["variant,iteration,mean_best"]
    for v, curve in mean_curves.items():
        lines += [f"{v},{i + 1},{val:.9f}" for i, val in enumerate(curve)]
    (out_dir / "curves.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    outputs = ["results.csv", "curves.csv"]
    if not args.no_figures:
        from . import plotting

        plotting.save_ablation_figure(
            {v: list(c) for v, c in mean_curves.items()}, out_dir / "curves.png")
        outputs.append("curves.png")

    _write_manifest(out_dir, "ablate",
                    {"prompts": args.prompts, "axis": axis, "variants": variants,
                     "repeats": args.repeats, "popsize": args.popsize,
                     "iterations": args.iterations, "seed": args.seed,
                     "provider": args.provider},
                    outputs)
    if not args.quiet:
        print(f"wrote {', '.join(outputs)} to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args) -> int:
    pops = [int(v) for v in args.popsize.split(",") if v.strip()]
    iter_counts = [int(v) for v in args.iterations.split(",") if v.strip()]
    if not pops or not iter_counts:
        raise UsageError("--popsize and --iterations must be non-empty lists")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Self-contained target: a fixed random patch rendered by this tool.
    rng = np.random.Generator(np.random.PCG64(args.seed))
    target_audio = render_patch(SynthPatch.random(args.arch, rng), args.duration,
                                noise_seed=args.seed)
    rows = []
    for iters in iter_counts:
        for pop in pops:
            provider = SurrogateProvider({"bench-target": target_audio})
            config = StrategyConfig(strategy=args.strategy, population_size=pop,
                                    seed=args.seed)
            started = time.perf_counter()
            run = optimize("bench-target", args.arch, provider, config,
                           iterations=iters, duration=args.duration)
            seconds = time.perf_counter() - started
            rows.append((iters, pop, seconds))
            if not args.quiet:
                print(f"iterations {iters:4d}  popsize {pop:4d}  {seconds:8.2f} s  "
                      f"best {run.best_fitness:.4f}", file=sys.stderr)

    lines = ["iter,popsize,seconds"]
    lines += [f"{i},{p},{s:.3f}" for i, p, s in rows]
    (out_dir / "bench.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs = ["bench.csv"]
    if not args.no_figures:
        from . import plotting

        plotting.save_bench_figure(rows, out_dir / "bench.png")
        outputs.append("bench.png")
    _write_manifest(out_dir, "bench",
                    {"popsize": pops, "iterations": iter_counts, "arch": args.arch,
                     "strategy": args.strategy, "duration": args.duration,
                     "seed": args.seed},
                    outputs)
    if not args.quiet:
        print(f"wrote {', '.join(outputs)} to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip rendering PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthsearch",
        description="Search synthesizer parameters toward text or audio targets.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="optimize a patch toward a prompt or target audio")
    p.add_argument("--prompt", help="text prompt (service provider) or target name (surrogate)")
    p.add_argument("--target-audio", help="path to a target WAV (surrogate provider)")
    p.add_argument("--arch", default="voice", choices=ARCHITECTURE_IDS)
    p.add_argument("--strategy", default="cma_es",
                   choices=[s for s in STRATEGY_IDS if s != "external"])
    p.add_argument("--popsize", type=int, default=50)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provider", default="surrogate",
                   help="surrogate (default), mock, or service:URL")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("render", help="render a saved patch to WAV")
    p.add_argument("patch")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=None,
                   help="noise seed (default: the patch's saved seed)")
    p.add_argument("--encoding", default="float32", choices=("float32", "pcm16"))
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("interpolate", help="linearly interpolate between two patches")
    p.add_argument("patch_a")
    p.add_argument("patch_b")
    p.add_argument("--steps", type=int, default=3,
                   help="number of intermediary steps (default 3)")
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("evaluate", help="compute acoustic descriptors for a corpus")
    p.add_argument("inputs", nargs="+", help="WAV paths or globs")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep architectures, durations, or strategies")
    p.add_argument("--prompts", required=True,
                   help="file with one prompt per line (# comments allowed)")
    p.add_argument("--archs", help="comma-separated architecture list")
    p.add_argument("--durations", help="comma-separated duration list (seconds)")
    p.add_argument("--strategies", help="comma-separated strategy list")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--arch", default="voice", choices=ARCHITECTURE_IDS,
                   help="architecture when not the swept axis")
    p.add_argument("--strategy", default="cma_es",
                   choices=[s for s in STRATEGY_IDS if s != "external"],
                   help="strategy when not the swept axis")
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--popsize", type=int, default=16)
    p.add_argument("--iterations", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provider", default="surrogate")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="time optimization runs per (iterations, popsize)")
    p.add_argument("--popsize", default="25,50,100")
    p.add_argument("--iterations", default="50,100,300")
    p.add_argument("--arch", default="voice", choices=ARCHITECTURE_IDS)
    p.add_argument("--strategy", default="cma_es",
                   choices=[s for s in STRATEGY_IDS if s != "external"])
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArchitectureError, PatchFormatError, WavFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProviderTransportError as exc:
        print(f"provider unreachable: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())
