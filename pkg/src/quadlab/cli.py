"""Command-line interface: morphology generation, gait synthesis,
training, and evaluation reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from quadlab.morphology import (
    PRESET_NAMES,
    ConfigurationError,
    MorphologyConfig,
    export_robot_description,
    morphology_to_text,
    preset_morphology,
    sample_morphology,
)
from quadlab.motions import GaitParams, synth_pace, synth_spin


def _load_document(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith((".yaml", ".yml")):
        import yaml

        return yaml.safe_load(text)
    return json.loads(text)


def _morphology_config(path: str | None) -> MorphologyConfig:
    if path is None:
        return MorphologyConfig()
    doc = _load_document(path)
    return MorphologyConfig(**{
        k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()})


def _write_morphology(m, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = m.name.replace(" ", "_")
    export_robot_description(m, out_dir / f"{stem}.urdf")
    (out_dir / f"{stem}.txt").write_text(morphology_to_text(m))
    print(f"wrote {out_dir / stem}.urdf and .txt")


def cmd_morph_sample(args) -> int:
    config = _morphology_config(args.config)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        m = sample_morphology(config, rng, name=f"sample_{args.seed}_{i}")
        _write_morphology(m, Path(args.out))
    return 0


def cmd_morph_preset(args) -> int:
    m = preset_morphology(args.name)
    if args.out:
        _write_morphology(m, Path(args.out))
    else:
        print(morphology_to_text(m), end="")
    return 0


def cmd_motion_synth(args) -> int:
    params = GaitParams(period=args.period, cycles=args.cycles,
                        duty_factor=args.duty_factor, speed=args.speed,
                        step_height=args.step_height)
    motion = synth_pace(params) if args.gait == "pace" else synth_spin(params)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    motion.save(args.out)
    print(f"wrote {args.out} ({len(motion.base_positions)} frames, "
          f"{motion.duration:.2f} s)")
    return 0


def cmd_train(args) -> int:
    from quadlab.training import TrainConfig, Trainer

    config = TrainConfig.from_dict(_load_document(args.config)) \
        if args.config else TrainConfig()
    if args.mode:
        # "genloco" is the historical name for generalized-morphology mode
        config.mode = "generalized" if args.mode == "genloco" else args.mode
    if args.seed is not None:
        config.seed = args.seed
    if args.total_samples is not None:
        config.total_samples = args.total_samples
    trainer = Trainer(config, args.out)
    config.save(Path(args.out) / "train_config.json")
    resume_from = Path(args.out) / "checkpoint_latest.pt"
    if args.resume and resume_from.exists():
        trainer.load_checkpoint(resume_from)
        print(f"resumed at iteration {trainer.iteration}, "
              f"{trainer.samples} samples")
    trainer.train()
    print(f"finished: {trainer.samples} samples, "
          f"final return {trainer.curve[-1]['mean_return']:.3f}")
    return 0


def cmd_eval_sweep(args) -> int:
    from quadlab.evaluation import policy_fn, sweep, write_sweep_csv
    from quadlab.motions import ReferenceMotion
    from quadlab.plotting import plot_sweep
    from quadlab.training import load_policy, make_motion

    policy, normalizer, _ = load_policy(args.policy)
    motion = ReferenceMotion.load(args.motion) if args.motion \
        else make_motion(args.gait)
    values = np.linspace(getattr(args, "from"), args.to, args.steps)
    rows = sweep(policy_fn(policy, normalizer), args.axis, values, motion,
                 trials=args.trials, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / f"sweep_{args.axis}.csv")
    plot_sweep(rows, out / f"sweep_{args.axis}.png")
    for r in rows:
        flag = "in-range" if r.in_training_range else "out-of-range"
        print(f"{r.axis}={r.value:.4g}: {r.mean:.3f} +- {r.std:.3f} ({flag})")
    return 0


def cmd_eval_zero_shot(args) -> int:
    from quadlab.evaluation import policy_fn, write_zero_shot_csv, zero_shot_suite
    from quadlab.motions import ReferenceMotion
    from quadlab.plotting import plot_zero_shot
    from quadlab.training import load_policy, make_motion

    policy, normalizer, _ = load_policy(args.policy)
    motion = ReferenceMotion.load(args.motion) if args.motion \
        else make_motion(args.gait)
    report = zero_shot_suite(policy_fn(policy, normalizer), motion,
                             trials=args.trials, seed=args.seed,
                             floor=args.floor)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_zero_shot_csv(report, out / "zero_shot.csv")
    plot_zero_shot(report, out / "zero_shot.png", floor=args.floor)
    for name, entry in report.items():
        print(f"{name}: {entry['mean']:.3f} +- {entry['std']:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadlab")
    sub = parser.add_subparsers(dest="command", required=True)

    morph = sub.add_parser("morph", help="morphology generation")
    morph_sub = morph.add_subparsers(dest="subcommand", required=True)
    p = morph_sub.add_parser("sample", help="sample random morphologies")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--config", help="generation-range document (JSON/YAML)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_morph_sample)
    p = morph_sub.add_parser("preset", help="emit a named preset")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--out", help="write URDF + text doc here instead of stdout")
    p.set_defaults(func=cmd_morph_preset)

    motion = sub.add_parser("motion", help="reference-motion synthesis")
    motion_sub = motion.add_subparsers(dest="subcommand", required=True)
    p = motion_sub.add_parser("synth", help="synthesize a gait")
    p.add_argument("--gait", choices=("pace", "spin"), required=True)
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--period", type=float, default=0.6)
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--duty-factor", type=float, default=0.6)
    p.add_argument("--speed", type=float, default=0.3)
    p.add_argument("--step-height", type=float, default=0.05)
    p.set_defaults(func=cmd_motion_synth)

    p = sub.add_parser("train", help="run a training job")
    p.add_argument("--config", help="training configuration (JSON/YAML)")
    p.add_argument("--mode", choices=("genloco", "generalized", "fixed"))
    p.add_argument("--seed", type=int)
    p.add_argument("--total-samples", type=int)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--resume", action="store_true",
                   help="continue from checkpoint_latest.pt if present")
    p.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluation reports")
    ev_sub = ev.add_subparsers(dest="subcommand", required=True)
    p = ev_sub.add_parser("sweep", help="parameter sweep")
    p.add_argument("--policy", required=True, help="checkpoint file")
    p.add_argument("--axis", required=True)
    p.add_argument("--from", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--motion", help="reference-motion JSON (default: synth)")
    p.add_argument("--gait", choices=("pace", "spin"), default="pace")
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=cmd_eval_sweep)
    p = ev_sub.add_parser("zero-shot", help="preset suite")
    p.add_argument("--policy", required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--floor", type=float)
    p.add_argument("--motion")
    p.add_argument("--gait", choices=("pace", "spin"), default="pace")
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=cmd_eval_zero_shot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
