"""Command-line front end: synth, run, ablate, psd-export, convert-info.

Exit codes: 0 success, 2 unreadable/invalid input file, 3 configuration error,
4 pipeline failure. Reports are written as JSON plus figures; all file output
is deterministic for a fixed (container, config, seed).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from .cnn import save_checkpoint
from .container import container_info, read_container, write_container
from .dsp import PreprocessConfig, Recording, preprocess
from .errors import ConfigError, ContainerFormatError
from .features import WelchConfig, welch_psd
from .pipeline import FEATURE_MODES, ExperimentConfig, run_ablation, run_experiment
from .synth import SynthConfig, generate_trials
from .training import TrainConfig

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_BAD_CONFIG = 3
EXIT_PIPELINE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="eegfusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labelled synthetic EEGC container")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--subjects", type=int, default=1)
    p_synth.add_argument("--trials-per-subject", type=int, default=8)
    p_synth.add_argument("--mode", choices=["separable", "complementary"], default="separable")
    p_synth.add_argument("--beta-factor", type=float, default=2.0,
                         help="high/low beta power ratio in separable mode")
    p_synth.add_argument("--out", required=True)

    for name in ("run", "ablate"):
        p = sub.add_parser(name, help=f"{name} the pipeline on an EEGC container")
        p.add_argument("--container", required=True)
        p.add_argument("--config", help="INI file with an [experiment] section; flags override it")
        p.add_argument("--target", choices=["valence", "arousal"])
        if name == "run":
            p.add_argument("--feature-mode", choices=list(FEATURE_MODES))
        else:
            p.add_argument("--modes", default=",".join(FEATURE_MODES))
            p.add_argument("--seeds", default="0,1,2")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--train-fraction", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--zscore-before-fusion", action="store_true", default=None)
        p.add_argument("--no-standardize", action="store_true", default=None)
        p.add_argument("--no-notch", action="store_true", default=None)
        p.add_argument("--no-bandpass", action="store_true", default=None)
        p.add_argument("--ica", action="store_true", default=None)
        p.add_argument("--ica-reject", default=None,
                       help='"auto" or comma-separated component indices (implies --ica)')
        p.add_argument("--out-dir", default=".")
        p.add_argument("--no-figures", action="store_true")

    p_psd = sub.add_parser("psd-export", help="export per-channel Welch PSD curves as CSV")
    p_psd.add_argument("--container", required=True)
    p_psd.add_argument("--subject", type=int, required=True)
    p_psd.add_argument("--trial", type=int, required=True)
    p_psd.add_argument("--out", required=True)
    p_psd.add_argument("--lo", type=float, default=4.0)
    p_psd.add_argument("--hi", type=float, default=45.0)
    p_psd.add_argument("--no-figure", action="store_true")

    p_info = sub.add_parser("convert-info", help="print container metadata")
    p_info.add_argument("--container", required=True)
    p_info.add_argument("--json", action="store_true", dest="as_json")

    return parser


# ---------------------------------------------------------------------------
# Config assembly: defaults <- INI file <- CLI flags
# ---------------------------------------------------------------------------

_INI_KEYS = {
    "target": str,
    "feature_mode": str,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "train_fraction": float,
    "seed": int,
    "zscore_before_fusion": bool,
    "standardize": bool,
    "notch": bool,
    "bandpass": bool,
    "ica": bool,
    "ica_reject": str,
}


def _load_ini(path) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError(f"config file {path} has no [experiment] section")
    values = {}
    for key, raw in parser.items("experiment"):
        if key not in _INI_KEYS:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        kind = _INI_KEYS[key]
        try:
            if kind is bool:
                values[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                values[key] = kind(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} in {path}: {raw!r}") from exc
    return values


def _parse_reject(raw: str):
    if raw is None or raw == "none":
        return "none", ()
    if raw == "auto":
        return "auto", ()
    try:
        return "indices", tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f'--ica-reject must be "auto" or comma-separated integers, got {raw!r}') from exc


def _experiment_config(args) -> ExperimentConfig:
    values = _load_ini(args.config) if getattr(args, "config", None) else {}

    def pick(key, flag_value, default):
        if flag_value is not None:
            return flag_value
        return values.get(key, default)

    reject_raw = pick("ica_reject", args.ica_reject, None)
    reject_mode, reject_indices = _parse_reject(reject_raw)
    pre = PreprocessConfig(
        notch=False if args.no_notch else values.get("notch", True),
        bandpass=False if args.no_bandpass else values.get("bandpass", True),
        ica=bool(pick("ica", args.ica, False)) or reject_mode != "none",
        ica_reject="auto" if reject_mode == "auto" else "none",
        ica_reject_indices=reject_indices,
    )
    try:
        train_cfg = TrainConfig(
            learning_rate=pick("learning_rate", args.learning_rate, 1e-3),
            batch_size=pick("batch_size", args.batch_size, 64),
            epochs=pick("epochs", args.epochs, 20),
            seed=pick("seed", args.seed, 0),
            train_fraction=pick("train_fraction", args.train_fraction, 0.8),
        )
        if args.no_standardize:
            standardize = False
        else:
            standardize = values.get("standardize", True)
        return ExperimentConfig(
            target=pick("target", args.target, "valence"),
            feature_mode=pick("feature_mode", getattr(args, "feature_mode", None), "MCA"),
            preprocess=pre,
            train=train_cfg,
            zscore_before_fusion=bool(pick("zscore_before_fusion", args.zscore_before_fusion, False)),
            standardize=standardize,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _read_trials(path):
    try:
        return read_container(path)
    except FileNotFoundError as exc:
        raise ContainerFormatError(f"container {path} not found") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    cfg = SynthConfig(mode=args.mode, beta_factor=args.beta_factor)
    trials = generate_trials(args.seed, args.subjects, args.trials_per_subject, cfg)
    write_container(args.out, trials)
    print(f"wrote {len(trials)} trials ({args.mode}) to {args.out}")
    return EXIT_OK


def _metrics_table(report: dict) -> str:
    m = report["metrics"]
    lines = [
        f"target         {report['target']}",
        f"feature mode   {report['feature_mode']}",
        f"segments       {report['n_train']} train / {report['n_test']} test",
        "",
        f"{'Accuracy':>10} {'Precision':>10} {'Recall':>10} {'F1':>10}",
        f"{m['accuracy']:>10.4f} {m['precision']:>10.4f} {m['recall']:>10.4f} {m['f1']:>10.4f}",
    ]
    return "\n".join(lines)


def _cmd_run(args) -> int:
    cfg = _experiment_config(args)
    trials = _read_trials(args.container)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_experiment(trials, cfg)
    report = result.report(cfg)
    report_path = out_dir / "metrics.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    save_checkpoint(result.network, out_dir / "model.ckpt")

    print(_metrics_table(report))
    print(f"\nper-segment inference: {result.seconds_per_segment * 1e3:.3f} ms (console only)")
    print(f"report  -> {report_path}")
    print(f"model   -> {out_dir / 'model.ckpt'}")
    if not args.no_figures:
        from .plots import render_confusion, render_training_curves

        render_training_curves(result.history, out_dir / "training.png",
                               title=f"{cfg.feature_mode}/{cfg.target}")
        render_confusion(result.metrics, out_dir / "confusion.png",
                         title=f"{cfg.feature_mode}/{cfg.target}")
        print(f"figures -> {out_dir / 'training.png'}, {out_dir / 'confusion.png'}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    cfg = _experiment_config(args)
    trials = _read_trials(args.container)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        seeds = [int(tok) for tok in args.seeds.split(",") if tok.strip()]
        modes = [tok.strip().upper() for tok in args.modes.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --seeds/--modes value: {exc}") from exc
    unknown = [m for m in modes if m not in FEATURE_MODES]
    if unknown:
        raise ConfigError(f"unknown feature modes {unknown}; choose from {FEATURE_MODES}")

    rows = run_ablation(trials, cfg, seeds, modes=modes)
    payload = {
        "target": cfg.target,
        "seeds": seeds,
        "rows": [
            {
                "feature_mode": r.feature_mode,
                "accuracies": r.accuracies,
                "mean_accuracy": r.mean_accuracy,
                "std_accuracy": r.std_accuracy,
            }
            for r in rows
        ],
    }
    table_path = out_dir / "ablation.json"
    table_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    print(f"\n{'Feature':>8} {'mean acc':>9} {'std':>7}  per-seed")
    for r in rows:
        per_seed = " ".join(f"{a:.3f}" for a in r.accuracies)
        print(f"{r.feature_mode:>8} {r.mean_accuracy:>9.4f} {r.std_accuracy:>7.4f}  [{per_seed}]")
    print(f"\ntable -> {table_path}")
    if not args.no_figures:
        from .plots import render_ablation

        render_ablation(rows, out_dir / "ablation.png", title=f"Ablation ({cfg.target})")
        print(f"figure -> {out_dir / 'ablation.png'}")
    return EXIT_OK


def _cmd_psd_export(args) -> int:
    trials = _read_trials(args.container)
    match = [t for t in trials if t.subject_id == args.subject and t.trial_id == args.trial]
    if not match:
        raise ContainerFormatError(
            f"no trial with subject={args.subject} trial={args.trial} in {args.container}"
        )
    trial = match[0]
    rec = preprocess(Recording(trial.samples.astype(np.float64), trial.sample_rate_hz),
                     PreprocessConfig())
    cfg = WelchConfig(sample_rate_hz=rec.sample_rate_hz)
    psd = welch_psd(rec.samples, cfg)  # (channels, bins)
    freqs = cfg.freqs()
    mask = (freqs >= args.lo) & (freqs <= args.hi)
    freqs, psd = freqs[mask], psd[:, mask]

    out = Path(args.out)
    header = ["frequency_hz"] + [f"ch{c:02d}" for c in range(psd.shape[0])] + ["mean"]
    lines = [",".join(header)]
    for i, f in enumerate(freqs):
        row = [repr(float(f))] + [repr(float(v)) for v in psd[:, i]] + [repr(float(psd[:, i].mean()))]
        lines.append(",".join(row))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(freqs)} rows to {out}")
    if not args.no_figure:
        from .plots import render_psd_figure

        fig_path = out.with_suffix(".png")
        render_psd_figure(freqs, psd, fig_path,
                          title=f"PSD subject {args.subject:02d} trial {args.trial}")
        print(f"figure -> {fig_path}")
    return EXIT_OK


def _cmd_convert_info(args) -> int:
    info = container_info(args.container)
    if args.as_json:
        print(json.dumps(info, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"EEGC v{info['version']}: {info['n_trials']} trials")
    for t in info["trials"]:
        print(
            f"  subject {t['subject_id']:>3} trial {t['trial_id']:>3}: "
            f"{t['channels']} ch x {t['n_samples']} @ {t['sample_rate_hz']:g} Hz, "
            f"valence {t['valence']:.1f} arousal {t['arousal']:.1f} sha256 {t['payload_sha256'][:12]}"
        )
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "ablate": _cmd_ablate,
    "psd-export": _cmd_psd_export,
    "convert-info": _cmd_convert_info,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (ContainerFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except Exception as exc:  # pipeline failures map to a dedicated exit code
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
