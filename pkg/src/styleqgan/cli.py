"""Command-line entry point: ``styleqgan train | generate | evaluate | compare``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

Run configs are JSON objects validated against ``RUN_CONFIG_SCHEMA``; unknown
keys are rejected. Relative paths inside a config (``csv:`` datasets and
``output_dir``) are resolved against the config file's directory.
"""
import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np

from .data import DataFormatError, Preprocessor, SampleSet, fit_preprocessor, load_csv, sample_gamma, sample_gaussian3d, save_csv
from .discriminator import DEFAULT_HIDDEN, DiscriminatorParams
from .generator import ARCHITECTURES, STANDARD, STYLE, CircuitLayout, QuantumGenerator, standard_layout
from .metrics import LINEAR, LOG, build_ratio_grid, covariance_eigen_agreement, data_augmentation_check, histogram_kl
from .noise import NoiseModel
from .training import TrainingConfig, TrainingError, evaluate_checkpoint, seed_streams, train

log = logging.getLogger("styleqgan")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
MODEL_FORMAT = "styleqgan-model"
MODEL_VERSION = 1

_int = {"type": "integer"}
_pos_int = {"type": "integer", "minimum": 1}
_nonneg_int = {"type": "integer", "minimum": 0}
_pos_num = {"type": "number", "exclusiveMinimum": 0}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset", "epochs"],
    "properties": {
        "dataset": {"type": "string", "pattern": "^(gamma|gaussian3d|csv:.+)$"},
        "n_samples": _pos_int,
        "gamma_alpha": _pos_num,
        "gamma_beta": _pos_num,
        "preprocessor": {"enum": ["minmax", "power"]},
        "architecture": {"enum": list(ARCHITECTURES)},
        "n_qubits": {"type": "integer", "minimum": 1, "maximum": 3},
        "n_layers": _pos_int,
        "d_latent": _pos_int,
        "entangler": {"type": "array", "items": {"type": "array", "items": _int, "minItems": 2, "maxItems": 2}},
        "epochs": _nonneg_int,
        "batch_size": _pos_int,
        "lr_discriminator": _pos_num,
        "lr_generator": _pos_num,
        "d_steps": _pos_int,
        "hidden": {"type": "array", "items": _pos_int},
        "init_scale": {"type": "number", "minimum": 0},
        "checkpoint_every": _nonneg_int,
        "log_every": _nonneg_int,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": _nonneg_int,
                "bins": _pos_int,
                "log_dims": {"type": "array", "items": _nonneg_int},
                "backend": {"enum": ["exact", "shots", "noisy"]},
                "shots": _pos_int,
                "noise": {"type": "string"},
            },
        },
    },
}

RUN_DEFAULTS = {
    "n_samples": 10**4,
    "gamma_alpha": 1.0,
    "gamma_beta": 1.0,
    "preprocessor": "minmax",
    "architecture": STYLE,
    "n_layers": 1,
    "batch_size": 128,
    "lr_discriminator": 0.1,
    "lr_generator": 0.5,
    "d_steps": 1,
    "hidden": list(DEFAULT_HIDDEN),
    "init_scale": 0.1,
    "checkpoint_every": 0,
    "log_every": 1000,
    "seed": 0,
    "output_dir": ".",
}
EVAL_DEFAULTS = {"n_samples": 10**4, "bins": 100, "log_dims": [], "backend": "exact", "shots": 1000}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "architecture", "layout", "generator_params", "discriminator", "preprocessor"],
    "properties": {
        "format": {"const": MODEL_FORMAT},
        "version": {"const": MODEL_VERSION},
        "architecture": {"enum": list(ARCHITECTURES)},
        "layout": {"type": "object"},
        "generator_params": {"type": "array", "items": {"type": "number"}},
        "discriminator": {"type": "object", "required": ["sizes", "values"]},
        "preprocessor": {"type": "object", "required": ["kind", "lo", "hi"]},
        "columns": {"type": "array", "items": {"type": "string"}},
    },
}


class ConfigError(Exception):
    """Invalid configuration, input file or command-line combination (exit 2)."""


# -- run configs -----------------------------------------------------------


def _schema_message(err):
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def validate_run_config(raw, base_dir="."):
    """Validate a run config dict and return a copy with defaults filled in."""
    errors = sorted(jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA).iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        raise ConfigError("invalid run config: " + "; ".join(_schema_message(e) for e in errors))
    cfg = {**RUN_DEFAULTS, **raw}
    cfg["evaluation"] = {**EVAL_DEFAULTS, **raw.get("evaluation", {})}
    if cfg["dataset"].startswith("csv:"):
        path = os.path.join(base_dir, cfg["dataset"][4:])
        if not os.path.isfile(path):
            raise ConfigError(f"dataset: file not found: {path}")
        cfg["dataset_path"] = path
    noise = cfg["evaluation"].get("noise")
    if noise is not None:
        cfg["evaluation"]["noise"] = os.path.join(base_dir, noise)
    elif cfg["evaluation"]["backend"] == "noisy":
        raise ConfigError("evaluation/noise: the noisy backend needs a calibration file")
    cfg["output_dir"] = os.path.join(base_dir, cfg["output_dir"])
    return cfg


def load_run_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return validate_run_config(raw, os.path.dirname(os.path.abspath(path)))


def load_dataset(cfg, rng):
    """Training samples in data space for a validated run config."""
    kind = cfg["dataset"]
    if kind == "gamma":
        return SampleSet(sample_gamma(cfg["n_samples"], rng, cfg["gamma_alpha"], cfg["gamma_beta"]), ("x",))
    if kind == "gaussian3d":
        return sample_gaussian3d(cfg["n_samples"], rng)
    try:
        return load_csv(cfg["dataset_path"])
    except DataFormatError as exc:
        raise ConfigError(f"dataset: {exc}") from None


def reference_sampler(cfg, rng):
    """Fresh data-space reference draws for synthetic datasets, or None for CSV data."""
    if cfg["dataset"] == "gamma":
        return lambda n: sample_gamma(n, rng, cfg["gamma_alpha"], cfg["gamma_beta"])[:, None]
    if cfg["dataset"] == "gaussian3d":
        return lambda n: sample_gaussian3d(n, rng).values
    return None


def build_layout(cfg, n_qubits, architecture):
    if cfg.get("n_qubits", n_qubits) != n_qubits:
        raise ConfigError(f"n_qubits: config says {cfg['n_qubits']} but the dataset has {n_qubits} columns")
    if n_qubits > 3:
        raise ConfigError(f"dataset has {n_qubits} columns; at most 3 qubits are supported")
    d_latent = cfg.get("d_latent", n_qubits)
    try:
        if architecture == STANDARD:
            return standard_layout(n_qubits, cfg["n_layers"], d_latent, cfg.get("entangler"))
        return CircuitLayout(n_qubits, cfg["n_layers"], d_latent, cfg.get("entangler"))
    except ValueError as exc:
        raise ConfigError(f"layout: {exc}") from None


def build_training_config(cfg, layout, architecture):
    return TrainingConfig(
        layout=layout,
        epochs=cfg["epochs"],
        architecture=architecture,
        batch_size=cfg["batch_size"],
        lr_discriminator=cfg["lr_discriminator"],
        lr_generator=cfg["lr_generator"],
        seed=cfg["seed"],
        checkpoint_every=cfg["checkpoint_every"],
        log_every=cfg["log_every"],
        d_steps=cfg["d_steps"],
        hidden=tuple(cfg["hidden"]),
        init_scale=cfg["init_scale"],
    )


# -- model files -----------------------------------------------------------


@dataclass
class ModelFile:
    architecture: str
    layout: CircuitLayout
    params_g: np.ndarray
    params_d: DiscriminatorParams
    preprocessor: Preprocessor
    columns: tuple
    training: dict
    seed: int
    final_losses: dict

    @property
    def generator(self):
        return QuantumGenerator(self.layout, self.architecture)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "architecture": self.architecture,
            "layout": self.layout.to_dict(),
            "generator_params": self.params_g.tolist(),
            "discriminator": self.params_d.to_dict(),
            "preprocessor": self.preprocessor.to_dict(),
            "columns": list(self.columns),
            "training": self.training,
            "seed": self.seed,
            "final_losses": self.final_losses,
            "initialization": {
                "generator": "uniform(-init_scale, init_scale)",
                "discriminator": "glorot uniform weights, zero biases",
            },
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, d):
        errors = list(jsonschema.Draft202012Validator(MODEL_SCHEMA).iter_errors(d))
        if errors:
            raise ConfigError("corrupt model file: " + "; ".join(_schema_message(e) for e in errors))
        try:
            layout = CircuitLayout.from_dict(d["layout"])
            model = cls(
                d["architecture"],
                layout,
                np.asarray(d["generator_params"], dtype=np.float64),
                DiscriminatorParams.from_dict(d["discriminator"]),
                Preprocessor.from_dict(d["preprocessor"]),
                tuple(d.get("columns") or (f"x{i}" for i in range(layout.n_qubits))),
                d.get("training", {}),
                d.get("seed"),
                d.get("final_losses"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"corrupt model file: {exc}") from None
        gen = model.generator
        if model.params_g.shape != (gen.n_params,):
            raise ConfigError(f"corrupt model file: {gen.n_params} generator parameters expected")
        if model.preprocessor.dim != layout.n_qubits or len(model.columns) != layout.n_qubits:
            raise ConfigError("corrupt model file: preprocessor or columns disagree with the qubit count")
        return model

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"model file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"corrupt model file {path}: {exc}") from None


def model_from_result(result, config, preprocessor, columns):
    final = None
    if len(result.log):
        final = {"generator": result.log.loss_generator[-1], "discriminator": result.log.loss_discriminator[-1]}
    return ModelFile(
        config.architecture,
        config.layout,
        result.params_g,
        result.params_d,
        preprocessor,
        tuple(columns),
        config.to_dict(),
        config.seed,
        final,
    )


# -- shared run pipeline ---------------------------------------------------


def run_training(cfg, architecture=None, checkpoint_dir=None):
    """Load data, fit the preprocessor and train one architecture.

    Returns ``(model, result, streams, raw)``.
    """
    architecture = architecture or cfg["architecture"]
    streams = seed_streams(cfg["seed"])
    raw = load_dataset(cfg, streams["data"])
    try:
        pre = fit_preprocessor(cfg["preprocessor"], raw)
    except ValueError as exc:
        raise ConfigError(f"preprocessor: {exc}") from None
    layout = build_layout(cfg, raw.dim, architecture)
    tcfg = build_training_config(cfg, layout, architecture)
    if len(raw) < tcfg.batch_size:
        raise ConfigError(f"dataset has {len(raw)} rows, fewer than batch_size={tcfg.batch_size}")

    on_checkpoint = None
    if checkpoint_dir is not None and tcfg.checkpoint_every:
        os.makedirs(checkpoint_dir, exist_ok=True)

        def on_checkpoint(epoch, result):
            path = os.path.join(checkpoint_dir, f"{architecture}_epoch{epoch:07d}.json")
            model_from_result(result, tcfg, pre, raw.columns).save(path)

    result = train(tcfg, pre.transform(raw.values), on_checkpoint=on_checkpoint)
    return model_from_result(result, tcfg, pre, raw.columns), result, streams, raw


def generate_from_model(model, n, seed, backend="exact", n_shots=None, noise=None):
    streams = seed_streams(seed)
    return evaluate_checkpoint(
        model.params_g,
        model.generator,
        n,
        streams["latent"],
        model.preprocessor,
        backend=backend,
        n_shots=n_shots,
        noise=noise,
        shots_rng=streams["shots"],
    )


def kl_per_dimension(reference, generated, bins, log_dims=()):
    ref = np.asarray(reference, dtype=np.float64)
    gen = np.asarray(generated, dtype=np.float64)
    out = []
    for k in range(ref.shape[1]):
        scale = LOG if k in log_dims else LINEAR
        try:
            out.append(histogram_kl(ref[:, k], gen[:, k], bins, scale))
        except ValueError as exc:
            raise ConfigError(f"dimension {k}: {exc}") from None
    return out


def _load_noise(path, n_qubits):
    try:
        model = NoiseModel.load(path)
    except FileNotFoundError:
        raise ConfigError(f"calibration file not found: {path}") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if model.n_qubits != n_qubits:
        raise ConfigError(f"calibration describes {model.n_qubits} qubits, model has {n_qubits}")
    return model


# -- commands ----------------------------------------------------------------


def cmd_train(args):
    cfg = load_run_config(args.config)
    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    model, result, _, _ = run_training(cfg, checkpoint_dir=os.path.join(out_dir, "checkpoints"))
    model_path = os.path.join(out_dir, "model.json")
    model.save(model_path)
    result.log.save_csv(os.path.join(out_dir, "losses.csv"))
    log.info("wrote %s (%d generator parameters)", model_path, model.params_g.size)
    print(model_path)
    return EXIT_OK


def cmd_generate(args):
    model = ModelFile.load(args.model)
    if args.n < 0:
        raise ConfigError("--n must be nonnegative")
    backend, noise = "exact", None
    if args.noise is not None:
        if args.shots is None:
            raise ConfigError("--noise needs --shots")
        noise = _load_noise(args.noise, model.layout.n_qubits)
        backend = "noisy"
    elif args.shots is not None:
        backend = "shots"
    if args.shots is not None and args.shots < 1:
        raise ConfigError("--shots must be positive")
    samples = generate_from_model(model, args.n, args.seed, backend, args.shots, noise)
    save_csv(SampleSet(samples, model.columns), args.out)
    return EXIT_OK


def _parse_dims(text, dim, flag):
    if not text:
        return []
    try:
        dims = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected a comma-separated list of integers") from None
    if any(not 0 <= k < dim for k in dims):
        raise ConfigError(f"{flag}: dimension index out of range for {dim} columns")
    return dims


def _load_samples(path):
    try:
        return load_csv(path)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except DataFormatError as exc:
        raise ConfigError(str(exc)) from None


def cmd_evaluate(args):
    ref = _load_samples(args.reference)
    gen = _load_samples(args.generated)
    if ref.dim != gen.dim:
        raise ConfigError(f"reference has {ref.dim} columns, generated has {gen.dim}")
    if len(ref) == 0 or len(gen) == 0:
        raise ConfigError("reference and generated files need at least one row")
    if args.bins < 1:
        raise ConfigError("--bins must be positive")
    log_dims = _parse_dims(args.log_dims, ref.dim, "--log-dims")
    report = {
        "n_reference": len(ref),
        "n_generated": len(gen),
        "bins": args.bins,
        "log_dims": log_dims,
        "columns": list(ref.columns),
        "kl": kl_per_dimension(ref, gen, args.bins, log_dims),
        "eigen_agreement": None,
    }
    if ref.dim >= 2 and len(ref) >= 2 and len(gen) >= 2:
        report["eigen_agreement"] = covariance_eigen_agreement(ref.values, gen.values)
    if args.ratio_dims:
        i, j = _parse_dims(args.ratio_dims, ref.dim, "--ratio-dims")
        scales = tuple(LOG if k in log_dims else LINEAR for k in (i, j))
        grid = build_ratio_grid(ref.values[:, [i, j]], gen.values[:, [i, j]], args.ratio_bins, args.ratio_bins, scales)
        report["ratio_grid"] = {"dims": [i, j], **grid.to_dict()}
        if args.ratio_csv:
            grid.save_csv(args.ratio_csv)
    if args.augmentation:
        small, large = args.augmentation
        if len(ref) < large or len(gen) < large or not 1 <= small <= large:
            raise ConfigError("--augmentation needs 1 <= SMALL <= LARGE <= rows in both files")
        report["augmentation"] = [
            data_augmentation_check(
                lambda n, k=k: ref.values[:n, k],
                gen.values[:, k],
                small,
                large,
                args.bins,
                LOG if k in log_dims else LINEAR,
            )
            for k in range(ref.dim)
        ]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return EXIT_OK


def compare_architectures(cfg):
    """Train style and standard generators under one config and seed; KL per dimension for each."""
    ev = cfg["evaluation"]
    noise = None
    report = {"seed": cfg["seed"], "dataset": cfg["dataset"], "bins": ev["bins"], "n_samples": ev["n_samples"]}
    for arch in (STYLE, STANDARD):
        model, result, streams, raw = run_training(cfg, arch)
        sampler = reference_sampler(cfg, streams["evaluation"])
        reference = sampler(max(ev["n_samples"], 1)) if sampler else raw.values
        if ev["backend"] == "noisy" and noise is None:
            noise = _load_noise(ev["noise"], model.layout.n_qubits)
        generated = evaluate_checkpoint(
            model.params_g,
            model.generator,
            ev["n_samples"],
            streams["evaluation"],
            model.preprocessor,
            backend=ev["backend"],
            n_shots=ev["shots"] if ev["backend"] != "exact" else None,
            noise=noise,
            shots_rng=streams["shots"],
        )
        report["layout"] = model.layout.to_dict() if arch == STYLE else report["layout"]
        report[arch] = {
            "n_params": int(model.params_g.size),
            "kl": kl_per_dimension(reference, generated, ev["bins"], ev["log_dims"]) if len(generated) else None,
            "final_losses": model.final_losses,
        }
    return report


def format_compare_table(report):
    lines = [f"{'':10s}{'style':>12s}{'standard':>12s}", f"{'params':10s}{report['style']['n_params']:>12d}{report['standard']['n_params']:>12d}"]
    if report["style"]["kl"] is not None:
        for k, (a, b) in enumerate(zip(report["style"]["kl"], report["standard"]["kl"])):
            lines.append(f"{'KL x' + str(k):10s}{a:>12.4f}{b:>12.4f}")
    return "\n".join(lines)


def cmd_compare(args):
    cfg = load_run_config(args.config)
    report = compare_architectures(cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(format_compare_table(report))
    return EXIT_OK


# -- entry point -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="styleqgan", description="Style-based quantum GAN on a state-vector simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model from a run config")
    t.add_argument("--config", required=True)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", help="sample from a trained model")
    g.add_argument("--model", required=True)
    g.add_argument("--n", type=int, required=True)
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact expectation values (default)")
    mode.add_argument("--shots", type=int, help="estimate each sample from this many shots")
    g.add_argument("--noise", help="calibration JSON for noisy density-matrix sampling (needs --shots)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="compare a generated CSV against a reference CSV")
    e.add_argument("--reference", required=True)
    e.add_argument("--generated", required=True)
    e.add_argument("--bins", type=int, default=100)
    e.add_argument("--log-dims", default="", help="comma-separated dimensions binned on a log scale")
    e.add_argument("--ratio-dims", default="", help="two comma-separated dimensions for a 2D ratio grid")
    e.add_argument("--ratio-bins", type=int, default=20)
    e.add_argument("--ratio-csv", help="also write the ratio grid as CSV")
    e.add_argument("--augmentation", type=int, nargs=2, metavar=("SMALL", "LARGE"))
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="train style and standard generators under one config")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"styleqgan: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as exc:
        print(f"styleqgan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"styleqgan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
