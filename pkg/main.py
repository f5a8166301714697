#!/usr/bin/env python3
"""
pcode command line: prepare-data, pretrain, train, eval, ablate, report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
import functools
import json
import sys
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import click
from loguru import logger
from pydantic import ValidationError

from analyze_results import render_report
from pcode_backend.archive import save_pretrained_archive
from pcode_backend.model import CodeEncoder
from pcode_config.errors import ConfigError, PcodeError
from pcode_config.run_config import (
    RunConfig,
    default_log_level,
    describe_validation_error,
    load_config,
)
from pcode_data.preprocess import PreprocessConfig, prepare_dataset
from pcode_eval.ablation import ablate as run_ablation
from pcode_eval.experiment import (
    ExperimentRunner,
    evaluate_checkpoint,
    prepare_backbone,
    run_experiment,
)
from pcode_train.logger import LOG_FILE, configure_logging


def handle_errors(command: Callable) -> Callable:
    """Turn expected failures into a message on stderr and the matching exit code"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PcodeError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _start(config: RunConfig, command: str) -> Path:

    run_dir = config.run_dir(command)
    configure_logging(default_log_level(), run_dir / LOG_FILE)
    config.echo(run_dir)
    logger.info(f"{command}: run {config.run_id} in {run_dir}")
    return run_dir


@click.group()
@click.option("--log-level", default=None, help="Overrides PCODE_LOG_LEVEL")
def cli(log_level: Optional[str]) -> None:
    """Cross-language prompt tuning for code intelligence tasks."""

    configure_logging(log_level or default_log_level())


@cli.command("prepare-data")
@click.argument("in_path", type=click.Path(path_type=Path))
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--task", required=True, type=click.Choice(["cd", "cs", "mnp", "cm", "cg"]))
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="JSON file with preprocessing settings")
@click.option("--seed", type=int, default=None)
@click.option("--min-tokens", type=int, default=None)
@click.option("--max-tokens", type=int, default=None)
@click.option("--no-strip-comments", is_flag=True, default=False)
@click.option("--tokenizer", "tokenizer_name", type=click.Choice(["whitespace_punct", "wordpiece"]),
              default=None, help="Tokenizer whose pieces the length window counts")
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path), default=None,
              help="vocab.json for subword tokenizers")
@click.option("--comment-grammar", multiple=True,
              help="lang=grammar, e.g. toya=java, for languages without a built-in grammar")
@handle_errors
def prepare_data(in_path: Path, out_dir: Path, task: str, config_path: Optional[Path],
                 seed: Optional[int], min_tokens: Optional[int], max_tokens: Optional[int],
                 no_strip_comments: bool, tokenizer_name: Optional[str], vocab_path: Optional[Path],
                 comment_grammar: Tuple[str, ...]) -> None:
    """Strip comments, length-filter, balance and split IN_PATH into OUT_DIR."""

    settings: Dict = {}
    if config_path is not None:
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {config_path}")
        try:
            settings = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_path}: line {e.lineno}: {e.msg}") from e
        if not isinstance(settings, dict):
            raise ConfigError(f"{config_path}: top level must be a JSON object")
    updates = {"seed": seed, "min_tokens": min_tokens, "max_tokens": max_tokens,
               "tokenizer": tokenizer_name, "vocab_path": str(vocab_path) if vocab_path else None}
    settings.update({k: v for k, v in updates.items() if v is not None})
    if no_strip_comments:
        settings["strip_comments"] = False
    for item in comment_grammar:
        lang, _, grammar = item.partition("=")
        if not grammar:
            raise ConfigError(f"--comment-grammar {item!r} must look like lang=grammar")
        settings.setdefault("comment_grammars", {})[lang.lower()] = grammar
    try:
        preprocess = PreprocessConfig(**settings)
    except ValidationError as e:
        raise ConfigError(f"Invalid preprocessing settings:\n{describe_validation_error(e)}") from e

    split = prepare_dataset(in_path, out_dir, task, preprocess)
    click.echo(json.dumps(split.provenance.counts, sort_keys=True))


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--set", "overrides", multiple=True, help="dotted.key=value override")
@handle_errors
def pretrain(config_path: Path, overrides: Tuple[str, ...]) -> None:
    """Continual MLM pre-training; writes an archive usable as model_archive."""

    config = load_config(config_path, overrides)
    config = config.model_copy(update={"pretrain": config.pretrain.model_copy(update={"enabled": True})})
    run_dir = _start(config, "pretrain")
    runner = ExperimentRunner(config.experiment, config.to_setup(run_dir))
    backbone = prepare_backbone(runner.setup, runner.backbone_records(), runner.languages(),
                                runner.run_logger)
    encoder = CodeEncoder(backbone.config)
    backbone.store.load_into(encoder, "encoder.")
    archive = save_pretrained_archive(run_dir / "archive", encoder, backbone.vocab,
                                      {"run_id": config.run_id, **backbone.provenance})
    click.echo(str(archive))


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--set", "overrides", multiple=True, help="dotted.key=value override")
@handle_errors
def train(config_path: Path, overrides: Tuple[str, ...]) -> None:
    """Run the configured experiment: train per seed, test on the target language."""

    config = load_config(config_path, overrides)
    run_dir = _start(config, "train")
    report = run_experiment(config.experiment, config.to_setup(run_dir))
    click.echo(report.summary_line())


@cli.command("eval")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.argument("checkpoint", type=click.Path(path_type=Path))
@click.option("--set", "overrides", multiple=True, help="dotted.key=value override")
@handle_errors
def eval_command(config_path: Path, checkpoint: Path, overrides: Tuple[str, ...]) -> None:
    """Score CHECKPOINT on the target test set; no optimizer step is taken."""

    config = load_config(config_path, overrides)
    run_dir = _start(config, "eval")
    report = evaluate_checkpoint(config.experiment, config.to_setup(run_dir), checkpoint)
    report.save(run_dir / "report.json")
    logger.info(f"eval finished with optimizer_steps=0 over {len(report.per_seed)} checkpoint(s)")
    click.echo(report.summary_line())


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.argument("axis", type=click.Choice(["prompt_position", "prompt_count", "source_language"]))
@click.option("--values", default=None, help="Comma-separated axis values")
@click.option("--set", "overrides", multiple=True, help="dotted.key=value override")
@handle_errors
def ablate(config_path: Path, axis: str, values: Optional[str], overrides: Tuple[str, ...]) -> None:
    """Vary one AXIS with everything else fixed; writes ablation.csv."""

    config = load_config(config_path, overrides)
    run_dir = _start(config, "ablate")
    parsed = [v.strip() for v in values.split(",") if v.strip()] if values else None
    table = run_ablation(config.experiment, config.to_setup(run_dir), axis, parsed,
                         run_dir / "ablation.csv")
    click.echo(table.to_string(index=False))


@cli.command()
@click.argument("run_dir", type=click.Path(path_type=Path))
@handle_errors
def report(run_dir: Path) -> None:
    """Human-readable summary of a train, eval or ablate run directory."""

    click.echo(render_report(run_dir))


if __name__ == "__main__":
    cli()
