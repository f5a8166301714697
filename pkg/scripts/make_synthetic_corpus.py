#!/usr/bin/env python3
"""
Write raw JSONL for two toy dialects, ready for ``pcode prepare-data``
Usage: poetry run python scripts/make_synthetic_corpus.py --out data/raw
"""
from pathlib import Path
from typing import Tuple

import click
import jsonlines
from loguru import logger

from pcode_data.schema import save_records
from pcode_data.synthetic import (
    DIALECTS,
    clone_records,
    generation_records,
    summary_records,
    unlabeled_corpus,
)


@click.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("data/raw"))
@click.option("--dialect", "dialects", multiple=True, default=tuple(sorted(DIALECTS)))
@click.option("--n-pairs", type=int, default=400, help="CD pairs per dialect (clones only)")
@click.option("--n-generative", type=int, default=200, help="CM and CG records per dialect")
@click.option("--n-corpus", type=int, default=500, help="Unlabeled snippets per dialect")
@click.option("--filler", type=(int, int), default=(0, 0), help="Filler statements per program")
@click.option("--seed", type=int, default=0)
def main(out_dir: Path, dialects: Tuple[str, ...], n_pairs: int, n_generative: int,
         n_corpus: int, filler: Tuple[int, int], seed: int) -> None:
    """Generate clone, summary and generation records plus an MLM corpus"""
    out_dir.mkdir(parents=True, exist_ok=True)
    for dialect in dialects:
        if dialect not in DIALECTS:
            raise click.BadParameter(f"unknown dialect {dialect!r}", param_hint="--dialect")
        # prepare-data builds the negatives itself
        batches = {
            "cd": clone_records(dialect, n_pairs, seed, filler, comment_rate=0.2, positives_only=True),
            "cm": summary_records(dialect, n_generative, seed),
            "cg": generation_records(dialect, n_generative, seed),
        }
        for task, records in batches.items():
            path = out_dir / f"{task}_{dialect}.jsonl"
            save_records(records, path)
            logger.info(f"✅ Wrote {len(records)} {task} records to {path}")

    corpus_path = out_dir / "corpus.jsonl"
    with jsonlines.open(corpus_path, mode="w", sort_keys=True) as writer:
        for code, lang in unlabeled_corpus(list(dialects), n_corpus, seed):
            writer.write({"code": code, "lang": lang})
    logger.info(f"✅ Wrote unlabeled corpus to {corpus_path}")


if __name__ == "__main__":
    main()
