"""``graphbli`` command line.

Exit codes: 0 success, 2 usage or config error, 3 data error (missing or
unreadable input), 4 numerical failure escalated by ``--strict``.
"""

import json
import logging
import secrets
import sys
from pathlib import Path

import click

from . import pipelines
from .embeddings import load_dictionary, load_vec, preprocess, restrict_to_vocab
from .errors import (DomainError, NumericalError, ParseError, ValidationError,
                     VocabularyError)
from .isometry import isometry_report

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("graphbli")


class DataError(click.ClickException):
    exit_code = EXIT_DATA


class NumericFailure(click.ClickException):
    exit_code = EXIT_NUMERIC


class ConfigError(click.UsageError):
    exit_code = EXIT_USAGE


def _parse_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def _load_config(ctx, param, path):
    """Eager callback: file values become defaults, so flags still win."""
    if path is None:
        return None
    try:
        values = _parse_config(path)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    # keys may be written as flag names (dict, rng-seed) or parameter names
    known = {}
    for p in ctx.command.params:
        if p.name in ("config", "dry_run") or not isinstance(p, click.Option):
            continue
        known[p.name] = p.name
        for opt in p.opts:
            known[opt.lstrip("-").replace("-", "_")] = p.name
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}", ctx)
    resolved = {known[k]: v for k, v in values.items()}
    ctx.default_map = {**(ctx.default_map or {}), **resolved}
    return path


def config_options(f):
    f = click.option("--dry-run", is_flag=True, help="Print the resolved config and exit.")(f)
    f = click.option("--config", type=click.Path(dir_okay=False), callback=_load_config,
                     is_eager=True, expose_value=False,
                     help="key = value file; command-line flags override it.")(f)
    return f


def data_options(f):
    opts = [
        click.option("--src-emb", required=True, help="Source fastText .vec file."),
        click.option("--tgt-emb", required=True, help="Target fastText .vec file."),
        click.option("--dict", "dict_path", required=True, help="Bilingual dictionary."),
        click.option("--dict-rev", default=None, help="Dictionary for the reverse direction."),
        click.option("--pair", default=None, help="Pair label for reports."),
        click.option("--seeds", default=0, show_default=True, type=click.IntRange(min=0)),
        click.option("--direction", default="forward", show_default=True,
                     type=click.Choice(pipelines.DIRECTIONS)),
        click.option("--reg", default=500.0, show_default=True, type=float,
                     help="LOT inverse temperature."),
        click.option("--lot-tol", default=1e-6, show_default=True, type=float,
                     help="LOT marginal tolerance."),
        click.option("--lot-max-iter", default=1000, show_default=True,
                     type=click.IntRange(min=1), help="LOT iteration cap."),
        click.option("--init", default="barycenter", show_default=True,
                     type=click.Choice(["barycenter", "random"])),
        click.option("--max-vocab", default=200000, show_default=True, type=click.IntRange(min=1)),
        click.option("--max-iter", default=30, show_default=True, type=click.IntRange(min=1)),
        click.option("--tol", default=1e-3, show_default=True, type=float),
        click.option("--gradient-mode", default="clamped", show_default=True,
                     type=click.Choice(["clamped", "partitioned"])),
        click.option("--csls-k", default=10, show_default=True, type=click.IntRange(min=1)),
        click.option("--retrieval", default="dict", show_default=True,
                     type=click.Choice(["dict", "full"])),
        click.option("--rng-seed", default=None, type=int,
                     help="Seed for all randomness; generated and printed when absent."),
        click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1),
                     help="Run forward and reverse passes concurrently when > 1."),
        click.option("--strict", is_flag=True, help="Fail (exit 4) when LOT misses its tolerance."),
        click.option("--timing", is_flag=True, help="Record wall time in reports."),
        click.option("--out", default=None, help="Report file (JSON lines); stdout when absent."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise DataError(f"no such file: {p}")


def _resolve_seed(opts):
    if opts.get("rng_seed") is None:
        opts["rng_seed"] = secrets.randbelow(2**31)
        click.echo(f"rng-seed: {opts['rng_seed']}", err=True)


def _print_config(cfg):
    for key, value in sorted(cfg.items()):
        click.echo(f"{key} = {value}")


def _run(opts, dry_run):
    _resolve_seed(opts)
    try:
        cfg = pipelines.ExperimentConfig(**opts)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if dry_run:
        _print_config(cfg.as_dict())
        return
    _require_files(cfg.src_emb, cfg.tgt_emb, cfg.dict_path, cfg.dict_rev)
    try:
        reports = pipelines.run_experiment(cfg)
    except NumericalError as exc:
        raise NumericFailure(str(exc)) from None
    except (ParseError, VocabularyError, DomainError, OSError) as exc:
        raise DataError(str(exc)) from None
    lines = [r.to_json() for r in reports]
    if cfg.out:
        Path(cfg.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        for r in reports:
            r.write_predictions(f"{cfg.out}.{r.method}-{r.direction}.pred.tsv")
    else:
        for line in lines:
            click.echo(line)
    for r in reports:
        click.echo(f"{r.pair} {r.method} {r.direction} seeds={r.seeds} P@1={r.p_at_1:.1f}",
                   err=True)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
@click.version_option(package_name="artifact", prog_name="graphbli")
def main(verbose):
    """Bilingual lexicon induction by graph matching."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


@main.command()
@click.option("--method", default="goat", show_default=True,
              type=click.Choice(pipelines.BASE_METHODS))
@data_options
@config_options
def match(dry_run, **opts):
    """Induce a lexicon with Procrustes, SGM or GOAT."""
    _run(opts, dry_run)


@main.command("iter")
@click.option("--method", default="goat", show_default=True,
              type=click.Choice(pipelines.BASE_METHODS), help="Base method.")
@click.option("--H", "H", default=100, show_default=True, type=click.IntRange(min=1),
              help="Hypotheses added per round.")
@click.option("--I", "I", default=5, show_default=True, type=click.IntRange(min=1),
              help="Rounds.")
@data_options
@config_options
def iter_cmd(dry_run, method, **opts):
    """Iterative stochastic-add version of a base method."""
    opts["method"] = {v: k for k, v in pipelines.ITER_METHODS.items()}[method]
    _run(opts, dry_run)


@main.command()
@click.option("--cycles", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--ending", default="proc", show_default=True, type=click.Choice(pipelines.ENDINGS))
@click.option("--H", "H", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--I", "I", default=5, show_default=True, type=click.IntRange(min=1))
@click.option("--pass-all-hypotheses", "pass_all", is_flag=True,
              help="Hand every intersected hypothesis to the next stage.")
@data_options
@config_options
def combine(dry_run, **opts):
    """GOAT + iterative Procrustes system combination."""
    opts["method"] = "combine"
    _run(opts, dry_run)


@main.command()
@click.option("--src-emb", required=True)
@click.option("--tgt-emb", required=True)
@click.option("--dict", "dict_path", default=None,
              help="Pair words through a dictionary; rows are paired by position otherwise.")
@click.option("--max-words", default=5000, show_default=True, type=click.IntRange(min=10))
@click.option("--knn", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--gh-sample", default=2000, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--normalized", is_flag=True, help="Use the normalized Laplacian.")
@click.option("--out", default=None)
@config_options
def iso(dry_run, src_emb, tgt_emb, dict_path, max_words, knn, gh_sample, seed, normalized, out):
    """Eigenvector similarity and Gromov-Hausdorff distance of two spaces."""
    if dry_run:
        _print_config(dict(src_emb=src_emb, tgt_emb=tgt_emb, dict_path=dict_path,
                           max_words=max_words, knn=knn, gh_sample=gh_sample, seed=seed,
                           normalized=normalized, out=out))
        return
    _require_files(src_emb, tgt_emb, dict_path)
    try:
        a = preprocess(load_vec(src_emb))
        b = preprocess(load_vec(tgt_emb))
        if dict_path:
            lex = restrict_to_vocab(load_dictionary(dict_path), a, b)
            pairs = list(dict.fromkeys(lex.pairs))[:max_words]
            sub_a, sub_b = [p[0] for p in pairs], [p[1] for p in pairs]
        else:
            n = min(len(a), len(b), max_words)
            sub_a, sub_b = a.words[:n], b.words[:n]
        report = isometry_report(a, b, sub_a, sub_b, knn=knn, sample=gh_sample, seed=seed,
                                 normalized=normalized)
    except (ParseError, VocabularyError, DomainError, OSError) as exc:
        raise DataError(str(exc)) from None
    line = json.dumps({"src": src_emb, "tgt": tgt_emb, **report.as_dict()}, sort_keys=True)
    if out:
        Path(out).write_text(line + "\n", encoding="utf-8")
    else:
        click.echo(line)


@main.command()
@click.argument("reports", nargs=-1, required=True)
@click.option("--out", default=None, help="CSV file; stdout when absent.")
@config_options
def table(dry_run, reports, out):
    """Collect report files into a P / S / G table with the GOAT-minus-SGM gain."""
    if dry_run:
        _print_config(dict(reports=list(reports), out=out))
        return
    _require_files(*reports)
    records = []
    for path in reports:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        records.append(json.loads(line))
                    except json.JSONDecodeError:
                        raise DataError(f"{path}:{lineno}: not a JSON record") from None
    text = pipelines.results_table(records)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
