"""Command-line interface."""

import json
import sys
from pathlib import Path

import click
import yaml

from .cluster import read_clusters
from .errors import CdcrError, ConfigError
from .evaluation import GoldStandard, bcubed, identification_prf, link_f, write_report
from .engine.pipeline import PipelineConfig, run_stages
from .engine.store import EntityStore
from .engine.synth import NoiseModel, synth_corpus


def _load_settings(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def _pipeline_config(obj, **overrides) -> PipelineConfig:
    settings = dict(obj["settings"])
    settings.update({k: v for k, v in overrides.items() if v is not None})
    settings["workers"] = obj["workers"] if obj["workers"] is not None else settings.get("workers", 1)
    settings["out"] = obj["out"] or settings.get("out", "out")
    try:
        return PipelineConfig(**settings)
    except TypeError as e:
        raise ConfigError(f"bad pipeline setting: {e}") from None


def _run(obj, stages, **overrides):
    cfg = _pipeline_config(obj, **overrides)
    summary = run_stages(cfg, stages)
    click.echo(summary.format(), nl=False)
    return summary


@click.group()
@click.option("--workers", type=int, default=None, help="Worker processes (default 1).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Pipeline settings file (YAML or JSON).")
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.pass_context
def cli(ctx, workers, config_path, out):
    """Cross-document coreference resolution pipeline."""
    ctx.obj = {"workers": workers, "out": out, "settings": _load_settings(config_path)}


@cli.command()
@click.argument("corpus", type=click.Path())
@click.option("--format", "corpus_format", default=None, help="auto, directory, jsonl or markup.")
@click.option("--gazetteer", type=click.Path(), default=None)
@click.pass_obj
def extract(obj, corpus, corpus_format, gazetteer):
    """Stage 1: extract mentions from CORPUS."""
    _run(obj, ["extract"], corpus=corpus, corpus_format=corpus_format, gazetteer=gazetteer)


@cli.command()
@click.option("--classifier", type=click.Path(), default=None, help="Classifier config file.")
@click.option("--stats", is_flag=True, help="Print per-partition mention and pair counts.")
@click.option("--dedupe-surfaces", is_flag=True,
              help="With --stats, also count distinct surfaces per partition.")
@click.pass_obj
def pairs(obj, classifier, stats, dedupe_surfaces):
    """Stages 2-3: partition mentions and score candidate pairs."""
    summary = _run(obj, ["partition", "match"], classifier=classifier)
    if stats:
        store = EntityStore(Path(summary.outputs["store"]))
        for name, rec in store.items("match_members"):
            n = len(rec["members"])
            line = f"partition {name}: mentions {n} pairs {n * (n - 1) // 2}"
            if dedupe_surfaces:
                line += f" surfaces {len({s for _, s in rec['members']})}"
            click.echo(line)


@cli.command()
@click.option("--classifier", type=click.Path(), default=None)
@click.option("--lower", type=float, default=None)
@click.option("--upper", type=float, default=None)
@click.option("--threshold", type=float, default=None, help="Set lower and upper together.")
@click.pass_obj
def classify(obj, classifier, lower, upper, threshold):
    """Stage 4: threshold decisions over scored pairs."""
    if threshold is not None:
        lower = upper = threshold
    _run(obj, ["classify"], classifier=classifier, lower=lower, upper=upper)


def _cluster_params(mode, stop_threshold, max_clusters, radius_limit):
    params = {}
    if stop_threshold is not None:
        params["stop_threshold"] = stop_threshold
    if max_clusters is not None:
        params["max_clusters"] = max_clusters
    if radius_limit is not None:
        params["radius_limit"] = radius_limit
    return params or None


@cli.command()
@click.option("--mode", type=click.Choice(["components", "agglomerative", "streaming"]), default=None)
@click.option("--stop-threshold", type=float, default=None)
@click.option("--max-clusters", type=int, default=None)
@click.option("--radius-limit", type=float, default=None)
@click.pass_obj
def cluster(obj, mode, stop_threshold, max_clusters, radius_limit):
    """Stage 5: group coreferent mentions into clusters."""
    _run(obj, ["cluster"], cluster_mode=mode,
         cluster_params=_cluster_params(mode, stop_threshold, max_clusters, radius_limit))


@cli.command()
@click.argument("corpus", type=click.Path())
@click.option("--format", "corpus_format", default=None)
@click.option("--gazetteer", type=click.Path(), default=None)
@click.option("--classifier", type=click.Path(), default=None)
@click.option("--lower", type=float, default=None)
@click.option("--upper", type=float, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--mode", type=click.Choice(["components", "agglomerative", "streaming"]), default=None)
@click.option("--stop-threshold", type=float, default=None)
@click.option("--max-clusters", type=int, default=None)
@click.option("--radius-limit", type=float, default=None)
@click.pass_obj
def run(obj, corpus, corpus_format, gazetteer, classifier, lower, upper, threshold, mode,
        stop_threshold, max_clusters, radius_limit):
    """Run all five stages over CORPUS."""
    if threshold is not None:
        lower = upper = threshold
    _run(obj, ["extract", "partition", "match", "classify", "cluster"], corpus=corpus,
         corpus_format=corpus_format, gazetteer=gazetteer, classifier=classifier, lower=lower,
         upper=upper, cluster_mode=mode,
         cluster_params=_cluster_params(mode, stop_threshold, max_clusters, radius_limit))


@cli.command()
@click.option("--clusters", "clusters_path", type=click.Path(), default=None,
              help="Cluster JSONL (default: OUT/clusters.jsonl).")
@click.option("--gold", "gold_path", type=click.Path(exists=True), required=True,
              help="mentionId TAB entityId file.")
@click.option("--gold-mentions", type=click.Path(exists=True), default=None,
              help="docId TAB start TAB end TAB type file, for identification scores.")
@click.option("--match-mode", type=click.Choice(["exact-span", "overlap"]), default="exact-span")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def evaluate(obj, clusters_path, gold_path, gold_mentions, match_mode, as_json):
    """Score clusters against a gold standard."""
    out = Path(obj["out"] or obj["settings"].get("out", "out"))
    clusters = read_clusters(clusters_path or out / "clusters.jsonl")
    gold = GoldStandard.load(gold_path, gold_mentions)
    reports = {"bcubed": bcubed(clusters, gold.mention_labels),
               "link": link_f(clusters, gold.mention_labels)}
    if gold_mentions:
        store = EntityStore(out / "store")
        system = [(r["doc"], r["span"][0], r["span"][1], r["type"]) for _, r in store.items("mention")]
        reports["identification"] = identification_prf(system, gold, match_mode)
    out.mkdir(parents=True, exist_ok=True)
    path = out / ("evaluation.json" if as_json else "evaluation.txt")
    write_report(path, reports, as_json=as_json)
    click.echo(path.read_text(encoding="utf-8"), nl=False)


@cli.command()
@click.option("--seed", type=int, default=0)
@click.option("--docs", "n_docs", type=int, default=1000)
@click.option("--entities", "n_entities", type=int, default=300)
@click.option("--typo-rate", type=float, default=0.0)
@click.option("--abbreviation-rate", type=float, default=0.0)
@click.option("--reorder-rate", type=float, default=0.0)
@click.pass_obj
def synth(obj, seed, n_docs, n_entities, typo_rate, abbreviation_rate, reorder_rate):
    """Write a synthetic corpus with gold labels to OUT."""
    try:
        noise = NoiseModel(typo_rate, abbreviation_rate, reorder_rate)
        corpus = synth_corpus(seed, n_docs, n_entities, noise)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = corpus.write(obj["out"] or "synth")
    click.echo(json.dumps({"documents": len(corpus.records), "mentions": len(corpus.surfaces),
                           "entities": len(corpus.entities), "out": str(out)}, sort_keys=True))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except CdcrError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(e.exit_code)
    sys.exit(0)


if __name__ == "__main__":
    main()
