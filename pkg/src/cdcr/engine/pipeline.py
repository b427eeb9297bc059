"""The five pipeline stages: extract, partition, match, classify, cluster.

Each stage reads only the store kinds written by the stage before it and
commits its own segment. Kinds by stage:

    extract    mention, stats
    partition  partition, partition_stats
    match      match_members, scores
    classify   classify_members, decisions
    cluster    cluster

Inside a partition, mentions with identical enabled feature values form
one group and are scored once; pair arrays index groups, and mention
level results are recovered from the group sizes.
"""

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..block import CandidatePair, blocking_key, pair_count, partition_name, row_shards
from ..classify import (FEATURES, ClassifierConfig, Scorer, Verdict, decide_codes, featurize,
                        write_review)
from ..cluster import (StreamingState, UnionFind, agglomerative_single_link, make_clusters,
                       streaming_cluster, write_clusters)
from ..corpus import IngestReport, read_corpus
from ..errors import CdcrError, ConfigError, IngestError, StageError
from ..extract import ExtractConfig, Gazetteer, Mention, extract_mentions
from ..simfns import CorpusStats
from .executor import Executor, StageReport, shards, shuffle_by_key
from .store import STAGES, EntityStore

CLUSTER_MODES = ("components", "agglomerative", "streaming")


@dataclass
class PipelineConfig:
    corpus: Optional[str] = None
    corpus_format: str = "auto"
    gazetteer: Optional[str] = None
    classifier: Optional[str] = None  # path to a classifier config file
    cluster_mode: str = "components"
    cluster_params: dict = field(default_factory=dict)
    workers: int = 1
    shard_size: int = 64  # documents per extraction shard
    pair_shard: int = 250_000  # target pairs per scoring task
    out: str = "out"
    seed: int = 0
    context_window: int = 10
    merge_empty_subtype: bool = False
    lower: Optional[float] = None  # threshold overrides
    upper: Optional[float] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.shard_size < 1:
            raise ConfigError(f"shard_size must be >= 1, got {self.shard_size}")
        if self.pair_shard < 1:
            raise ConfigError(f"pair_shard must be >= 1, got {self.pair_shard}")
        if self.cluster_mode not in CLUSTER_MODES:
            raise ConfigError(f"cluster mode must be one of {CLUSTER_MODES}, got {self.cluster_mode!r}")
        if self.cluster_mode == "streaming":
            missing = {"max_clusters", "radius_limit"} - set(self.cluster_params)
            if missing:
                raise ConfigError(f"streaming clustering needs {sorted(missing)}")
            StreamingState(int(self.cluster_params["max_clusters"]),
                           float(self.cluster_params["radius_limit"]))

    def classifier_config(self) -> ClassifierConfig:
        cfg = ClassifierConfig.load(self.classifier) if self.classifier else ClassifierConfig()
        if self.lower is not None or self.upper is not None:
            lower = self.lower if self.lower is not None else cfg.lower
            upper = self.upper if self.upper is not None else cfg.upper
            cfg = cfg.with_thresholds(lower, upper)
        return cfg

    @property
    def store_dir(self):
        return Path(self.out) / "store"


@dataclass
class RunSummary:
    reports: list
    outputs: dict
    access: dict = field(default_factory=dict)  # stage -> store kinds read

    def report(self, stage) -> StageReport:
        return next(r for r in self.reports if r.stage == stage)

    def format(self) -> str:
        lines = []
        for r in self.reports:
            lines.append(f"{r.stage}.input: {r.input_count}")
            lines.append(f"{r.stage}.output: {r.output_count}")
            lines.append(f"{r.stage}.seconds: {r.wall_time:.3f}")
            for w, n in sorted(r.worker_items.items()):
                lines.append(f"{r.stage}.worker.{w}: {n}")
        for k, v in sorted(self.outputs.items()):
            lines.append(f"output.{k}: {v}")
        return "\n".join(lines) + "\n"


class Context:
    def __init__(self, config: PipelineConfig, store: EntityStore):
        self.config = config
        self.store = store
        self.classifier = config.classifier_config()
        self.enabled = {n: FEATURES[n] for n in sorted(self.classifier.features)}


# ---------------------------------------------------------------------------
# worker-side state, installed once per process

_W = {}


def _init_extract(gazetteer, extract_config, enabled):
    _W.clear()
    _W.update(gaz=gazetteer, cfg=extract_config, enabled=enabled)


def _extract_shard(docs):
    out = []
    for doc in docs:
        for m in extract_mentions(doc, _W["gaz"], _W["cfg"]):
            rec = m.to_dict()
            rec["features"] = featurize(m, doc, _W["enabled"]).values()
            out.append(rec)
    return out


def _init_match(classifier, stats, groups):
    _W.clear()
    _W.update(scorer=Scorer(classifier, stats), groups=groups)


def _score_rows(task):
    """Score group rows ``lo..hi`` of one partition against all later groups.

    The diagonal pair (g, g) is scored only for groups holding at least two
    mentions, since only then does it stand for real mention pairs.
    """
    p, lo, hi = task
    values, sizes = _W["groups"][p]
    scorer = _W["scorer"]
    gi, gj, comb, feats = [], [], [], []
    for i in range(lo, hi):
        start = i if sizes[i] > 1 else i + 1
        others = values[start:]
        if not others:
            continue
        c, f = scorer.score_many(values[i], others)
        gi.append(np.full(len(others), i, dtype=np.uint32))
        gj.append(np.arange(start, len(values), dtype=np.uint32))
        comb.append(c)
        feats.append(f.astype(np.float32))
    if not gi:
        n_feat = len(scorer.names)
        return (np.zeros(0, np.uint32), np.zeros(0, np.uint32), np.zeros(0),
                np.zeros((0, n_feat), np.float32))
    return np.concatenate(gi), np.concatenate(gj), np.concatenate(comb), np.concatenate(feats)


def _pair_weights(gi, gj, sizes):
    """Number of mention pairs each group pair stands for."""
    sizes = np.asarray(sizes, dtype=np.int64)
    w = sizes[gi] * sizes[gj]
    diag = gi == gj
    w[diag] = sizes[gi[diag]] * (sizes[gi[diag]] - 1) // 2
    return w


# ---------------------------------------------------------------------------
# stages


def stage_extract(ctx: Context) -> StageReport:
    cfg = ctx.config
    report = StageReport("extract")
    ingest = IngestReport()
    docs = read_corpus(cfg.corpus, cfg.corpus_format, ingest) if cfg.corpus else []
    report.input_count = len(docs)
    gaz = Gazetteer.load(cfg.gazetteer) if cfg.gazetteer else None
    ecfg = ExtractConfig(context_window=cfg.context_window)
    with Executor(cfg.workers, _init_extract, (gaz, ecfg, ctx.enabled)) as ex:
        results = ex.map(_extract_shard, shards(docs, cfg.shard_size), report)
    start = time.perf_counter()
    mentions = sorted((r for shard in results for r in shard), key=lambda r: r["id"])
    # reduce: global corpus statistics for tf/idf
    stats = CorpusStats.from_texts(d.body for d in docs)
    with ctx.store.begin_stage("extract") as w:
        for rec in mentions:
            w.put("mention", rec["id"], rec)
        w.put("stats", "corpus", stats.to_dict())
        report.output_count = len(mentions)
        report.wall_time += time.perf_counter() - start
        w.meta = {"report": report.to_dict(), "replaced_bytes": ingest.replaced_bytes}
    return report


def stage_partition(ctx: Context) -> StageReport:
    cfg, store = ctx.config, ctx.store
    report = StageReport("partition")
    start = time.perf_counter()
    mentions = [rec for _, rec in store.items("mention")]
    report.input_count = len(mentions)

    groups = shuffle_by_key(mentions,
                            lambda r: blocking_key(Mention.from_dict(r), cfg.merge_empty_subtype),
                            cfg.workers, sort_key=lambda r: r["id"])
    stats = store.get("stats", "corpus")
    with store.begin_stage("partition") as w:
        for k, worker, members in groups:
            w.put("partition", partition_name(k), {
                "key": list(k), "worker": worker,
                "members": [[r["id"], r["surface"]] for r in members],
                "features": [r["features"] for r in members],
            })
            report.worker_items[f"w{worker}"] = report.worker_items.get(f"w{worker}", 0) + len(members)
        w.put("partition_stats", "corpus", stats)
        report.output_count = sum(len(g[2]) for g in groups)
        report.wall_time = time.perf_counter() - start
        w.meta = {"report": report.to_dict(), "partitions": len(groups)}
    return report


def _group_members(features):
    """Assign each mention a group index by its feature values; groups in first-seen order."""
    index, values, sizes, groups = {}, [], [], []
    for fv in features:
        k = tuple(sorted((n, json.dumps(v)) for n, v in fv.items()))
        g = index.get(k)
        if g is None:
            g = index[k] = len(values)
            values.append(fv)
            sizes.append(0)
        sizes[g] += 1
        groups.append(g)
    return values, sizes, groups


def stage_match(ctx: Context) -> StageReport:
    cfg, store = ctx.config, ctx.store
    report = StageReport("match")
    stats = CorpusStats.from_dict(store.get("partition_stats", "corpus"))
    parts = [rec for _, rec in store.items("partition")]
    grouped, member_groups = [], []
    tasks = []
    for p, rec in enumerate(parts):
        values, sizes, groups = _group_members(rec["features"])
        grouped.append((values, sizes))
        report.input_count += len(rec["members"])
        member_groups.append(groups)
        tasks.extend((p, lo, hi) for lo, hi in row_shards(len(values), cfg.pair_shard))

    def weight(task):
        p, lo, hi = task
        n = len(grouped[p][0])
        return sum(n - i for i in range(lo, hi))

    with Executor(cfg.workers, _init_match, (ctx.classifier, stats, grouped)) as ex:
        results = ex.map(_score_rows, tasks, report, weight=weight)

    start = time.perf_counter()
    by_part = {p: [] for p in range(len(parts))}
    for (p, _, _), res in zip(tasks, results):
        by_part[p].append(res)
    scored = dropped = 0
    names = sorted(ctx.classifier.features)
    with store.begin_stage("match") as w:
        for p, rec in enumerate(parts):
            values, sizes = grouped[p]
            chunks = by_part[p]
            n_feat = len(names)
            if chunks:
                gi = np.concatenate([c[0] for c in chunks])
                gj = np.concatenate([c[1] for c in chunks])
                comb = np.concatenate([c[2] for c in chunks])
                feats = np.concatenate([c[3] for c in chunks])
            else:
                gi = gj = np.zeros(0, np.uint32)
                comb, feats = np.zeros(0), np.zeros((0, n_feat), np.float32)
            weights = _pair_weights(gi, gj, sizes)
            bad = np.isnan(comb)
            dropped += int(weights[bad].sum())
            keep = ~bad
            gi, gj, comb, feats, weights = gi[keep], gj[keep], comb[keep], feats[keep], weights[keep]
            scored += int(weights.sum())
            name = partition_name(tuple(rec["key"]))
            w.put("match_members", name, {
                "key": rec["key"], "members": rec["members"], "groups": member_groups[p],
                "sizes": sizes, "values": values, "features": names,
            })
            w.put_arrays("scores", name, {"gi": gi, "gj": gj, "combined": comb, "features": feats})
        report.output_count = scored
        report.wall_time += time.perf_counter() - start
        w.meta = {"report": report.to_dict(), "dropped_pairs": dropped,
                  "mention_pairs": sum(pair_count(len(r["members"])) for r in parts)}
    return report


def stage_classify(ctx: Context) -> StageReport:
    cfg, store = ctx.config, ctx.store
    clf = ctx.classifier
    report = StageReport("classify")
    start = time.perf_counter()
    keep_floor = clf.lower
    if cfg.cluster_mode == "agglomerative":
        keep_floor = min(keep_floor, float(cfg.cluster_params.get("stop_threshold", clf.upper)))
    verdicts = Counter()
    review_rows = []
    with store.begin_stage("classify") as w:
        for name, members in store.items("match_members"):
            arrs = store.get("scores", name)
            gi, gj, comb = arrs["gi"], arrs["gj"], arrs["combined"]
            weights = _pair_weights(gi, gj, members["sizes"])
            codes = decide_codes(comb, clf.lower, clf.upper)
            report.input_count += int(weights.sum())
            for code in (0, 1, 2):
                verdicts[code] += int(weights[codes == code].sum())
            if (codes == 1).any():
                review_rows.extend(_review_rows(members, gi, gj, comb, arrs["features"], codes == 1))
            keep = (codes > 0) | (comb >= keep_floor)
            w.put("classify_members", name, {k: members[k] for k in
                                             ("key", "members", "groups", "sizes", "values")})
            w.put_arrays("decisions", name, {"gi": gi[keep], "gj": gj[keep], "code": codes[keep],
                                             "combined": comb[keep]})
        report.output_count = sum(verdicts.values())
        report.wall_time = time.perf_counter() - start
        w.meta = {"report": report.to_dict(),
                  "verdicts": {Verdict(_CODE_NAMES[c]).value: n for c, n in sorted(verdicts.items())}}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    review_rows.sort()
    write_review(out / "review.tsv", review_rows)
    return report


_CODE_NAMES = {0: "nonCoreferent", 1: "possible", 2: "coreferent"}


def _expand(members, gi, gj):
    """Mention id pairs behind group pair (gi, gj)."""
    by_group = {}
    for (mid, _), g in zip(members["members"], members["groups"]):
        by_group.setdefault(g, []).append(mid)
    ids_i, ids_j = by_group[gi], by_group[gj]
    if gi == gj:
        return [(a, b) for k, a in enumerate(ids_i) for b in ids_i[k + 1:]]
    return [(min(a, b), max(a, b)) for a in ids_i for b in ids_j]


def _review_rows(members, gi, gj, comb, feats, mask):
    names = members.get("features") or []
    rows = []
    for i in np.flatnonzero(mask):
        per = {n: float(v) for n, v in zip(names, feats[i]) if not np.isnan(v)}
        for a, b in _expand(members, int(gi[i]), int(gj[i])):
            rows.append((CandidatePair(a, b).id, float(comb[i]), Verdict.POSSIBLE, per))
    return rows


def stage_cluster(ctx: Context) -> StageReport:
    cfg, store = ctx.config, ctx.store
    report = StageReport("cluster")
    start = time.perf_counter()
    parts = list(store.items("classify_members"))
    surfaces = {mid: s for _, m in parts for mid, s in m["members"]}
    report.input_count = len(surfaces)
    mode = cfg.cluster_mode
    if mode == "components":
        uf = UnionFind(surfaces)
        for name, m in parts:
            d = store.get("decisions", name)
            ids = _group_ids(m)
            coref = d["code"] == 2
            for a, b in zip(d["gi"][coref].tolist(), d["gj"][coref].tolist()):
                if a == b:
                    for x in ids[a][1:]:
                        uf.union(ids[a][0], x)
                else:
                    uf.union(ids[a][0], ids[b][0])
        clusters = make_clusters(uf.groups(), surfaces)
    elif mode == "agglomerative":
        stop = float(cfg.cluster_params.get("stop_threshold", ctx.classifier.upper))
        scores = {}
        for name, m in parts:
            d = store.get("decisions", name)
            ids = _group_ids(m)
            for a, b, s in zip(d["gi"].tolist(), d["gj"].tolist(), d["combined"].tolist()):
                if a == b:
                    chain = ids[a]
                    for x, y in zip(chain, chain[1:]):
                        scores[(x, y)] = s
                else:
                    x, y = ids[a][0], ids[b][0]
                    scores[(min(x, y), max(x, y))] = s
        clusters = agglomerative_single_link(sorted(surfaces), scores, stop, surfaces)
    else:
        clusters = _stream(ctx, parts, surfaces)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "clusters.jsonl"
    write_clusters(path, clusters)
    with store.begin_stage("cluster") as w:
        for c in clusters:
            w.put("cluster", c.id, c.to_dict())
        report.output_count = len(clusters)
        report.wall_time = time.perf_counter() - start
        w.meta = {"report": report.to_dict()}
    return report


def _group_ids(members) -> dict:
    ids = {}
    for (mid, _), g in zip(members["members"], members["groups"]):
        ids.setdefault(g, []).append(mid)
    return ids


def _stream(ctx, parts, surfaces):
    """Streaming k-center over all mentions in id order; mentions of different partitions never match."""
    params = ctx.config.cluster_params
    state = StreamingState(int(params["max_clusters"]), float(params["radius_limit"]))
    scorer = Scorer(ctx.classifier)
    items = []
    for name, m in parts:
        for (mid, _), g in zip(m["members"], m["groups"]):
            items.append((mid, (name, m["values"][g])))
    items.sort(key=lambda t: t[0])

    def sim(a, b):
        if a[0] != b[0]:
            return 0.0
        return scorer.score(a[1], b[1])[0]

    return streaming_cluster(items, sim, state, surfaces)


STAGE_FUNCTIONS = {"extract": stage_extract, "partition": stage_partition, "match": stage_match,
                   "classify": stage_classify, "cluster": stage_cluster}


def run_stages(config: PipelineConfig, stages=STAGES, trace=True) -> RunSummary:
    """Run ``stages`` in order against the store under ``config.out``.

    Every stage must find its predecessor completed in the store. Failures
    are re-raised as ``StageError`` tagged with the stage name.
    """
    access = {}
    log = [] if trace else None
    store = EntityStore(config.store_dir, trace=log)
    ctx = Context(config, store)
    reports = []
    for stage in stages:
        i = STAGES.index(stage)
        if i > 0 and not store.is_complete(STAGES[i - 1]):
            raise StageError(stage, ConfigError(f"stage {STAGES[i - 1]!r} has not been run"))
        if log is not None:
            log.clear()
        try:
            reports.append(STAGE_FUNCTIONS[stage](ctx))
        except StageError:
            raise
        except CdcrError as e:
            raise StageError(stage, e) from e
        except OSError as e:
            raise StageError(stage, _as_data_error(e)) from e
        if log is not None:
            access[stage] = sorted(set(log))
    out = Path(config.out)
    outputs = {"store": str(config.store_dir)}
    if "cluster" in stages:
        outputs["clusters"] = str(out / "clusters.jsonl")
    if "classify" in stages:
        outputs["review"] = str(out / "review.tsv")
    summary = RunSummary(reports, outputs, access)
    if reports:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.txt").write_text(summary.format(), encoding="utf-8")
    return summary


def _as_data_error(e):
    return IngestError(str(e))


def run_pipeline(config: PipelineConfig) -> RunSummary:
    return run_stages(config, STAGES)
