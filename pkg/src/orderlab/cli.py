"""Config-driven experiment runner.

Commands: ingest, describe, baseline, optimize, frontier, report. A single
TOML config fixes every input, seed and tolerance, so any emitted number can
be recomputed from the config alone; artifacts carry the config hash in a
header line for that purpose. Output is TSV/JSON only, ready for external
plotting.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import measures, treebank, trigram
from .baseline import METRICS, empirical_p, pearson, run_baseline, standardize
from .linearize import Fixed, Identity, sample_weights
from .optimize import (
    Objective,
    OptimizeConfig,
    frontier_sweep,
    frontier_tsv,
    optimize as run_optimize,
)
from .treebank import SplitSpec, Treebank

OUTDIR_ENV = "ORDERLAB_OUTDIR"
DEFAULT_ALPHAS = (0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class _Stage:
    """Tags any exception raised inside with the failing pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


@dataclass(frozen=True)
class BaselineConfig:
    n: int
    mode: str = "fixed_per_type"
    master_seed: int = 0


@dataclass(frozen=True)
class OptimizeSection:
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    restarts: int = 0
    max_passes: int = 50
    tolerance_dl: float = 1e-12
    tolerance_id: float = 1e-9
    freeze_headedness: bool = False
    init_seed: int = 1
    id_kind: str = "ID_char"

    def config_for(self, obj: Objective) -> OptimizeConfig:
        tol = self.tolerance_dl if obj.kind == "DL" else self.tolerance_id
        return OptimizeConfig(
            max_passes=self.max_passes,
            tolerance=tol,
            freeze_headedness=self.freeze_headedness,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_paths: tuple[str, ...]
    language: str = ""
    type_scheme: str = "child_parent_pair"
    attach_strays: bool = False
    output_dir: str = "out"
    workers: int = 1
    lm_cache: bool = False
    split: SplitSpec = field(default_factory=SplitSpec)
    baseline: BaselineConfig | None = None
    optimize: OptimizeSection | None = None


def load_config(path) -> ExperimentConfig:
    raw = Path(path).read_bytes()
    data = tomllib.loads(raw.decode("utf-8"))
    corpus = data.get("corpus")
    if corpus is None:
        raise ValueError("config is missing the 'corpus' key")
    paths = tuple([corpus] if isinstance(corpus, str) else corpus)
    split_data = data.get("split", {})
    frac = split_data.get("train_fraction", "9/10")
    spec = SplitSpec(
        train_fraction=Fraction(str(frac)),
        strategy=split_data.get("strategy", "interleaved"),
        seed=int(split_data.get("seed", 0)),
    )
    bl = None
    if "baseline" in data:
        b = data["baseline"]
        bl = BaselineConfig(
            n=int(b["n"]),
            mode=b.get("mode", "fixed_per_type"),
            master_seed=int(b.get("master_seed", 0)),
        )
    opt = None
    if "optimize" in data:
        o = data["optimize"]
        opt = OptimizeSection(
            alphas=tuple(float(a) for a in o.get("alphas", DEFAULT_ALPHAS)),
            restarts=int(o.get("restarts", 0)),
            max_passes=int(o.get("max_passes", 50)),
            tolerance_dl=float(o.get("tolerance_dl", 1e-12)),
            tolerance_id=float(o.get("tolerance_id", 1e-9)),
            freeze_headedness=bool(o.get("freeze_headedness", False)),
            init_seed=int(o.get("init_seed", 1)),
            id_kind=o.get("id_kind", "ID_char"),
        )
    return ExperimentConfig(
        corpus_paths=paths,
        language=data.get("language", ""),
        type_scheme=data.get("type_scheme", "child_parent_pair"),
        attach_strays=bool(data.get("attach_strays", False)),
        output_dir=data.get("output_dir", "out"),
        workers=int(data.get("workers", 1)),
        lm_cache=bool(data.get("lm_cache", False)),
        split=spec,
        baseline=bl,
        optimize=opt,
    )


def config_hash(config: ExperimentConfig, stages) -> str:
    """Content hash identifying the experiment: every knob that can change a
    number, plus the corpus bytes. Paths, worker counts and cache settings
    are excluded so relocating a run does not change its identity."""
    essence = (
        config.language,
        config.type_scheme,
        config.attach_strays,
        config.split,
        config.baseline,
        config.optimize,
        sorted(stages),
    )
    h = hashlib.sha256()
    h.update(repr(essence).encode("utf-8"))
    for path in config.corpus_paths:
        h.update(Path(path).read_bytes())
    return h.hexdigest()[:12]


def load_corpus(config: ExperimentConfig) -> Treebank:
    sentences = []
    for path in config.corpus_paths:
        text = Path(path).read_text(encoding="utf-8")
        tb = treebank.parse_conllx(
            text, language_tag=config.language, attach_strays=config.attach_strays
        )
        sentences.extend(tb.sentences)
    full = Treebank(sentences=tuple(sentences), language_tag=config.language)
    if not full.sentences:
        raise treebank.TreebankError("corpus is empty")
    return treebank.derive_dependency_types(full, scheme=config.type_scheme)


def describe(tb: Treebank) -> dict:
    """Corpus overview: counts, sentence-length stats, vocabulary, charset."""
    if not tb.sentences:
        raise treebank.TreebankError("corpus is empty")
    lengths = np.array([len(s) for s in tb.sentences])
    try:
        inventory = len(tb.dep_type_inventory())
    except treebank.TreebankError:
        inventory = None  # untyped corpus (ingest before derive)
    return {
        "sentences": len(tb.sentences),
        "mean_length": float(np.mean(lengths)),
        "sd_length": float(np.std(lengths, ddof=1)) if len(lengths) > 1 else 0.0,
        "min_length": int(np.min(lengths)),
        "max_length": int(np.max(lengths)),
        "vocabulary": len(tb.vocabulary),
        "charset_size": tb.charset_size,
        "charset_bits": treebank.char_inventory(tb)[1],
        "dep_types": inventory,
    }


@dataclass
class ReportBundle:
    config_hash: str
    describe: dict
    actual: measures.EfficiencyPoint
    baseline_summary: dict | None = None
    empirical_p: dict | None = None
    pearson: dict | None = None
    actual_z: dict | None = None
    headedness_pct: float | None = None
    optimization_table: dict | None = None
    restart_variance: float | None = None
    frontier: list | None = None

    def to_json(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "describe": self.describe,
            "actual": json.loads(self.actual.to_json()),
            "baseline_summary": self.baseline_summary,
            "empirical_p": self.empirical_p,
            "pearson": self.pearson,
            "actual_z": self.actual_z,
            "headedness_pct": self.headedness_pct,
            "optimization_table": self.optimization_table,
            "restart_variance": self.restart_variance,
            "frontier": self.frontier,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _artifact_header(tag: str, chash: str, seed) -> str:
    return f"# {tag}\tconfig_hash={chash}\tseed={seed}"


def _defined(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return None


def _model_for(full, spec, mode, cache_dir, chash):
    """Train the LM for a mode, optionally via the binary count-table cache
    keyed by the content hash of the reordered training portion."""
    from .linearize import reorder_corpus
    from .treebank import serialize_conllx, split as split_tb

    train_tb, _ = split_tb(full, spec)
    ordered = reorder_corpus(train_tb, mode)
    if cache_dir is None:
        return trigram.train_kn(ordered, full.vocabulary)
    key_src = serialize_conllx(ordered) + "\x00" + "\x00".join(sorted(full.vocabulary))
    key = hashlib.sha256(key_src.encode("utf-8")).hexdigest()[:24]
    path = Path(cache_dir) / f"lm_{key}.pkl"
    if path.exists():
        return trigram.TrigramModel.load_counts(path)
    model = trigram.train_kn(ordered, full.vocabulary)
    cache_path_tmp = path.with_suffix(".tmp")
    model.save_counts(cache_path_tmp)
    os.replace(cache_path_tmp, path)
    return model


ALL_STAGES = frozenset({"baseline", "optimize", "frontier"})


def run_experiment(
    config: ExperimentConfig, out_dir: Path | None = None, stages=None
) -> ReportBundle:
    """Execute the configured pipeline end to end and write all artifacts.

    ``stages`` restricts which of baseline/optimize/frontier run (all
    configured ones by default). Re-running with an identical config and
    corpus is a no-op: the bundle is keyed by a content hash and reloaded
    when it already exists.
    """
    stages = ALL_STAGES if stages is None else frozenset(stages)
    out = Path(out_dir or os.environ.get(OUTDIR_ENV) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INCOMPLETE"
    marker.write_text("in progress\n")

    with _Stage("ingest"):
        chash = config_hash(config, stages)

    bundle_path = out / "bundle.json"
    if bundle_path.exists():
        try:
            existing = json.loads(bundle_path.read_text())
        except json.JSONDecodeError:
            existing = {}
        if existing.get("config_hash") == chash:
            marker.unlink(missing_ok=True)
            return _bundle_from_payload(existing)

    cache_dir = None
    if config.lm_cache:
        cache_dir = out / "lm_cache"
        cache_dir.mkdir(exist_ok=True)

    with _Stage("ingest"):
        full = load_corpus(config)
    with _Stage("describe"):
        stats = describe(full)
    with _Stage("actual"):
        model = _model_for(full, config.split, Identity(), cache_dir, chash)
        actual = measures.efficiency_point(full, config.split, Identity(), model=model)
        headedness = measures.headedness_consistency(full)

    bundle = ReportBundle(
        config_hash=chash, describe=stats, actual=actual, headedness_pct=headedness
    )

    dist = None
    if "baseline" in stages and config.baseline is not None:
        with _Stage("baseline"):
            b = config.baseline
            dist = run_baseline(
                full,
                config.split,
                n=b.n,
                mode=b.mode,
                master_seed=b.master_seed,
                workers=config.workers,
            )
            header = _artifact_header("baseline samples", chash, b.master_seed)
            (out / "baseline.tsv").write_text(header + "\n" + dist.to_tsv())
            (out / "baseline_summary.json").write_text(dist.to_summary_json() + "\n")
            bundle.baseline_summary = dist.summary()
            bundle.empirical_p = {
                m: empirical_p(actual, dist, m)
                for m in METRICS
            }
            # correlation and z-scores are undefined for degenerate
            # distributions (< 3 samples, zero spread); report them as null
            bundle.pearson = {
                "h_char_dl": _defined(pearson, dist, ("h_char", "dl")),
                "h_word_dl": _defined(pearson, dist, ("h_word", "dl")),
            }
            bundle.actual_z = {
                m: _defined(standardize, actual.metric(m), dist, m)
                for m in METRICS
            }

    if stages & {"optimize", "frontier"} and config.optimize is not None:
        o = config.optimize
        types = full.dep_type_inventory()
        init = sample_weights(types, np.random.default_rng(o.init_seed))
        id_metric = "h_char" if o.id_kind == "ID_char" else "h_word"
    if "optimize" in stages and config.optimize is not None:
        with _Stage("optimize"):
            columns = {}
            for label, obj in (
                ("ID", Objective(o.id_kind)),
                ("ID&DL", Objective("Joint", alpha=0.5, id_metric=id_metric)),
                ("DL", Objective("DL")),
            ):
                grammar, trace = run_optimize(
                    full, config.split, obj, init, o.config_for(obj)
                )
                point = measures.efficiency_point(full, config.split, Fixed(grammar))
                columns[label] = {
                    "h_char": point.h_char,
                    "h_word": point.h_word,
                    "dl": point.dl,
                    "converged": trace.converged,
                }
                (out / f"trace_{label.replace('&', '_')}.tsv").write_text(
                    _artifact_header(f"trace {label}", chash, o.init_seed)
                    + "\n"
                    + trace.to_tsv()
                )
                (out / f"grammar_{label.replace('&', '_')}.json").write_text(
                    grammar.to_json() + "\n"
                )
            columns["actual"] = {
                "h_char": actual.h_char,
                "h_word": actual.h_word,
                "dl": actual.dl,
            }
            if dist is not None:
                columns["random_mean"] = {
                    "h_char": dist.means["h_char"],
                    "h_word": dist.means["h_word"],
                    "dl": dist.means["dl"],
                }
            bundle.optimization_table = columns
            (out / "optimization.tsv").write_text(
                _artifact_header("optimization table", chash, o.init_seed)
                + "\n"
                + _optimization_tsv(columns)
            )
            if o.restarts >= 2:
                from .optimize import restart_variance

                bundle.restart_variance = restart_variance(
                    full,
                    config.split,
                    Objective(o.id_kind),
                    k=o.restarts,
                    seeds=range(o.init_seed, o.init_seed + o.restarts),
                    config=o.config_for(Objective(o.id_kind)),
                    workers=config.workers,
                )
    if "frontier" in stages and config.optimize is not None:
        with _Stage("frontier"):
            points = frontier_sweep(
                full,
                config.split,
                o.alphas,
                init,
                config=o.config_for(Objective("Joint", alpha=0.5)),
                dist=dist,
                id_kind=o.id_kind,
                workers=config.workers,
            )
            (out / "frontier.tsv").write_text(
                _artifact_header("frontier", chash, o.init_seed)
                + "\n"
                + frontier_tsv(points)
            )
            bundle.frontier = [
                {
                    "alpha": fp.alpha,
                    "h_word": fp.point.h_word,
                    "h_char": fp.point.h_char,
                    "dl": fp.point.dl,
                    "z_h": fp.z_h,
                    "z_dl": fp.z_dl,
                }
                for fp in points
            ]

    with _Stage("report"):
        bundle_tmp = bundle_path.with_suffix(".tmp")
        bundle_tmp.write_text(bundle.to_json() + "\n")
        os.replace(bundle_tmp, bundle_path)
        (out / "summary.txt").write_text(_human_summary(bundle))
    marker.unlink(missing_ok=True)
    return bundle


def _bundle_from_payload(payload: dict) -> ReportBundle:
    return ReportBundle(
        config_hash=payload["config_hash"],
        describe=payload["describe"],
        actual=measures.EfficiencyPoint(**payload["actual"]),
        baseline_summary=payload.get("baseline_summary"),
        empirical_p=payload.get("empirical_p"),
        pearson=payload.get("pearson"),
        actual_z=payload.get("actual_z"),
        headedness_pct=payload.get("headedness_pct"),
        optimization_table=payload.get("optimization_table"),
        restart_variance=payload.get("restart_variance"),
        frontier=payload.get("frontier"),
    )


_OPT_COLUMNS = ("ID", "ID&DL", "DL", "actual", "random_mean")


def _optimization_tsv(columns: dict) -> str:
    lines = ["metric\t" + "\t".join(_OPT_COLUMNS)]
    for metric in ("h_char", "h_word", "dl"):
        cells = []
        for col in _OPT_COLUMNS:
            cell = columns.get(col, {}).get(metric)
            cells.append("" if cell is None else repr(cell))
        lines.append(metric + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def _human_summary(bundle: ReportBundle) -> str:
    d = bundle.describe
    lines = [
        f"config {bundle.config_hash}",
        "",
        f"sentences      {d['sentences']}",
        f"sentence len   mean {d['mean_length']:.1f}  sd {d['sd_length']:.1f}"
        f"  min {d['min_length']}  max {d['max_length']}",
        f"vocabulary     {d['vocabulary']}",
        f"charset        {d['charset_size']} unique characters"
        f" ({d['charset_bits']:.1f} bits)",
        "",
        f"actual h_word  {bundle.actual.h_word:.3f} bits/word",
        f"actual h_char  {bundle.actual.h_char:.3f}",
        f"actual dl      {bundle.actual.dl:.2f} words",
        f"headedness     {bundle.headedness_pct:.1f}%",
    ]
    if bundle.empirical_p is not None:
        n = bundle.baseline_summary["n"]
        lines.append("")
        for m in ("h_char", "h_word", "dl"):
            beat = round(bundle.empirical_p[m] * n)
            lines.append(f"random below actual ({m}): {beat}/{n}")
    if bundle.optimization_table is not None:
        lines.append("")
        lines.append("optimize for   " + "  ".join(_OPT_COLUMNS))
        for metric in ("h_char", "dl"):
            cells = [
                f"{bundle.optimization_table.get(col, {}).get(metric, float('nan')):.3f}"
                for col in _OPT_COLUMNS
            ]
            lines.append(f"{metric:<14} " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def _add_config_arg(sub):
    sub.add_argument("config", help="TOML experiment config")
    sub.add_argument("--out", help="output directory (overrides config)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orderlab",
        description="Word-order processing-efficiency experiments on dependency treebanks",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p_ingest = commands.add_parser("ingest", help="validate a corpus and write canonical TSV")
    p_ingest.add_argument("corpus")
    p_ingest.add_argument("--scheme", default="child_parent_pair",
                          choices=["self_label", "child_parent_pair"])
    p_ingest.add_argument("--attach-strays", action="store_true")
    p_ingest.add_argument("--out", help="path for the canonical TSV")

    p_desc = commands.add_parser("describe", help="corpus overview statistics")
    p_desc.add_argument("corpus")
    p_desc.add_argument("--scheme", default="child_parent_pair",
                        choices=["self_label", "child_parent_pair"])

    for name, help_text in (
        ("baseline", "Monte Carlo pseudo-grammar baseline"),
        ("optimize", "coordinate-descent grammar optimization"),
        ("frontier", "trade-off sweep over alpha"),
        ("report", "full experiment: baseline, optimization, frontier, report"),
    ):
        _add_config_arg(commands.add_parser(name, help=help_text))

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error [{args.command}] {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "ingest":
        text = Path(args.corpus).read_text(encoding="utf-8")
        tb = treebank.parse_conllx(text, attach_strays=args.attach_strays)
        tb = treebank.derive_dependency_types(tb, scheme=args.scheme)
        canonical = treebank.serialize_conllx(tb)
        if args.out:
            Path(args.out).write_text(canonical)
        else:
            sys.stdout.write(canonical)
        print(f"ok: {len(tb)} sentences, {len(tb.dep_type_inventory())} dependency types",
              file=sys.stderr)
        return 0

    if args.command == "describe":
        text = Path(args.corpus).read_text(encoding="utf-8")
        tb = treebank.parse_conllx(text)
        tb = treebank.derive_dependency_types(tb, scheme=args.scheme)
        for key, value in describe(tb).items():
            print(f"{key}\t{value}")
        return 0

    config = load_config(args.config)
    out = Path(args.out) if args.out else None

    if args.command == "report":
        stages = None
    elif args.command in ("baseline", "optimize", "frontier"):
        # Single-stage commands reuse the experiment machinery so their
        # artifacts match the full report's exactly.
        section = config.baseline if args.command == "baseline" else config.optimize
        section_name = "baseline" if args.command == "baseline" else "optimize"
        if section is None:
            raise StageError(
                args.command, ValueError(f"config has no [{section_name}] section")
            )
        stages = {args.command}
    else:
        raise ValueError(f"unknown command {args.command!r}")

    bundle = run_experiment(config, out_dir=out, stages=stages)
    out_dir = out or Path(os.environ.get(OUTDIR_ENV) or config.output_dir)
    print(f"{args.command} written to {out_dir} (config {bundle.config_hash})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
