"""Experiment orchestration: generate, transform, tokenize, train, evaluate,
compare, and report.

A run is fully declarative: an ExperimentSpec plus its seeds determine every
output byte.  For each (group, seed) the harness builds the group's corpus by
transforming a shared base corpus, trains a fresh model, and logs metrics;
afterwards it runs Welch tests of the natural group against each impossible
group on stabilized-window losses and perplexities, and writes CSV curves,
JSON and text reports, and SVG plots.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import corpusio, models, plots, stats, tokenizer, training
from .grammar import GenerationConfig, Sentence, default_grammar, generate_corpus
from .training import MetricSeries, TrainingConfig
from .transforms import TransformKind, apply_transform, normalize_line

__all__ = [
    "ConfigError",
    "InputError",
    "ExperimentSpec",
    "GroupResult",
    "RunReport",
    "LinearitySummary",
    "run_experiment",
    "emit_report",
    "linearity_gradient_summary",
    "render_text_report",
    "parse_spec_file",
    "load_report",
]

KNOWN_GROUPS = ("natural", "reversed", "parity-negation")

GROUP_TRANSFORMS = {
    "natural": TransformKind.IDENTITY,
    "reversed": TransformKind.REVERSE,
    "parity-negation": TransformKind.PARITY_NEGATION,
}

# experiment-id analogs: (corpus source, architecture)
EXPERIMENT_PRESETS = {
    "1": ("generated", "transformer"),
    "2": ("external", "transformer"),
    "3": ("generated", "lstm"),
    "4": ("external", "lstm"),
}


class ConfigError(ValueError):
    pass


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str = "custom"
    corpus_source: str = "generated"  # generated | external
    corpus_file: str | None = None
    corpus_count: int = 10000
    corpus_seed: int = 12345
    groups: tuple[str, ...] = KNOWN_GROUPS
    arch: str = "transformer"
    seeds: tuple[int, ...] = (1, 2, 3)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    stabilized_fraction: float = 0.5
    heldout_fraction: float = 0.05
    max_seq: int = 16
    out_dir: str = "runs/out"
    # desk-scale model shapes
    t_layers: int = 2
    t_dim: int = 64
    t_heads: int = 2
    t_ff: int = 256
    l_layers: int = 1
    l_embed: int = 64
    l_hidden: int = 128

    def validate(self) -> None:
        if self.corpus_source not in ("generated", "external"):
            raise ConfigError(f"unknown corpus_source: {self.corpus_source!r}")
        if self.corpus_source == "external" and not self.corpus_file:
            raise ConfigError("external corpus_source requires corpus_file")
        if self.arch not in ("transformer", "lstm"):
            raise ConfigError(f"unknown arch: {self.arch!r}")
        if not self.groups:
            raise ConfigError("at least one group is required")
        for g in self.groups:
            if g not in KNOWN_GROUPS:
                raise ConfigError(f"unknown group: {g!r} (known: {KNOWN_GROUPS})")
        if len(set(self.groups)) != len(self.groups):
            raise ConfigError("duplicate groups in spec")
        if len(self.groups) >= 2 and "natural" not in self.groups:
            raise ConfigError("statistical comparisons require the natural group")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not 0.0 <= self.stabilized_fraction < 1.0:
            raise ConfigError("stabilized_fraction must be in [0, 1)")
        if not 0.0 < self.heldout_fraction < 0.5:
            raise ConfigError("heldout_fraction must be in (0, 0.5)")
        try:
            self.training.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class GroupResult:
    group: str
    seeds: list[int]
    metrics_csv: list[str]
    final_loss: list[float]
    final_perplexity: list[float]
    min_perplexity: list[float]
    heldout_loss: list[float]
    heldout_perplexity: list[float]
    mean_stabilized_loss: float
    vocab_size: int


@dataclass
class LinearitySummary:
    ranking: list[str]  # ascending mean stabilized loss
    parity_below_reversed: bool | None


@dataclass
class RunReport:
    experiment: str
    arch: str
    groups: dict[str, GroupResult]
    comparisons: list[dict]
    linearity: LinearitySummary | None
    spec_echo: dict

    def to_json_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "arch": self.arch,
            "groups": {g: dataclasses.asdict(r) for g, r in self.groups.items()},
            "comparisons": self.comparisons,
            "linearity": dataclasses.asdict(self.linearity) if self.linearity else None,
            "spec": self.spec_echo,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunReport":
        groups = {g: GroupResult(**r) for g, r in data["groups"].items()}
        lin = LinearitySummary(**data["linearity"]) if data.get("linearity") else None
        return cls(data["experiment"], data["arch"], groups,
                   data["comparisons"], lin, data.get("spec", {}))


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_base_corpus(spec: ExperimentSpec) -> list[Sentence]:
    if spec.corpus_source == "generated":
        grammar = default_grammar()
        return generate_corpus(
            grammar, GenerationConfig(count=spec.corpus_count, seed=spec.corpus_seed)
        )
    path = Path(spec.corpus_file)
    if not path.is_file():
        raise InputError(f"corpus file not found: {path}")
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            text = normalize_line(raw)
            if text:
                sentences.append(Sentence(tuple(text.split(" "))))
    if not sentences:
        raise InputError(f"corpus file is empty: {path}")
    return sentences


def _split_indices(n: int, heldout_fraction: float, seed: int):
    rng = np.random.default_rng([seed, 0xC0FFEE])
    heldout = max(1, round(n * heldout_fraction))
    perm = rng.permutation(n)
    held = sorted(int(i) for i in perm[:heldout])
    train = sorted(int(i) for i in perm[heldout:])
    return train, held


def _model_config(spec: ExperimentSpec, vocab: int, seed: int):
    if spec.arch == "transformer":
        return models.TransformerConfig(
            layers=spec.t_layers, model_dim=spec.t_dim, heads=spec.t_heads,
            ff_dim=spec.t_ff, max_seq=spec.max_seq, vocab=vocab, seed=seed,
        )
    return models.LstmConfig(
        layers=spec.l_layers, hidden_dim=spec.l_hidden, embed_dim=spec.l_embed,
        vocab=vocab, seed=seed,
    )


def run_experiment(spec: ExperimentSpec) -> RunReport:
    """Execute the full pipeline for every (group, seed); returns the report."""
    spec.validate()
    out = Path(spec.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for sub in ("corpora", "vocab", "runs", "curves", "tables", "plots"):
            (out / sub).mkdir(exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc

    base = _load_base_corpus(spec)
    train_idx, held_idx = _split_indices(
        len(base), spec.heldout_fraction, spec.corpus_seed
    )

    group_results: dict[str, GroupResult] = {}
    all_series: dict[str, list[MetricSeries]] = {}

    for group in spec.groups:
        kind = GROUP_TRANSFORMS[group]
        train_sents = [apply_transform(kind, base[i]) for i in train_idx]
        held_sents = [apply_transform(kind, base[i]) for i in held_idx]
        corpusio.write_corpus(out / "corpora" / f"{group}.train.txt", train_sents)
        corpusio.write_corpus(out / "corpora" / f"{group}.heldout.txt", held_sents)

        vocab = tokenizer.build_vocabulary(train_sents)
        tokenizer.save_vocabulary(vocab, out / "vocab" / f"{group}.vocab")
        enc_train = [tokenizer.encode(vocab, s) for s in train_sents]
        enc_held = [tokenizer.encode(vocab, s) for s in held_sents]

        longest = max(e.length for e in enc_train + enc_held)
        if spec.arch == "transformer" and longest > spec.max_seq:
            raise ConfigError(
                f"encoded sentence length {longest} exceeds max_seq {spec.max_seq}; "
                f"raise max_seq or use packed grouping"
            )

        result = GroupResult(
            group=group, seeds=list(spec.seeds), metrics_csv=[],
            final_loss=[], final_perplexity=[], min_perplexity=[],
            heldout_loss=[], heldout_perplexity=[],
            mean_stabilized_loss=0.0, vocab_size=len(vocab),
        )
        series_list: list[MetricSeries] = []
        for seed in spec.seeds:
            run_dir = out / "runs" / group / f"seed{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            params = models.init_model(_model_config(spec, len(vocab), seed))
            cfg = dataclasses.replace(spec.training, seed=seed)
            _log(f"[langlab] training {spec.arch} group={group} seed={seed} "
                 f"steps={cfg.total_steps}")
            series, params = training.train(params, enc_train, cfg, group=group)
            csv_path = run_dir / "metrics.csv"
            series.to_csv(csv_path)
            models.save_checkpoint(params, run_dir / "model.ckpt")
            held_eval = training.evaluate_perplexity(params, enc_held,
                                                     cfg.batch_size)
            series_list.append(series)
            result.metrics_csv.append(str(csv_path.relative_to(out)))
            result.final_loss.append(series.records[-1].loss)
            result.final_perplexity.append(series.records[-1].perplexity)
            result.min_perplexity.append(min(r.perplexity for r in series.records))
            result.heldout_loss.append(held_eval.loss)
            result.heldout_perplexity.append(held_eval.perplexity)

        window = [v for s in series_list
                  for v in stats.stabilized_window(s, spec.stabilized_fraction)]
        result.mean_stabilized_loss = sum(window) / len(window)
        group_results[group] = result
        all_series[group] = series_list

    comparisons: list[dict] = []
    impossible = [g for g in spec.groups if g != "natural"]
    if "natural" in spec.groups and impossible:
        for group in impossible:
            for metric in ("loss", "perplexity"):
                nat = [v for s in all_series["natural"]
                       for v in stats.stabilized_window(
                           s, spec.stabilized_fraction, metric)]
                other = [v for s in all_series[group]
                         for v in stats.stabilized_window(
                             s, spec.stabilized_fraction, metric)]
                res = stats.welch_t_test(nat, other)
                record = res.to_record(f"natural vs {group} [{metric}]")
                record["indicator"] = metric
                comparisons.append(record)

    report = RunReport(
        experiment=spec.experiment,
        arch=spec.arch,
        groups=group_results,
        comparisons=comparisons,
        linearity=None,
        spec_echo=_spec_echo(spec),
    )
    if len(impossible) >= 2:
        report.linearity = linearity_gradient_summary(report)

    _write_curves(out, all_series, spec)
    _write_tables(out, report)
    _write_plots(out, all_series, report)
    emit_report(report, out, "json")
    emit_report(report, out, "text")
    return report


def _spec_echo(spec: ExperimentSpec) -> dict:
    echo = dataclasses.asdict(spec)
    echo["groups"] = list(spec.groups)
    echo["seeds"] = list(spec.seeds)
    return echo


def linearity_gradient_summary(report: RunReport) -> LinearitySummary:
    """Groups ordered by mean stabilized loss; flags whether the
    parity-negation group sits below the reversed group.  Diagnostic only."""
    impossible = [g for g in report.groups if g != "natural"]
    if len(impossible) < 2:
        raise ValueError("linearity summary needs at least 2 impossible groups")
    ranking = sorted(
        report.groups,
        key=lambda g: (report.groups[g].mean_stabilized_loss, g),
    )
    flag = None
    if "parity-negation" in report.groups and "reversed" in report.groups:
        flag = (report.groups["parity-negation"].mean_stabilized_loss
                < report.groups["reversed"].mean_stabilized_loss)
    return LinearitySummary(ranking=ranking, parity_below_reversed=flag)


def _write_curves(out: Path, all_series: dict[str, list[MetricSeries]],
                  spec: ExperimentSpec) -> None:
    for group, series_list in all_series.items():
        for metric in ("loss", "perplexity"):
            for tag, limit in (("overall", None), ("first50", 50)):
                path = out / "curves" / f"{group}.{metric}.{tag}.csv"
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write("step," + ",".join(
                        f"seed{s.seed}" for s in series_list) + "\n")
                    steps = [r.step for r in series_list[0].records]
                    for row_i, step in enumerate(steps):
                        if limit is not None and step > limit:
                            break
                        vals = ",".join(
                            f"{getattr(s.records[row_i], metric):.17g}"
                            for s in series_list
                        )
                        fh.write(f"{step},{vals}\n")


def _write_tables(out: Path, report: RunReport) -> None:
    path = out / "tables" / "final_min_perplexity.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("group,seed,final_perplexity,min_perplexity,"
                 "heldout_loss,heldout_perplexity\n")
        for group, r in report.groups.items():
            for i, seed in enumerate(r.seeds):
                fh.write(
                    f"{group},{seed},{r.final_perplexity[i]:.17g},"
                    f"{r.min_perplexity[i]:.17g},{r.heldout_loss[i]:.17g},"
                    f"{r.heldout_perplexity[i]:.17g}\n"
                )


def _mean_curve(series_list: list[MetricSeries], metric: str,
                limit: int | None = None):
    steps = [r.step for r in series_list[0].records]
    xs, ys = [], []
    for i, step in enumerate(steps):
        if limit is not None and step > limit:
            break
        xs.append(step)
        ys.append(sum(getattr(s.records[i], metric) for s in series_list)
                  / len(series_list))
    return xs, ys


def _write_plots(out: Path, all_series: dict[str, list[MetricSeries]],
                 report: RunReport) -> None:
    for metric in ("loss", "perplexity"):
        plots.line_chart(
            out / "plots" / f"{metric}_overall.svg",
            {g: _mean_curve(sl, metric) for g, sl in all_series.items()},
            f"Training {metric} (mean over seeds)", "step", metric,
        )
        plots.line_chart(
            out / "plots" / f"{metric}_first50.svg",
            {g: _mean_curve(sl, metric, limit=50) for g, sl in all_series.items()},
            f"Training {metric}, first 50 steps", "step", metric,
        )
    groups = list(report.groups)
    plots.bar_chart(
        out / "plots" / "final_min_perplexity.svg",
        groups,
        {
            "final": [sum(report.groups[g].final_perplexity)
                      / len(report.groups[g].final_perplexity) for g in groups],
            "minimum": [sum(report.groups[g].min_perplexity)
                        / len(report.groups[g].min_perplexity) for g in groups],
        },
        "Final and minimum perplexity (mean over seeds)",
        "perplexity",
    )


def render_text_report(report: RunReport) -> str:
    lines = [f"Experiment {report.experiment} ({report.arch})", ""]
    lines.append("Per-group summary (mean over seeds):")
    lines.append(f"  {'group':<18}{'final ppl':>12}{'min ppl':>12}"
                 f"{'heldout ppl':>14}")
    for group, r in report.groups.items():
        n = len(r.seeds)
        lines.append(
            f"  {group:<18}{sum(r.final_perplexity) / n:>12.3f}"
            f"{sum(r.min_perplexity) / n:>12.3f}"
            f"{sum(r.heldout_perplexity) / n:>14.3f}"
        )
    if report.comparisons:
        lines.append("")
        lines.append("Welch's t-test on stabilized-window samples (natural first):")
        for rec in report.comparisons:
            lines.append(
                f"  {rec['comparison']}: {stats.format_p(rec['p'])}, "
                f"t({rec['df']:.1f})={rec['t']:.2f}, "
                f"Cohen's d={rec['d']:.2f}"
            )
    if report.linearity is not None:
        lines.append("")
        lines.append("Linearity-gradient diagnostic (ascending mean stabilized loss):")
        lines.append("  ranking: " + " < ".join(report.linearity.ranking))
        if report.linearity.parity_below_reversed is not None:
            lines.append(
                f"  parity-negation below reversed: "
                f"{report.linearity.parity_below_reversed}"
            )
    lines.append("")
    return "\n".join(lines)


def emit_report(report: RunReport, out_dir: str | Path, fmt: str = "json") -> Path:
    """Write report.json or report.txt under out_dir; returns the path."""
    out = Path(out_dir)
    if fmt == "json":
        path = out / "report.json"
        path.write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    elif fmt == "text":
        path = out / "report.txt"
        path.write_text(render_text_report(report), encoding="utf-8")
    else:
        raise ConfigError(f"unknown report format: {fmt!r}")
    return path


def load_report(run_dir: str | Path) -> RunReport:
    path = Path(run_dir) / "report.json"
    if not path.is_file():
        raise InputError(f"no report.json under {run_dir}")
    return RunReport.from_json_dict(json.loads(path.read_text(encoding="utf-8")))


# ------------------------------------------------------------- spec file I/O
#
# Declarative key = value format, one per line, '#' comments.  Lists are
# comma-separated.  Keys mirror ExperimentSpec plus the TrainingConfig fields
# total_steps, warmup_fraction, peak_lr, batch_size, eval_every, seq_grouping.

_SPEC_INT = {"corpus_count", "corpus_seed", "max_seq",
             "t_layers", "t_dim", "t_heads", "t_ff",
             "l_layers", "l_embed", "l_hidden"}
_SPEC_FLOAT = {"stabilized_fraction", "heldout_fraction"}
_SPEC_STR = {"experiment", "corpus_source", "corpus_file", "arch", "out_dir"}
_TRAIN_INT = {"total_steps", "batch_size", "eval_every"}
_TRAIN_FLOAT = {"warmup_fraction", "peak_lr", "beta1", "beta2", "eps"}
_TRAIN_STR = {"seq_grouping"}


def parse_spec_file(path: str | Path, overrides: dict | None = None) -> ExperimentSpec:
    """Build an ExperimentSpec from a key=value file plus override mapping."""
    if not Path(path).is_file():
        raise InputError(f"spec file not found: {path}")
    pairs: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        pairs[key] = value
    if overrides:
        pairs.update({k: str(v) for k, v in overrides.items() if v is not None})
    return build_spec(pairs)


def build_spec(pairs: dict[str, str]) -> ExperimentSpec:
    spec_kwargs: dict = {}
    train_kwargs: dict = {}
    for key, value in pairs.items():
        if key in _SPEC_INT:
            spec_kwargs[key] = _parse_typed(key, value, int)
        elif key in _SPEC_FLOAT:
            spec_kwargs[key] = _parse_typed(key, value, float)
        elif key in _SPEC_STR:
            spec_kwargs[key] = value
        elif key == "groups":
            spec_kwargs[key] = tuple(g.strip() for g in value.split(",") if g.strip())
        elif key == "seeds":
            spec_kwargs[key] = tuple(
                _parse_typed(key, s.strip(), int) for s in value.split(",") if s.strip()
            )
        elif key in _TRAIN_INT:
            train_kwargs[key] = _parse_typed(key, value, int)
        elif key in _TRAIN_FLOAT:
            train_kwargs[key] = _parse_typed(key, value, float)
        elif key in _TRAIN_STR:
            train_kwargs[key] = value
        else:
            raise ConfigError(f"unknown spec key: {key!r}")
    experiment = spec_kwargs.get("experiment", "custom")
    if experiment in EXPERIMENT_PRESETS:
        source, arch = EXPERIMENT_PRESETS[experiment]
        spec_kwargs.setdefault("corpus_source", source)
        spec_kwargs.setdefault("arch", arch)
    spec = ExperimentSpec(training=TrainingConfig(**train_kwargs), **spec_kwargs)
    spec.validate()
    return spec


def _parse_typed(key: str, value: str, typ):
    try:
        return typ(value)
    except ValueError as exc:
        raise ConfigError(f"spec key {key!r}: cannot parse {value!r}") from exc
