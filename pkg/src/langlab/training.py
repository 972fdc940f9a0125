"""Training loop with linear warmup/decay schedule, Adam, and metric logging.

Each logged record carries the pre-update batch loss at that optimizer step,
the perplexity computed as exp of that same loss value, and the learning rate
used.  Runs are a pure function of (parameters, corpus, config): a fixed seed
reproduces the metric series byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import models
from .numcore import Tape
from .tokenizer import PAD_ID, EncodedSequence

__all__ = [
    "TrainingConfig",
    "MetricRecord",
    "MetricSeries",
    "EvalResult",
    "lr_schedule",
    "AdamOptimizer",
    "train",
    "evaluate_perplexity",
]


@dataclass(frozen=True)
class TrainingConfig:
    total_steps: int = 120
    warmup_fraction: float = 0.14
    peak_lr: float = 3e-3
    batch_size: int = 64
    seq_grouping: str = "per-sentence"  # or "pack"
    eval_every: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ValueError(
                f"warmup_fraction must be in (0, 1), got {self.warmup_fraction}"
            )
        if self.peak_lr <= 0 or self.batch_size < 1 or self.eval_every < 1:
            raise ValueError("peak_lr, batch_size, eval_every must be positive")
        if self.seq_grouping not in ("per-sentence", "pack"):
            raise ValueError(f"unknown seq_grouping: {self.seq_grouping!r}")


@dataclass(frozen=True)
class MetricRecord:
    step: int
    loss: float
    perplexity: float
    lr: float


@dataclass
class MetricSeries:
    group: str = ""
    arch: str = ""
    seed: int = 0
    records: list[MetricRecord] = field(default_factory=list)

    CSV_HEADER = "step,loss,perplexity,lr,group,arch,seed"

    def append(self, step: int, loss: float, lr: float) -> None:
        if self.records and step <= self.records[-1].step:
            raise ValueError("steps must be strictly increasing")
        self.records.append(MetricRecord(step, loss, math.exp(loss), lr))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for r in self.records:
                fh.write(
                    f"{r.step},{r.loss:.17g},{r.perplexity:.17g},{r.lr:.17g},"
                    f"{self.group},{self.arch},{self.seed}\n"
                )

    @classmethod
    def from_csv(cls, path: str | Path) -> "MetricSeries":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != cls.CSV_HEADER:
            raise ValueError(f"{path}: unexpected metrics CSV header")
        series = cls()
        for line in lines[1:]:
            step, loss, ppl, lr, group, arch, seed = line.split(",")
            series.group, series.arch, series.seed = group, arch, int(seed)
            series.records.append(
                MetricRecord(int(step), float(loss), float(ppl), float(lr))
            )
        return series


@dataclass(frozen=True)
class EvalResult:
    loss: float
    perplexity: float
    tokens: int


def lr_schedule(step: int, config: TrainingConfig) -> float:
    """Linear ramp to peak_lr at ceil(warmup_fraction * total), then linear
    decay to zero at total_steps."""
    total = config.total_steps
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside 0..{total}")
    # the 1e-9 nudge keeps exact-integer products (0.14 * 200) from being
    # pushed to the next step by float rounding
    warmup_end = max(1, math.ceil(config.warmup_fraction * total - 1e-9))
    if step <= warmup_end:
        return config.peak_lr * step / warmup_end
    return config.peak_lr * (total - step) / (total - warmup_end)


class AdamOptimizer:
    """Adam with bias correction and no weight decay."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: models.ModelParameters,
             grads: dict[str, np.ndarray], step_num: int, lr: float) -> None:
        if step_num < 1:
            raise ValueError(f"step must be >= 1, got {step_num}")
        b1, b2 = self.beta1, self.beta2
        for name, tensor in params.tensors.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(tensor.data)
            elif g.shape != tensor.data.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"{name} shape {tensor.data.shape}"
                )
            m = self._m.get(name)
            if m is None:
                m = np.zeros_like(tensor.data)
                self._v[name] = np.zeros_like(tensor.data)
            v = self._v[name]
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            self._m[name], self._v[name] = m, v
            m_hat = m / (1 - b1 ** step_num)
            v_hat = v / (1 - b2 ** step_num)
            # assignment (not in-place) so tensors referenced by old tapes
            # keep their values
            tensor.data = tensor.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _pad_batch(seqs: Sequence[tuple[int, ...]]) -> np.ndarray:
    width = max(len(s) for s in seqs)
    arr = np.full((len(seqs), width), PAD_ID, dtype=np.int64)
    for i, s in enumerate(seqs):
        arr[i, : len(s)] = s
    return arr


def _pack_windows(corpus: Sequence[EncodedSequence], window: int) -> np.ndarray:
    stream: list[int] = []
    for e in corpus:
        stream.extend(e.ids)
    n_windows = (len(stream) - 1) // window
    if n_windows == 0:
        raise ValueError("corpus too small for packed windows; use per-sentence")
    arr = np.asarray(stream[: n_windows * window + 1], dtype=np.int64)
    return np.stack([arr[i * window : i * window + window + 1]
                     for i in range(n_windows)])


def _check_vocab(params: models.ModelParameters,
                 corpus: Sequence[EncodedSequence]) -> None:
    top = max(max(e.ids) for e in corpus)
    if top >= params.config.vocab:
        raise ValueError(
            f"vocab mismatch: corpus id {top} >= model vocab {params.config.vocab}"
        )


def train(
    params: models.ModelParameters,
    corpus: Sequence[EncodedSequence],
    config: TrainingConfig,
    group: str = "",
) -> tuple[MetricSeries, models.ModelParameters]:
    """Run config.total_steps Adam steps over seeded shuffled batches."""
    config.validate()
    if not corpus:
        raise ValueError("empty corpus")
    _check_vocab(params, corpus)

    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(config.beta1, config.beta2, config.eps)
    series = MetricSeries(group=group, arch=params.arch, seed=config.seed)

    packed = None
    if config.seq_grouping == "pack":
        packed = _pack_windows(corpus, params.config.max_seq
                               if hasattr(params.config, "max_seq") else 64)
    n_items = len(packed) if packed is not None else len(corpus)

    def batches():
        while True:
            order = rng.permutation(n_items)
            for lo in range(0, n_items, config.batch_size):
                idx = order[lo : lo + config.batch_size]
                if packed is not None:
                    yield packed[idx]
                else:
                    yield _pad_batch([corpus[i].ids for i in idx])

    batch_iter = batches()
    for step in range(1, config.total_steps + 1):
        batch = next(batch_iter)
        tape = Tape()
        logits = models.forward(params, batch[:, :-1], tape)
        loss = tape.cross_entropy(logits, batch[:, 1:], ignore_id=PAD_ID)
        tape.backward(loss)
        grads = {name: t.grad for name, t in params.tensors.items()
                 if t.grad is not None}
        lr = lr_schedule(step, config)
        optimizer.step(params, grads, step, lr)
        if step % config.eval_every == 0:
            series.append(step, float(loss.data), lr)
    return series, params


def evaluate_perplexity(
    params: models.ModelParameters,
    corpus: Sequence[EncodedSequence],
    batch_size: int = 64,
) -> EvalResult:
    """exp of the mean cross-entropy over all non-PAD target tokens."""
    if not corpus:
        raise ValueError("empty evaluation set")
    _check_vocab(params, corpus)
    total_nll = 0.0
    total_tokens = 0
    for lo in range(0, len(corpus), batch_size):
        batch = _pad_batch([e.ids for e in corpus[lo : lo + batch_size]])
        targets = batch[:, 1:]
        tape = Tape(record=False)
        logits = models.forward(params, batch[:, :-1], tape)
        loss = tape.cross_entropy(logits, targets, ignore_id=PAD_ID)
        n = int((targets != PAD_ID).sum())
        total_nll += float(loss.data) * n
        total_tokens += n
    mean = total_nll / total_tokens
    return EvalResult(mean, math.exp(mean), total_tokens)
