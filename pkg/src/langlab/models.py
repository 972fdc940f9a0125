"""Miniature decoder-only transformer and LSTM language models.

Both forwards map a batch of token ids [batch, positions] to next-token
logits [batch, positions, vocab] and are causal: position i only sees tokens
at positions <= i.  The transformer uses learned positional embeddings,
pre-layer-norm blocks, masked multi-head attention, a gelu feed-forward, and
ties the output projection to the token embedding.  The LSTM is a standard
stacked recurrence with gate order (input, forget, cell, output) and an
untied output projection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .numcore import Tape, Tensor

__all__ = [
    "TransformerConfig",
    "LstmConfig",
    "ModelParameters",
    "init_model",
    "forward",
    "transformer_forward",
    "lstm_forward",
    "parameter_count",
    "save_checkpoint",
    "load_checkpoint",
]

MASK_FILL = -1e9  # finite, exp(masked - max) underflows to exactly 0.0


@dataclass(frozen=True)
class TransformerConfig:
    layers: int = 2
    model_dim: int = 64
    heads: int = 2
    ff_dim: int = 256
    max_seq: int = 16
    vocab: int = 128
    seed: int = 0
    dropout: float = 0.0

    def validate(self) -> None:
        if min(self.layers, self.model_dim, self.heads, self.ff_dim,
               self.max_seq, self.vocab) < 1:
            raise ValueError(f"all transformer dims must be positive: {self}")
        if self.model_dim % self.heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )


@dataclass(frozen=True)
class LstmConfig:
    layers: int = 1
    hidden_dim: int = 128
    embed_dim: int = 64
    vocab: int = 128
    seed: int = 0
    dropout: float = 0.0

    def validate(self) -> None:
        if min(self.layers, self.hidden_dim, self.embed_dim, self.vocab) < 1:
            raise ValueError(f"all LSTM dims must be positive: {self}")


@dataclass
class ModelParameters:
    arch: str  # "transformer" | "lstm"
    config: TransformerConfig | LstmConfig
    tensors: dict[str, Tensor]

    def named(self) -> dict[str, Tensor]:
        return self.tensors


def parameter_count(params: ModelParameters) -> int:
    return sum(t.data.size for t in params.tensors.values())


def _init_transformer(cfg: TransformerConfig) -> ModelParameters:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    p: dict[str, Tensor] = {}

    def normal(shape):
        return Tensor(rng.normal(0.0, 0.02, shape), requires_grad=True)

    def zeros(shape):
        return Tensor(np.zeros(shape), requires_grad=True)

    def ones(shape):
        return Tensor(np.ones(shape), requires_grad=True)

    d, f = cfg.model_dim, cfg.ff_dim
    p["tok_emb"] = normal((cfg.vocab, d))
    p["pos_emb"] = normal((cfg.max_seq, d))
    for i in range(cfg.layers):
        pre = f"l{i}."
        p[pre + "ln1.g"] = ones((d,))
        p[pre + "ln1.b"] = zeros((d,))
        for name in ("wq", "wk", "wv", "wo"):
            p[pre + "attn." + name] = normal((d, d))
        for name in ("bq", "bk", "bv", "bo"):
            p[pre + "attn." + name] = zeros((d,))
        p[pre + "ln2.g"] = ones((d,))
        p[pre + "ln2.b"] = zeros((d,))
        p[pre + "ff.w1"] = normal((d, f))
        p[pre + "ff.b1"] = zeros((f,))
        p[pre + "ff.w2"] = normal((f, d))
        p[pre + "ff.b2"] = zeros((d,))
    p["ln_f.g"] = ones((d,))
    p["ln_f.b"] = zeros((d,))
    return ModelParameters("transformer", cfg, p)


def _init_lstm(cfg: LstmConfig) -> ModelParameters:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    h = cfg.hidden_dim
    bound = 1.0 / np.sqrt(h)

    def uniform(shape):
        return Tensor(rng.uniform(-bound, bound, shape), requires_grad=True)

    p: dict[str, Tensor] = {"embed": uniform((cfg.vocab, cfg.embed_dim))}
    in_dim = cfg.embed_dim
    for i in range(cfg.layers):
        p[f"l{i}.wx"] = uniform((in_dim, 4 * h))
        p[f"l{i}.wh"] = uniform((h, 4 * h))
        bias = np.zeros(4 * h)
        bias[h:2 * h] = 1.0  # forget gate starts open
        p[f"l{i}.b"] = Tensor(bias, requires_grad=True)
        in_dim = h
    p["out.w"] = uniform((h, cfg.vocab))
    p["out.b"] = Tensor(np.zeros(cfg.vocab), requires_grad=True)
    return ModelParameters("lstm", cfg, p)


def init_model(config: TransformerConfig | LstmConfig) -> ModelParameters:
    """Seed-deterministic parameter initialization for either family."""
    if isinstance(config, TransformerConfig):
        return _init_transformer(config)
    if isinstance(config, LstmConfig):
        return _init_lstm(config)
    raise TypeError(f"unsupported config type: {type(config).__name__}")


def _dropout(tape: Tape, x: Tensor, p_drop: float,
             rng: np.random.Generator | None) -> Tensor:
    if p_drop <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= p_drop) / (1.0 - p_drop)
    return tape.mul(x, Tensor(keep))


def transformer_forward(params: ModelParameters, ids: np.ndarray, tape: Tape,
                        dropout_rng: np.random.Generator | None = None) -> Tensor:
    """Logits [batch, positions, vocab] under causal masked attention."""
    cfg: TransformerConfig = params.config
    p = params.tensors
    ids = np.asarray(ids, dtype=np.int64)
    batch, seq = ids.shape
    if seq > cfg.max_seq:
        raise ValueError(f"sequence length {seq} exceeds max_seq {cfg.max_seq}")
    d, heads = cfg.model_dim, cfg.heads
    dh = d // heads

    x = tape.embedding_lookup(p["tok_emb"], ids)
    pos = tape.slice_axis(p["pos_emb"], 0, 0, seq)
    x = tape.add_bias(x, pos)
    x = _dropout(tape, x, cfg.dropout, dropout_rng)

    causal = np.where(np.tril(np.ones((seq, seq), dtype=bool)), 0.0, MASK_FILL)
    mask = Tensor(np.broadcast_to(causal, (batch, seq, seq)).copy())

    def linear(t2d, w, b):
        return tape.add_bias(tape.matmul(t2d, p[w]), p[b])

    for i in range(cfg.layers):
        pre = f"l{i}."
        h = tape.layer_norm(x, p[pre + "ln1.g"], p[pre + "ln1.b"])
        h2 = tape.reshape(h, (batch * seq, d))
        q = tape.reshape(linear(h2, pre + "attn.wq", pre + "attn.bq"), (batch, seq, d))
        k = tape.reshape(linear(h2, pre + "attn.wk", pre + "attn.bk"), (batch, seq, d))
        v = tape.reshape(linear(h2, pre + "attn.wv", pre + "attn.bv"), (batch, seq, d))
        head_outs = []
        for hd in range(heads):
            lo, hi = hd * dh, (hd + 1) * dh
            qh = tape.slice_axis(q, 2, lo, hi)
            kh = tape.slice_axis(k, 2, lo, hi)
            vh = tape.slice_axis(v, 2, lo, hi)
            scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), 1.0 / np.sqrt(dh))
            attn = tape.softmax(tape.add(scores, mask))
            head_outs.append(tape.matmul(attn, vh))
        merged = tape.concat(head_outs, axis=2)
        merged2 = tape.reshape(merged, (batch * seq, d))
        proj = tape.reshape(linear(merged2, pre + "attn.wo", pre + "attn.bo"),
                            (batch, seq, d))
        proj = _dropout(tape, proj, cfg.dropout, dropout_rng)
        x = tape.add(x, proj)

        h = tape.layer_norm(x, p[pre + "ln2.g"], p[pre + "ln2.b"])
        h2 = tape.reshape(h, (batch * seq, d))
        ff = tape.gelu(linear(h2, pre + "ff.w1", pre + "ff.b1"))
        ff = tape.add_bias(tape.matmul(ff, p[pre + "ff.w2"]), p[pre + "ff.b2"])
        ff = tape.reshape(ff, (batch, seq, d))
        ff = _dropout(tape, ff, cfg.dropout, dropout_rng)
        x = tape.add(x, ff)

    x = tape.layer_norm(x, p["ln_f.g"], p["ln_f.b"])
    flat = tape.reshape(x, (batch * seq, d))
    logits = tape.matmul(flat, tape.transpose(p["tok_emb"]))  # tied projection
    return tape.reshape(logits, (batch, seq, cfg.vocab))


def lstm_forward(params: ModelParameters, ids: np.ndarray, tape: Tape,
                 dropout_rng: np.random.Generator | None = None) -> Tensor:
    """Logits [batch, positions, vocab] from the stacked LSTM recurrence."""
    cfg: LstmConfig = params.config
    p = params.tensors
    ids = np.asarray(ids, dtype=np.int64)
    batch, seq = ids.shape
    h = cfg.hidden_dim

    emb = tape.embedding_lookup(p["embed"], ids)
    hidden = [Tensor(np.zeros((batch, h))) for _ in range(cfg.layers)]
    cell = [Tensor(np.zeros((batch, h))) for _ in range(cfg.layers)]
    step_logits = []
    for t in range(seq):
        x = tape.reshape(tape.slice_axis(emb, 1, t, t + 1), (batch, cfg.embed_dim))
        for i in range(cfg.layers):
            x = _dropout(tape, x, cfg.dropout, dropout_rng)
            z = tape.add_bias(
                tape.add(tape.matmul(x, p[f"l{i}.wx"]),
                         tape.matmul(hidden[i], p[f"l{i}.wh"])),
                p[f"l{i}.b"],
            )
            gi = tape.sigmoid(tape.slice_axis(z, 1, 0, h))
            gf = tape.sigmoid(tape.slice_axis(z, 1, h, 2 * h))
            gg = tape.tanh(tape.slice_axis(z, 1, 2 * h, 3 * h))
            go = tape.sigmoid(tape.slice_axis(z, 1, 3 * h, 4 * h))
            cell[i] = tape.add(tape.mul(gf, cell[i]), tape.mul(gi, gg))
            hidden[i] = tape.mul(go, tape.tanh(cell[i]))
            x = hidden[i]
        out = tape.add_bias(tape.matmul(x, p["out.w"]), p["out.b"])
        step_logits.append(tape.reshape(out, (batch, 1, cfg.vocab)))
    return tape.concat(step_logits, axis=1)


def forward(params: ModelParameters, ids: np.ndarray, tape: Tape,
            dropout_rng: np.random.Generator | None = None) -> Tensor:
    if params.arch == "transformer":
        return transformer_forward(params, ids, tape, dropout_rng)
    if params.arch == "lstm":
        return lstm_forward(params, ids, tape, dropout_rng)
    raise ValueError(f"unknown architecture tag: {params.arch!r}")


# ------------------------------------------------------------------ checkpoint
#
# Binary layout, all little-endian:
#   u32 tag_len, tag bytes (architecture)
#   u32 n_config; per entry: u32 key_len, key, u32 val_len, val (both utf-8)
#   u32 n_tensors; per tensor: u32 name_len, name, u32 rank, u64 dims...,
#   float64 values in row-major order.

_CONFIG_TYPES = {"transformer": TransformerConfig, "lstm": LstmConfig}


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def save_checkpoint(params: ModelParameters, path: str | Path) -> None:
    out = [_pack_str(params.arch)]
    cfg_items = [(f.name, repr(getattr(params.config, f.name)))
                 for f in fields(params.config)]
    out.append(struct.pack("<I", len(cfg_items)))
    for key, val in cfg_items:
        out.append(_pack_str(key))
        out.append(_pack_str(val))
    out.append(struct.pack("<I", len(params.tensors)))
    for name, t in params.tensors.items():
        out.append(_pack_str(name))
        out.append(struct.pack("<I", t.data.ndim))
        out.append(struct.pack(f"<{t.data.ndim}Q", *t.data.shape))
        out.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(out))


def load_checkpoint(path: str | Path) -> ModelParameters:
    blob = Path(path).read_bytes()
    pos = 0

    def read_u32():
        nonlocal pos
        (v,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        return v

    def read_str():
        nonlocal pos
        n = read_u32()
        s = blob[pos:pos + n].decode("utf-8")
        pos += n
        return s

    arch = read_str()
    if arch not in _CONFIG_TYPES:
        raise ValueError(f"unknown architecture tag in checkpoint: {arch!r}")
    cfg_cls = _CONFIG_TYPES[arch]
    raw = {}
    for _ in range(read_u32()):
        key = read_str()
        raw[key] = read_str()
    kwargs = {}
    for f in fields(cfg_cls):
        if f.name in raw:
            kwargs[f.name] = _convert(raw[f.name], f.type)
    config = cfg_cls(**kwargs)
    tensors: dict[str, Tensor] = {}
    for _ in range(read_u32()):
        name = read_str()
        rank = read_u32()
        dims = struct.unpack_from(f"<{rank}Q", blob, pos)
        pos += 8 * rank
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).reshape(dims)
        pos += 8 * count
        tensors[name] = Tensor(data.copy(), requires_grad=True)
    return ModelParameters(arch, config, tensors)


def _convert(value: str, annotation) -> object:
    text = str(annotation)
    if "int" in text:
        return int(value)
    if "float" in text:
        return float(value)
    return value
