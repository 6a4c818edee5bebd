"""Transformer encoder-decoder in numpy: forward, loss, exact gradients,
greedy decoding, and a binary checkpoint format.

The architecture is the standard multi-head attention stack with
sinusoidal positions and pre-norm residual blocks. Backpropagation is
written out by hand against cached activations, so gradients are exact
and verifiable against finite differences in double precision. A
checkpoint is immutable during forward/decode and may be shared across
threads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

UNK_ID, BOS_ID, EOS_ID, PAD_ID = 0, 1, 2, 3

_LN_EPS = 1e-5
_NEG_INF = -1e9

_MAGIC = b"TGMTCKPT"
_CKPT_VERSION = 1


class ShapeMismatch(Exception):
    pass


class PositionOverflow(Exception):
    pass


@dataclass(frozen=True)
class ModelConfig:
    layers: int
    heads: int
    d_model: int
    d_ff: int
    src_vocab: int
    tgt_vocab: int
    dropout: float = 0.1
    label_smoothing: float = 0.1
    max_position: int = 512

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError("d_model must be divisible by heads")
        for name in ("layers", "heads", "d_model", "d_ff", "src_vocab", "tgt_vocab"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not (0.0 <= self.dropout < 1.0 and 0.0 <= self.label_smoothing < 1.0):
            raise ValueError("dropout and label_smoothing must be in [0, 1)")

    @classmethod
    def paper_scale(cls, src_vocab: int, tgt_vocab: int, **kw) -> "ModelConfig":
        """6 layers, 8 heads, width 512: the full-size configuration."""
        kw.setdefault("d_ff", 2048)
        return cls(layers=6, heads=8, d_model=512,
                   src_vocab=src_vocab, tgt_vocab=tgt_vocab, **kw)

    @classmethod
    def desk_scale(cls, src_vocab: int, tgt_vocab: int, **kw) -> "ModelConfig":
        """Small configuration for CPU experiments and tests."""
        return cls(layers=2, heads=2, d_model=64, d_ff=256,
                   src_vocab=src_vocab, tgt_vocab=tgt_vocab, **kw)


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    opt_m: dict[str, np.ndarray]
    opt_v: dict[str, np.ndarray]
    step: int
    src_vocab: list[str]
    tgt_vocab: list[str]

    def __post_init__(self):
        if len(self.src_vocab) != self.config.src_vocab:
            raise ShapeMismatch("source vocabulary length != embedding rows")
        if len(self.tgt_vocab) != self.config.tgt_vocab:
            raise ShapeMismatch("target vocabulary length != embedding rows")


@dataclass
class Batch:
    """Padded id matrices plus masks (True marks a real token)."""

    src: np.ndarray        # [B, S] source ids, EOS-terminated
    tgt_in: np.ndarray     # [B, T] decoder input, BOS-prefixed
    tgt_out: np.ndarray    # [B, T] decoder targets, EOS-terminated
    src_mask: np.ndarray   # [B, S] bool
    tgt_mask: np.ndarray   # [B, T] bool, real tgt_out positions

    @property
    def size(self) -> int:
        return self.src.shape[0]


def make_batch(pairs: list[tuple[list[int], list[int]]]) -> Batch:
    """Pad id pairs into one batch, adding BOS/EOS framing."""
    if not pairs:
        raise ShapeMismatch("empty batch")
    s_len = max(len(s) for s, _ in pairs) + 1
    t_len = max(len(t) for _, t in pairs) + 1
    n = len(pairs)
    src = np.full((n, s_len), PAD_ID, dtype=np.int64)
    tgt_in = np.full((n, t_len), PAD_ID, dtype=np.int64)
    tgt_out = np.full((n, t_len), PAD_ID, dtype=np.int64)
    for i, (s, t) in enumerate(pairs):
        src[i, : len(s)] = s
        src[i, len(s)] = EOS_ID
        tgt_in[i, 0] = BOS_ID
        tgt_in[i, 1 : len(t) + 1] = t
        tgt_out[i, : len(t)] = t
        tgt_out[i, len(t)] = EOS_ID
    return Batch(
        src=src,
        tgt_in=tgt_in,
        tgt_out=tgt_out,
        src_mask=src != PAD_ID,
        tgt_mask=tgt_out != PAD_ID,
    )


# ---------------------------------------------------------------------------
# initialization


def _param_names(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    d, f = cfg.d_model, cfg.d_ff
    names: list[tuple[str, tuple[int, ...]]] = [
        ("src_embed", (cfg.src_vocab, d)),
        ("tgt_embed", (cfg.tgt_vocab, d)),
    ]

    def attn(prefix: str):
        for w in ("wq", "wk", "wv", "wo"):
            names.append((f"{prefix}.{w}", (d, d)))
        for b in ("bq", "bk", "bv", "bo"):
            names.append((f"{prefix}.{b}", (d,)))

    def ln(prefix: str):
        names.append((f"{prefix}.g", (d,)))
        names.append((f"{prefix}.b", (d,)))

    def ffn(prefix: str):
        names.append((f"{prefix}.w1", (d, f)))
        names.append((f"{prefix}.b1", (f,)))
        names.append((f"{prefix}.w2", (f, d)))
        names.append((f"{prefix}.b2", (d,)))

    for i in range(cfg.layers):
        ln(f"enc{i}.ln1")
        attn(f"enc{i}.attn")
        ln(f"enc{i}.ln2")
        ffn(f"enc{i}.ffn")
    ln("enc.ln")
    for i in range(cfg.layers):
        ln(f"dec{i}.ln1")
        attn(f"dec{i}.self")
        ln(f"dec{i}.ln2")
        attn(f"dec{i}.cross")
        ln(f"dec{i}.ln3")
        ffn(f"dec{i}.ffn")
    ln("dec.ln")
    names.append(("out.w", (d, cfg.tgt_vocab)))
    names.append(("out.b", (cfg.tgt_vocab,)))
    return names


def init_checkpoint(
    config: ModelConfig,
    src_vocab: list[str],
    tgt_vocab: list[str],
    seed: int = 0,
    dtype=np.float32,
) -> Checkpoint:
    """Fresh checkpoint with fan-in-scaled uniform weights (seeded)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_names(config):
        base = name.rsplit(".", 1)[-1]
        if base == "g":
            arr = np.ones(shape)
        elif base.startswith("b"):
            arr = np.zeros(shape)
        else:
            fan_in = shape[0]
            bound = float(np.sqrt(3.0 / fan_in))
            arr = rng.uniform(-bound, bound, size=shape)
        params[name] = arr.astype(dtype)
    zeros = {name: np.zeros_like(p) for name, p in params.items()}
    return Checkpoint(
        config=config,
        params=params,
        opt_m=zeros,
        opt_v={name: np.zeros_like(p) for name, p in params.items()},
        step=0,
        src_vocab=list(src_vocab),
        tgt_vocab=list(tgt_vocab),
    )


def positional_encoding(length: int, d_model: int, dtype=np.float64) -> np.ndarray:
    pos = np.arange(length, dtype=np.float64)[:, None]
    dim = np.arange(0, d_model, 2, dtype=np.float64)
    angle = pos / np.power(10000.0, dim / d_model)
    pe = np.zeros((length, d_model), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe.astype(dtype)


# ---------------------------------------------------------------------------
# primitives (forward + backward against cached activations)


def _softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _linear_fwd(x, w, b):
    return x @ w + b, (x, w)


def _linear_bwd(dy, cache, grads, w_name, b_name):
    x, w = cache
    grads[w_name] += x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    grads[b_name] += dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dy @ w.T


def _ln_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def _ln_bwd(dy, cache, grads, g_name, b_name):
    xhat, inv, g = cache
    grads[g_name] += (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    grads[b_name] += dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * g
    mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
    mean_dxhat_xhat = (dxhat * xhat).mean(axis=-1, keepdims=True)
    return inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


def _dropout_fwd(x, p, train_mode, rng):
    if not train_mode or p <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return x * keep, keep


def _dropout_bwd(dy, keep):
    return dy if keep is None else dy * keep


def _split_heads(x, heads):
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _join_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _attn_fwd(params, prefix, x_q, x_kv, mask, heads):
    """mask: bool, broadcastable to [B, H, Tq, Tk]; True = attend."""
    q, qc = _linear_fwd(x_q, params[f"{prefix}.wq"], params[f"{prefix}.bq"])
    k, kc = _linear_fwd(x_kv, params[f"{prefix}.wk"], params[f"{prefix}.bk"])
    v, vc = _linear_fwd(x_kv, params[f"{prefix}.wv"], params[f"{prefix}.bv"])
    qh, kh, vh = _split_heads(q, heads), _split_heads(k, heads), _split_heads(v, heads)
    scale = 1.0 / np.sqrt(qh.shape[-1])
    raw = (qh @ kh.transpose(0, 1, 3, 2)) * scale
    scores = np.where(mask, raw, raw.dtype.type(_NEG_INF))
    attn = _softmax(scores, axis=-1)
    ctx = _join_heads(attn @ vh)
    out, oc = _linear_fwd(ctx, params[f"{prefix}.wo"], params[f"{prefix}.bo"])
    return out, (qc, kc, vc, oc, qh, kh, vh, attn, mask, scale, heads)


def _attn_bwd(dy, cache, grads, prefix):
    qc, kc, vc, oc, qh, kh, vh, attn, mask, scale, heads = cache
    dctx = _linear_bwd(dy, oc, grads, f"{prefix}.wo", f"{prefix}.bo")
    dctx_h = _split_heads(dctx, heads)
    dattn = dctx_h @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx_h
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores = np.where(mask, dscores, 0.0)
    dqh = (dscores @ kh) * scale
    dkh = (dscores.transpose(0, 1, 3, 2) @ qh) * scale
    dq, dk, dv = _join_heads(dqh), _join_heads(dkh), _join_heads(dvh)
    dx_q = _linear_bwd(dq, qc, grads, f"{prefix}.wq", f"{prefix}.bq")
    dx_kv = _linear_bwd(dk, kc, grads, f"{prefix}.wk", f"{prefix}.bk")
    dx_kv += _linear_bwd(dv, vc, grads, f"{prefix}.wv", f"{prefix}.bv")
    return dx_q, dx_kv


def _ffn_fwd(params, prefix, x):
    h, c1 = _linear_fwd(x, params[f"{prefix}.w1"], params[f"{prefix}.b1"])
    relu = np.maximum(h, 0.0)
    out, c2 = _linear_fwd(relu, params[f"{prefix}.w2"], params[f"{prefix}.b2"])
    return out, (c1, c2, h)


def _ffn_bwd(dy, cache, grads, prefix):
    c1, c2, h = cache
    drelu = _linear_bwd(dy, c2, grads, f"{prefix}.w2", f"{prefix}.b2")
    dh = drelu * (h > 0.0)
    return _linear_bwd(dh, c1, grads, f"{prefix}.w1", f"{prefix}.b1")


# ---------------------------------------------------------------------------
# forward / backward


def _validate_batch(cfg: ModelConfig, batch: Batch) -> None:
    if batch.src.shape != batch.src_mask.shape:
        raise ShapeMismatch("src/src_mask shape mismatch")
    if not (batch.tgt_in.shape == batch.tgt_out.shape == batch.tgt_mask.shape):
        raise ShapeMismatch("target matrices shape mismatch")
    if batch.src.shape[0] != batch.tgt_in.shape[0]:
        raise ShapeMismatch("source/target batch size mismatch")
    if batch.src.max() >= cfg.src_vocab or batch.src.min() < 0:
        raise ShapeMismatch("source id out of range")
    if max(batch.tgt_in.max(), batch.tgt_out.max()) >= cfg.tgt_vocab:
        raise ShapeMismatch("target id out of range")
    if batch.src.shape[1] > cfg.max_position or batch.tgt_in.shape[1] > cfg.max_position:
        raise PositionOverflow(
            f"sequence longer than max_position={cfg.max_position}"
        )


def _forward(ckpt: Checkpoint, batch: Batch, train_mode: bool, rng):
    cfg = ckpt.config
    _validate_batch(cfg, batch)
    p = ckpt.params
    dtype = p["src_embed"].dtype
    d = cfg.d_model
    scale = np.asarray(np.sqrt(d), dtype=dtype)
    B, S = batch.src.shape
    T = batch.tgt_in.shape[1]
    cache: dict = {"drops": []}

    def drop(x):
        y, keep = _dropout_fwd(x, cfg.dropout, train_mode, rng)
        cache["drops"].append(keep)
        return y

    pe = positional_encoding(max(S, T), d, dtype)

    # encoder
    x = p["src_embed"][batch.src] * scale + pe[:S]
    x = drop(x)
    src_key_mask = batch.src_mask[:, None, None, :]  # [B,1,1,S]
    enc_caches = []
    for i in range(cfg.layers):
        h, ln1 = _ln_fwd(x, p[f"enc{i}.ln1.g"], p[f"enc{i}.ln1.b"])
        a, attn_c = _attn_fwd(p, f"enc{i}.attn", h, h, src_key_mask, cfg.heads)
        x = x + drop(a)
        h2, ln2 = _ln_fwd(x, p[f"enc{i}.ln2.g"], p[f"enc{i}.ln2.b"])
        f, ffn_c = _ffn_fwd(p, f"enc{i}.ffn", h2)
        x = x + drop(f)
        enc_caches.append((ln1, attn_c, ln2, ffn_c))
    memory, enc_ln = _ln_fwd(x, p["enc.ln.g"], p["enc.ln.b"])

    # decoder
    causal = np.tril(np.ones((T, T), dtype=bool))[None, None, :, :]
    tgt_key_mask = (batch.tgt_in != PAD_ID)[:, None, None, :]
    self_mask = causal & tgt_key_mask
    y = p["tgt_embed"][batch.tgt_in] * scale + pe[:T]
    y = drop(y)
    dec_caches = []
    for i in range(cfg.layers):
        h, ln1 = _ln_fwd(y, p[f"dec{i}.ln1.g"], p[f"dec{i}.ln1.b"])
        a, self_c = _attn_fwd(p, f"dec{i}.self", h, h, self_mask, cfg.heads)
        y = y + drop(a)
        h2, ln2 = _ln_fwd(y, p[f"dec{i}.ln2.g"], p[f"dec{i}.ln2.b"])
        c, cross_c = _attn_fwd(p, f"dec{i}.cross", h2, memory, src_key_mask, cfg.heads)
        y = y + drop(c)
        h3, ln3 = _ln_fwd(y, p[f"dec{i}.ln3.g"], p[f"dec{i}.ln3.b"])
        f, ffn_c = _ffn_fwd(p, f"dec{i}.ffn", h3)
        y = y + drop(f)
        dec_caches.append((ln1, self_c, ln2, cross_c, ln3, ffn_c))
    out, dec_ln = _ln_fwd(y, p["dec.ln.g"], p["dec.ln.b"])
    logits, out_c = _linear_fwd(out, p["out.w"], p["out.b"])

    cache.update(
        enc=enc_caches, enc_ln=enc_ln, dec=dec_caches, dec_ln=dec_ln,
        out_c=out_c, scale=scale,
    )
    return logits, cache


def forward(
    ckpt: Checkpoint, batch: Batch, train_mode: bool = False, rng=None
) -> np.ndarray:
    """Next-token logits [B, T, tgt_vocab]; dropout only in train_mode."""
    if train_mode and ckpt.config.dropout > 0.0 and rng is None:
        raise ValueError("train_mode with dropout needs an rng")
    logits, _ = _forward(ckpt, batch, train_mode, rng)
    return logits


def loss(
    logits: np.ndarray,
    tgt_out: np.ndarray,
    tgt_mask: np.ndarray,
    label_smoothing: float = 0.0,
) -> tuple[float, int]:
    """Label-smoothed cross-entropy summed over non-pad tokens (nats).

    Returns (nll_sum, token_count); divide for the mean, feed to
    metrics.perplexity for validation (with smoothing 0).
    """
    if logits.shape[:2] != tgt_out.shape or tgt_out.shape != tgt_mask.shape:
        raise ShapeMismatch("logits/targets shape mismatch")
    v = logits.shape[-1]
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1))
    true_logp = np.take_along_axis(shifted, tgt_out[..., None], axis=-1)[..., 0] - logz
    nll = -(1.0 - label_smoothing) * true_logp
    if label_smoothing > 0.0:
        nll -= label_smoothing / v * (shifted.sum(axis=-1) - v * logz)
    count = int(tgt_mask.sum())
    return float((nll * tgt_mask).sum()), count


def gradients(
    ckpt: Checkpoint,
    batch: Batch,
    train_mode: bool = True,
    rng=None,
) -> tuple[dict[str, np.ndarray], float, int]:
    """Exact gradients of the mean (per-token) loss for every parameter.

    Returns (grads, nll_sum, token_count). Dropout applies only when
    train_mode is set and the config's dropout is nonzero (pass an rng).
    """
    cfg = ckpt.config
    if train_mode and cfg.dropout > 0.0 and rng is None:
        raise ValueError("train_mode with dropout needs an rng")
    p = ckpt.params
    logits, cache = _forward(ckpt, batch, train_mode, rng)
    nll_sum, count = loss(logits, batch.tgt_out, batch.tgt_mask, cfg.label_smoothing)
    if count == 0:
        raise ShapeMismatch("batch has no unmasked target tokens")

    v = cfg.tgt_vocab
    probs = _softmax(logits, axis=-1)
    target = np.full_like(probs, cfg.label_smoothing / v)
    np.put_along_axis(
        target,
        batch.tgt_out[..., None],
        cfg.label_smoothing / v + (1.0 - cfg.label_smoothing),
        axis=-1,
    )
    dlogits = (probs - target) * batch.tgt_mask[..., None] / count
    dlogits = dlogits.astype(p["out.w"].dtype)

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    drops = cache["drops"]

    def undrop(dy):
        return _dropout_bwd(dy, drops.pop())

    dy = _linear_bwd(dlogits, cache["out_c"], grads, "out.w", "out.b")
    dy = _ln_bwd(dy, cache["dec_ln"], grads, "dec.ln.g", "dec.ln.b")
    dmemory = np.zeros(
        (batch.src.shape[0], batch.src.shape[1], cfg.d_model), dtype=dy.dtype
    )
    for i in reversed(range(cfg.layers)):
        ln1, self_c, ln2, cross_c, ln3, ffn_c = cache["dec"][i]
        df = undrop(dy)
        dh3 = _ffn_bwd(df, ffn_c, grads, f"dec{i}.ffn")
        dy = dy + _ln_bwd(dh3, ln3, grads, f"dec{i}.ln3.g", f"dec{i}.ln3.b")
        dc = undrop(dy)
        dh2, dmem = _attn_bwd(dc, cross_c, grads, f"dec{i}.cross")
        dmemory += dmem
        dy = dy + _ln_bwd(dh2, ln2, grads, f"dec{i}.ln2.g", f"dec{i}.ln2.b")
        da = undrop(dy)
        dh_q, dh_kv = _attn_bwd(da, self_c, grads, f"dec{i}.self")
        dy = dy + _ln_bwd(dh_q + dh_kv, ln1, grads, f"dec{i}.ln1.g", f"dec{i}.ln1.b")
    dy = undrop(dy)
    np.add.at(
        grads["tgt_embed"],
        batch.tgt_in.ravel(),
        (dy * cache["scale"]).reshape(-1, cfg.d_model),
    )

    dx = _ln_bwd(dmemory, cache["enc_ln"], grads, "enc.ln.g", "enc.ln.b")
    for i in reversed(range(cfg.layers)):
        ln1, attn_c, ln2, ffn_c = cache["enc"][i]
        df = undrop(dx)
        dh2 = _ffn_bwd(df, ffn_c, grads, f"enc{i}.ffn")
        dx = dx + _ln_bwd(dh2, ln2, grads, f"enc{i}.ln2.g", f"enc{i}.ln2.b")
        da = undrop(dx)
        dh_q, dh_kv = _attn_bwd(da, attn_c, grads, f"enc{i}.attn")
        dx = dx + _ln_bwd(dh_q + dh_kv, ln1, grads, f"enc{i}.ln1.g", f"enc{i}.ln1.b")
    dx = undrop(dx)
    np.add.at(
        grads["src_embed"],
        batch.src.ravel(),
        (dx * cache["scale"]).reshape(-1, cfg.d_model),
    )
    assert not drops
    return grads, nll_sum, count


def greedy_decode(
    ckpt: Checkpoint, src_ids: list[int], max_len: int = 128
) -> list[int]:
    """Deterministic argmax decoding from BOS until EOS or max_len.

    Returns generated ids without the BOS/EOS framing. Ties break
    toward the lowest id (argmax convention).
    """
    cfg = ckpt.config
    if len(src_ids) + 1 > cfg.max_position:
        raise PositionOverflow("source sentence exceeds max_position")
    src = np.asarray([list(src_ids) + [EOS_ID]], dtype=np.int64)
    src_mask = src != PAD_ID
    out: list[int] = []
    limit = min(max_len, cfg.max_position - 1)
    for _ in range(max(limit, 1)):
        tgt_in = np.asarray([[BOS_ID] + out], dtype=np.int64)
        batch = Batch(
            src=src,
            tgt_in=tgt_in,
            tgt_out=np.zeros_like(tgt_in),
            src_mask=src_mask,
            tgt_mask=np.ones_like(tgt_in, dtype=bool),
        )
        logits = forward(ckpt, batch, train_mode=False)
        nxt = int(np.argmax(logits[0, -1]))
        if nxt == EOS_ID:
            break
        out.append(nxt)
        if len(out) >= max_len:
            break
    return out


# ---------------------------------------------------------------------------
# checkpoint serialization

_DTYPE_CODES = {np.dtype("float32"): 1, np.dtype("float64"): 2}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def _write_tensors(fh, tensors: dict[str, np.ndarray]) -> None:
    fh.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        enc = name.encode("utf-8")
        fh.write(struct.pack("<I", len(enc)))
        fh.write(enc)
        fh.write(struct.pack("<B", _DTYPE_CODES[arr.dtype]))
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())


def _read_tensors(fh) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", fh.read(4))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", fh.read(4))
        name = fh.read(name_len).decode("utf-8")
        (code,) = struct.unpack("<B", fh.read(1))
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim)) if ndim else ()
        dtype = _CODE_DTYPES[code]
        n = int(np.prod(shape)) if shape else 1
        data = fh.read(n * dtype.itemsize)
        arr = np.frombuffer(data, dtype=dtype.newbyteorder("<")).astype(dtype)
        tensors[name] = arr.reshape(shape)
    return tensors


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    """Binary checkpoint: magic, version, JSON header, named tensors
    (little-endian, row-major)."""
    header = json.dumps(
        {
            "config": {
                "layers": ckpt.config.layers,
                "heads": ckpt.config.heads,
                "d_model": ckpt.config.d_model,
                "d_ff": ckpt.config.d_ff,
                "src_vocab": ckpt.config.src_vocab,
                "tgt_vocab": ckpt.config.tgt_vocab,
                "dropout": ckpt.config.dropout,
                "label_smoothing": ckpt.config.label_smoothing,
                "max_position": ckpt.config.max_position,
            },
            "step": ckpt.step,
            "src_vocab": ckpt.src_vocab,
            "tgt_vocab": ckpt.tgt_vocab,
        },
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _CKPT_VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        _write_tensors(fh, ckpt.params)
        _write_tensors(fh, ckpt.opt_m)
        _write_tensors(fh, ckpt.opt_v)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        params = _read_tensors(fh)
        opt_m = _read_tensors(fh)
        opt_v = _read_tensors(fh)
    return Checkpoint(
        config=ModelConfig(**header["config"]),
        params=params,
        opt_m=opt_m,
        opt_v=opt_v,
        step=header["step"],
        src_vocab=header["src_vocab"],
        tgt_vocab=header["tgt_vocab"],
    )
