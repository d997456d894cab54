"""Contrastive embedding transform: training, scoring, and reranking.

A three-layer fully connected net (same input/hidden/output width as the
embedding) is trained so that transformed problem/candidate vectors have
absolute cosine similarity near 1 for verified candidates and near 0 for
rejected ones, under a squared-error objective.  Ranking sorts candidates
by that score; `net=None` scores raw embeddings instead.
"""

from __future__ import annotations

import base64
import json
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingVector, ProviderConfig, cosine_abs, embed
from .errors import DimensionMismatch, EmbeddingUnavailable, EmptyFoldComplement, ZeroVector

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RankEntry:
    candidate_id: str
    score: float
    generation_index: int


@dataclass(frozen=True)
class RankedList:
    problem_id: str
    entries: tuple[RankEntry, ...]

    def candidate_ids(self) -> list[str]:
        return [e.candidate_id for e in self.entries]


def make_ranked_list(problem_id: str, scored) -> RankedList:
    """Sort (candidate_id, score, generation_index) by score desc, index asc."""
    entries = [RankEntry(cid, float(s), gi) for cid, s, gi in scored]
    entries.sort(key=lambda e: (-e.score, e.generation_index))
    return RankedList(problem_id, tuple(entries))


@dataclass
class TransformNet:
    ws: list[np.ndarray]  # three (d, d) weight matrices
    bs: list[np.ndarray]  # three (d,) biases
    dim: int
    activation: str = "relu"  # relu | identity
    seed: int = 0

    def __post_init__(self):
        if len(self.ws) != 3 or len(self.bs) != 3:
            raise ValueError("expected exactly three layers")
        for w, b in zip(self.ws, self.bs):
            if w.shape != (self.dim, self.dim) or b.shape != (self.dim,):
                raise DimensionMismatch("layer shapes must be square in the embedding dim")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def init(cls, dim: int, seed: int = 0, activation: str = "relu") -> "TransformNet":
        rng = np.random.Generator(np.random.PCG64(seed))
        bound = 1.0 / np.sqrt(dim)
        ws = [rng.uniform(-bound, bound, size=(dim, dim)) for _ in range(3)]
        bs = [np.zeros(dim) for _ in range(3)]
        return cls(ws=ws, bs=bs, dim=dim, activation=activation, seed=seed)

    @classmethod
    def identity(cls, dim: int) -> "TransformNet":
        return cls(
            ws=[np.eye(dim) for _ in range(3)],
            bs=[np.zeros(dim) for _ in range(3)],
            dim=dim,
            activation="identity",
        )

    def copy(self) -> "TransformNet":
        return TransformNet(
            ws=[w.copy() for w in self.ws],
            bs=[b.copy() for b in self.bs],
            dim=self.dim,
            activation=self.activation,
            seed=self.seed,
        )


@dataclass(frozen=True)
class Hyperparams:
    epochs: int = 20
    learning_rate: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.001
    max_grad_norm: float = 1.0
    warmup_steps: int = 500
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 0 or self.learning_rate <= 0:
            raise ValueError("hyperparameters must be positive")


def _act(net: TransformNet, z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) if net.activation == "relu" else z


def _act_grad(net: TransformNet, z: np.ndarray) -> np.ndarray:
    return (z > 0).astype(np.float64) if net.activation == "relu" else np.ones_like(z)


def _forward_cached(net: TransformNet, x: np.ndarray):
    """Batched forward pass keeping pre-activations for backprop."""
    z1 = x @ net.ws[0].T + net.bs[0]
    a1 = _act(net, z1)
    z2 = a1 @ net.ws[1].T + net.bs[1]
    a2 = _act(net, z2)
    out = a2 @ net.ws[2].T + net.bs[2]
    return out, (x, z1, a1, z2, a2)


def forward(net: TransformNet, x: EmbeddingVector) -> EmbeddingVector:
    """Apply the transform to one embedding; deterministic, no activation on output."""
    if x.dim != net.dim:
        raise DimensionMismatch(f"net dim {net.dim} vs embedding dim {x.dim}")
    out, _ = _forward_cached(net, x.values.reshape(1, -1))
    return EmbeddingVector(out[0], net.dim, x.provider_tag)


def _as_array(x) -> np.ndarray:
    return x.values if isinstance(x, EmbeddingVector) else np.asarray(x, dtype=np.float64)


def loss(net: TransformNet, x, y, label: int) -> float:
    """(|cos(transformed x, transformed y)| - label)^2."""
    u, _ = _forward_cached(net, _as_array(x).reshape(1, -1))
    v, _ = _forward_cached(net, _as_array(y).reshape(1, -1))
    nu, nv = np.linalg.norm(u[0]), np.linalg.norm(v[0])
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("transformed vector is all-zero")
    a = abs(float(u[0] @ v[0]) / (nu * nv))
    return (a - label) ** 2


@dataclass
class Gradients:
    ws: list[np.ndarray]
    bs: list[np.ndarray]

    def global_norm(self) -> float:
        total = sum(float(np.sum(g * g)) for g in self.ws + self.bs)
        return float(np.sqrt(total))

    def scale(self, factor: float):
        for g in self.ws + self.bs:
            g *= factor


def _backprop_path(net: TransformNet, cache, dout: np.ndarray) -> Gradients:
    x, z1, a1, z2, a2 = cache
    dw3 = dout.T @ a2
    db3 = dout.sum(axis=0)
    da2 = dout @ net.ws[2]
    dz2 = da2 * _act_grad(net, z2)
    dw2 = dz2.T @ a1
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ net.ws[1]
    dz1 = da1 * _act_grad(net, z1)
    dw1 = dz1.T @ x
    db1 = dz1.sum(axis=0)
    return Gradients(ws=[dw1, dw2, dw3], bs=[db1, db2, db3])


def grad(net: TransformNet, batch) -> tuple[Gradients, float, int]:
    """Exact gradient of the mean batch loss.

    `batch` is a sequence of (x, y, label).  Pairs whose transformed
    vector is all-zero are skipped and counted in the third return value.
    Returns (gradients, mean_loss, skipped).
    """
    xs = np.stack([_as_array(x) for x, _, _ in batch])
    ys = np.stack([_as_array(y) for _, y, _ in batch])
    labels = np.asarray([s for _, _, s in batch], dtype=np.float64)

    u, cache_x = _forward_cached(net, xs)
    v, cache_y = _forward_cached(net, ys)
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = (nu > 0) & (nv > 0)
    skipped = int(np.sum(~ok))
    n_used = int(np.sum(ok))
    if n_used == 0:
        zero = Gradients(
            ws=[np.zeros_like(w) for w in net.ws], bs=[np.zeros_like(b) for b in net.bs]
        )
        return zero, 0.0, skipped

    safe_nu = np.where(ok, nu, 1.0)
    safe_nv = np.where(ok, nv, 1.0)
    c = np.einsum("ij,ij->i", u, v) / (safe_nu * safe_nv)
    a = np.abs(c)
    mean_loss = float(np.sum(((a - labels) ** 2) * ok) / n_used)

    sign = np.where(c >= 0, 1.0, -1.0)  # subgradient choice: sign(0) = +1
    dl_da = 2.0 * (a - labels) * ok / n_used
    coef = (dl_da * sign)[:, None]
    du = coef * (v / (safe_nu * safe_nv)[:, None] - (c / safe_nu**2)[:, None] * u)
    dv = coef * (u / (safe_nu * safe_nv)[:, None] - (c / safe_nv**2)[:, None] * v)

    gx = _backprop_path(net, cache_x, du)
    gy = _backprop_path(net, cache_y, dv)
    total = Gradients(
        ws=[a_ + b_ for a_, b_ in zip(gx.ws, gy.ws)],
        bs=[a_ + b_ for a_, b_ in zip(gx.bs, gy.bs)],
    )
    return total, mean_loss, skipped


def _lr_multiplier(step: int, total: int, warmup: int) -> float:
    warmup = min(warmup, total)
    if warmup > 0 and step <= warmup:
        return step / warmup
    if total <= warmup:
        return 1.0
    return max(0.0, (total - step) / (total - warmup))


class _Adam:
    def __init__(self, net: TransformNet, hp: Hyperparams, total_steps: int):
        self.hp = hp
        self.total = total_steps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.ws + net.bs]
        self.v = [np.zeros_like(p) for p in net.ws + net.bs]

    def step(self, net: TransformNet, grads: Gradients):
        hp = self.hp
        self.t += 1
        lr = hp.learning_rate * _lr_multiplier(self.t, self.total, hp.warmup_steps)
        params = net.ws + net.bs
        gs = grads.ws + grads.bs
        for i, (p, g) in enumerate(zip(params, gs)):
            self.m[i] = hp.beta1 * self.m[i] + (1 - hp.beta1) * g
            self.v[i] = hp.beta2 * self.v[i] + (1 - hp.beta2) * g * g
            mhat = self.m[i] / (1 - hp.beta1**self.t)
            vhat = self.v[i] / (1 - hp.beta2**self.t)
            p -= lr * mhat / (np.sqrt(vhat) + hp.eps)
            p -= lr * hp.weight_decay * p


@dataclass(frozen=True)
class TrainResult:
    net: TransformNet
    epoch_losses: tuple[float, ...]
    fold: int
    skipped_pairs: int = 0


def _lookup_embeddings(texts: list[str], provider) -> dict[str, EmbeddingVector]:
    unique = list(dict.fromkeys(texts))
    if isinstance(provider, ProviderConfig):
        vectors = embed(unique, provider)
        return dict(zip(unique, vectors))
    if isinstance(provider, Mapping):
        try:
            return {t: provider[t] for t in unique}
        except KeyError as exc:
            raise EmbeddingUnavailable(f"no embedding for text {exc.args[0]!r:.60}") from None
    raise TypeError("provider must be a ProviderConfig or a text->vector mapping")


def train(data, fold: int, hp: Hyperparams, provider) -> TrainResult:
    """Train the transform on every problem outside `fold`.

    `data` is a dataset.LabeledDataset; `provider` either a ProviderConfig
    or a precomputed mapping from text to EmbeddingVector.  Pairs labeled
    `unknown` never enter training.
    """
    pairs: list[tuple[str, str, int]] = []
    for record in data.records:
        if data.fold_of[record.problem_id] == fold:
            continue
        ptext = data.problem_texts.get(record.problem_id)
        if ptext is None:
            raise EmbeddingUnavailable(f"no problem text for {record.problem_id!r}")
        for cand in record.candidates:
            if cand.label == "pos":
                pairs.append((ptext, cand.text, 1))
            elif cand.label == "neg":
                pairs.append((ptext, cand.text, 0))
    if not any(s == 1 for _, _, s in pairs) or not any(s == 0 for _, _, s in pairs):
        raise EmptyFoldComplement(
            f"training for fold {fold} needs at least one positive and one negative pair"
        )

    vectors = _lookup_embeddings([t for p in pairs for t in p[:2]], provider)
    dim = next(iter(vectors.values())).dim
    xs = np.stack([vectors[p].values for p, _, _ in pairs])
    ys = np.stack([vectors[c].values for _, c, _ in pairs])
    labels = [s for _, _, s in pairs]

    net = TransformNet.init(dim, seed=hp.seed)
    n = len(pairs)
    steps_per_epoch = (n + hp.batch_size - 1) // hp.batch_size
    optimizer = _Adam(net, hp, total_steps=max(1, hp.epochs * steps_per_epoch))
    rng = np.random.Generator(np.random.PCG64(hp.seed))

    losses = []
    skipped_total = 0
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        used = 0
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            batch = [(xs[i], ys[i], labels[i]) for i in idx]
            grads, mean_loss, skipped = grad(net, batch)
            skipped_total += skipped
            norm = grads.global_norm()
            if norm > hp.max_grad_norm:
                grads.scale(hp.max_grad_norm / norm)
            optimizer.step(net, grads)
            loss_sum += mean_loss * (len(batch) - skipped)
            used += len(batch) - skipped
        losses.append(loss_sum / used if used else 0.0)
    return TrainResult(net=net, epoch_losses=tuple(losses), fold=fold, skipped_pairs=skipped_total)


def rank(net: TransformNet | None, problem, cands, provider) -> RankedList:
    """Score candidates against the problem and sort.

    With `net=None` the raw embeddings are scored directly (the untrained
    baseline).  A candidate whose transformed vector is all-zero scores 0.
    """
    if not cands:
        raise ValueError("need at least one candidate")
    texts = [problem.raw_text] + [c.raw_text for c in cands]
    vectors = _lookup_embeddings(texts, provider)
    pvec = vectors[problem.raw_text]
    if net is not None:
        if net.dim != pvec.dim:
            raise DimensionMismatch(f"net dim {net.dim} vs embedding dim {pvec.dim}")
        pvec = forward(net, pvec)
    scored = []
    for cand in cands:
        cvec = vectors[cand.raw_text]
        if net is not None:
            cvec = forward(net, cvec)
        try:
            score = cosine_abs(pvec, cvec)
        except ZeroVector:
            score = 0.0
        scored.append((cand.id, score, cand.generation_index))
    return make_ranked_list(problem.id, scored)


# --- model persistence --------------------------------------------------------


def _encode(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, shape: tuple[int, ...]) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").reshape(shape).copy()


def save_model(net: TransformNet, path, fold: int | None = None):
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "dim": net.dim,
        "activation": net.activation,
        "seed": net.seed,
        "fold": fold,
        "layers": [
            {"w": _encode(w), "b": _encode(b)} for w, b in zip(net.ws, net.bs)
        ],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> tuple[TransformNet, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema {doc.get('schema_version')!r}")
    d = doc["dim"]
    net = TransformNet(
        ws=[_decode(layer["w"], (d, d)) for layer in doc["layers"]],
        bs=[_decode(layer["b"], (d,)) for layer in doc["layers"]],
        dim=d,
        activation=doc["activation"],
        seed=doc["seed"],
    )
    return net, {"fold": doc.get("fold")}
