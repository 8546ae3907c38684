"""Training and evaluation of the two-branch classifier.

The schedule is two-phase: one branch trains while the other is frozen (its
tensors, including its classifier head, receive no optimizer steps at all,
so they stay bit-identical).  The default order trains the sequence branch
first and the graph branch second; `schedule="eq6-literal"` reverses it.
Prediction always averages both heads.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from .encoder import (
    DTYPE,
    GraphBranchParams,
    SeqBranchParams,
    encode_graph,
    encode_sequence,
    init_graph_branch,
    init_node_embeddings,
    init_seq_branch,
)
from .repodep import RepoCpg
from .slicing import SliceConfig

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "repospd-ckpt-1"


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 4
    lr_graph: float = 5e-5
    lr_seq: float = 2e-5
    heads: int = 2
    dim: int = 64
    vocab_size: int = 4096
    max_seq_tokens: int = 512
    seed: int = 0
    slice: SliceConfig = field(default_factory=SliceConfig)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    schedule: str = "prose"  # "prose" trains sequence first; "eq6-literal" graph first
    select_metric: str = "accuracy"

    def __post_init__(self) -> None:
        if self.epochs < 2 or self.epochs % 2:
            raise ValueError("epochs must be even and >= 2 (the phase switch is at epochs/2)")
        if self.lr_graph <= 0 or self.lr_seq <= 0:
            raise ValueError("learning rates must be positive")
        if self.schedule not in ("prose", "eq6-literal"):
            raise ValueError(f"unknown schedule: {self.schedule}")
        if self.select_metric not in ("accuracy", "f1"):
            raise ValueError(f"unknown selection metric: {self.select_metric}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if isinstance(data.get("slice"), dict):
            data["slice"] = SliceConfig(**data["slice"])
        return cls(**data)


@dataclass
class Sample:
    id: str
    graph: RepoCpg
    seq: list[tuple[str, str]]
    label: int
    tag: str | None = None
    embeddings: dict | None = None  # external node-vector sidecar, if supplied

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class HeadParams:
    w_g: torch.Tensor  # (d, 2)
    w_s: torch.Tensor  # (d, 2)


@dataclass
class ModelParams:
    config: TrainConfig
    graph: GraphBranchParams
    seq: SeqBranchParams
    heads: HeadParams


def init_params(cfg: TrainConfig) -> ModelParams:
    gen = torch.Generator().manual_seed(cfg.seed)
    graph = init_graph_branch(cfg.dim, cfg.vocab_size, cfg.heads, gen)
    seq = init_seq_branch(cfg.dim, cfg.vocab_size, gen)
    # Zero-initialized heads: a branch contributes exactly zero logits until
    # its own training phase starts moving its head.
    heads = HeadParams(
        w_g=torch.zeros(cfg.dim, 2, dtype=DTYPE),
        w_s=torch.zeros(cfg.dim, 2, dtype=DTYPE),
    )
    return ModelParams(config=cfg, graph=graph, seq=seq, heads=heads)


def graph_tensors(params: ModelParams) -> dict[str, torch.Tensor]:
    out = {
        "graph.token_table": params.graph.token_table,
        "graph.kind_table": params.graph.kind_table,
    }
    for k, layer in enumerate(params.graph.subgraph_layers, start=1):
        for h, (w, a) in enumerate(zip(layer.weights, layer.attn)):
            out[f"graph.sub{k}.head{h}.weight"] = w
            out[f"graph.sub{k}.head{h}.attn"] = a
    for h, (w, a) in enumerate(zip(params.graph.global_layer.weights, params.graph.global_layer.attn)):
        out[f"graph.global.head{h}.weight"] = w
        out[f"graph.global.head{h}.attn"] = a
    out["heads.w_g"] = params.heads.w_g
    return out


def seq_tensors(params: ModelParams) -> dict[str, torch.Tensor]:
    return {
        "seq.token_table": params.seq.token_table,
        "seq.marker_table": params.seq.marker_table,
        "seq.attn_vector": params.seq.attn_vector,
        "seq.ff1.weight": params.seq.ff1_w,
        "seq.ff1.bias": params.seq.ff1_b,
        "seq.ff2.weight": params.seq.ff2_w,
        "seq.ff2.bias": params.seq.ff2_b,
        "heads.w_s": params.heads.w_s,
    }


def named_tensors(params: ModelParams) -> dict[str, torch.Tensor]:
    return {**graph_tensors(params), **seq_tensors(params)}


def tensor_digests(params: ModelParams) -> dict[str, str]:
    """Bit-exact content fingerprints, for freezing proofs and determinism checks."""
    return {
        name: hashlib.sha256(t.detach().numpy().tobytes()).hexdigest()
        for name, t in named_tensors(params).items()
    }


# -- forward ------------------------------------------------------------------


def graph_feature(params: ModelParams, sample: Sample) -> torch.Tensor:
    h0 = init_node_embeddings(sample.graph, params.graph, external=sample.embeddings)
    return encode_graph(sample.graph, h0, params.graph)


def seq_feature(params: ModelParams, sample: Sample) -> torch.Tensor:
    return encode_sequence(sample.seq, params.seq)


def predict(f_g: torch.Tensor, f_s: torch.Tensor, heads: HeadParams) -> tuple[torch.Tensor, int]:
    """Averaged two-head prediction; ties resolve to class 0."""
    p = (heads.w_g.T @ f_g + heads.w_s.T @ f_s) / 2
    cls = 0 if p[0].item() >= p[1].item() else 1
    return p, cls


def predict_sample(params: ModelParams, sample: Sample) -> tuple[torch.Tensor, int]:
    with torch.no_grad():
        return predict(graph_feature(params, sample), seq_feature(params, sample), params.heads)


def cross_entropy(logits: torch.Tensor, y: int) -> torch.Tensor:
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y}")
    return torch.logsumexp(logits, dim=0) - logits[y]


def active_branch(epoch: int, e_max: int, schedule: str = "prose") -> str:
    first_half = epoch < e_max // 2
    seq_first = schedule == "prose"
    return "seq" if first_half == seq_first else "graph"


def progressive_loss(
    logits_g: torch.Tensor,
    logits_s: torch.Tensor,
    y: int,
    epoch: int,
    e_max: int,
    schedule: str = "prose",
) -> tuple[torch.Tensor, str]:
    """Phase loss: cross-entropy of the active branch's logits only."""
    active = active_branch(epoch, e_max, schedule)
    loss = cross_entropy(logits_s if active == "seq" else logits_g, y)
    return loss, active


# -- training -----------------------------------------------------------------


def _branch_logits(params: ModelParams, sample: Sample, branch: str) -> torch.Tensor:
    if branch == "graph":
        return params.heads.w_g.T @ graph_feature(params, sample)
    return params.heads.w_s.T @ seq_feature(params, sample)


def train(
    corpus: list[Sample],
    cfg: TrainConfig,
    valid: list[Sample] | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Seeded two-phase training.

    Per epoch the corpus is reshuffled and only the active branch's tensors
    (its optimizer is the only one stepped) change.  With a validation set,
    the best-scoring epoch's tensors are restored at the end.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    params = init_params(cfg)
    for t in named_tensors(params).values():
        t.requires_grad_(True)
    opt_graph = torch.optim.Adam(
        list(graph_tensors(params).values()),
        lr=cfg.lr_graph,
        betas=(cfg.beta1, cfg.beta2),
        eps=cfg.eps,
    )
    opt_seq = torch.optim.Adam(
        list(seq_tensors(params).values()),
        lr=cfg.lr_seq,
        betas=(cfg.beta1, cfg.beta2),
        eps=cfg.eps,
    )
    rng = random.Random(cfg.seed)
    history: list[dict] = []
    best_score = None
    best_state: dict[str, torch.Tensor] | None = None
    best_epoch = -1

    for epoch in range(cfg.epochs):
        branch = active_branch(epoch, cfg.epochs, cfg.schedule)
        optimizer = opt_graph if branch == "graph" else opt_seq
        order = list(range(len(corpus)))
        rng.shuffle(order)
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [corpus[i] for i in order[start : start + cfg.batch_size]]
            loss = sum(
                cross_entropy(_branch_logits(params, s, branch), s.label) for s in batch
            ) / len(batch)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}: {loss}"
                )
            loss.backward()
            optimizer.step()
            for t in named_tensors(params).values():
                t.grad = None
            losses.append(float(loss.detach()))

        record = {
            "epoch": epoch,
            "active_branch": branch,
            "loss": sum(losses) / len(losses),
            "train_accuracy": _accuracy(params, corpus),
            "digests": tensor_digests(params),
        }
        if valid:
            report = evaluate(params, valid)
            score = report.accuracy if cfg.select_metric == "accuracy" else report.f1
            record["valid_score"] = score
            # Ties prefer the later epoch: the more-trained model wins.
            if best_score is None or score >= best_score:
                best_score = score
                best_epoch = epoch
                best_state = {
                    name: t.detach().clone() for name, t in named_tensors(params).items()
                }
        history.append(record)

    if best_state is not None:
        log.info("restoring best epoch %d (%s=%.4f)", best_epoch, cfg.select_metric, best_score)
        with torch.no_grad():
            for name, t in named_tensors(params).items():
                t.copy_(best_state[name])
    for t in named_tensors(params).values():
        t.requires_grad_(False)
    return params, history


def _accuracy(params: ModelParams, corpus: list[Sample]) -> float:
    correct = sum(1 for s in corpus if predict_sample(params, s)[1] == s.label)
    return correct / len(corpus)


# -- evaluation -----------------------------------------------------------------


@dataclass
class MetricsReport:
    tp: int
    tn: int
    fp: int
    fn: int
    per_tag: dict[str, "MetricsReport"] | None = None

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.0

    def to_dict(self) -> dict:
        out = {
            "counts": {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn},
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fpr": self.fpr,
        }
        if self.per_tag is not None:
            out["per_tag"] = {tag: r.to_dict() for tag, r in sorted(self.per_tag.items())}
        return out


def evaluate(params: ModelParams, corpus: list[Sample], by_tag: bool = False) -> MetricsReport:
    if not corpus:
        raise ValueError("evaluation corpus is empty")
    report = _count(params, corpus)
    if by_tag:
        tagged = [s for s in corpus if s.tag]
        tags = sorted({s.tag for s in tagged})
        report.per_tag = {
            tag: _count(params, [s for s in tagged if s.tag == tag]) for tag in tags
        }
    return report


def _count(params: ModelParams, corpus: list[Sample]) -> MetricsReport:
    tp = tn = fp = fn = 0
    for sample in corpus:
        _, cls = predict_sample(params, sample)
        if sample.label == 1:
            tp, fn = (tp + 1, fn) if cls == 1 else (tp, fn + 1)
        else:
            tn, fp = (tn + 1, fp) if cls == 0 else (tn, fp + 1)
    return MetricsReport(tp=tp, tn=tn, fp=fp, fn=fn)


# -- gradient checking -----------------------------------------------------------


def grad_check(
    params: ModelParams,
    sample: Sample,
    step: float = 1e-5,
    coords_per_tensor: int = 4,
) -> float:
    """Max relative error between autograd gradients of the phase loss and
    central finite differences, over both phases and every tensor (a sampled
    subset of coordinates per tensor)."""
    cfg = params.config
    names = named_tensors(params)

    def full_loss(epoch: int) -> torch.Tensor:
        logits_g = params.heads.w_g.T @ graph_feature(params, sample)
        logits_s = params.heads.w_s.T @ seq_feature(params, sample)
        loss, _ = progressive_loss(
            logits_g, logits_s, sample.label, epoch, cfg.epochs, cfg.schedule
        )
        return loss

    max_err = 0.0
    for epoch in (0, cfg.epochs // 2):
        for t in names.values():
            t.requires_grad_(True)
        loss = full_loss(epoch)
        grads = torch.autograd.grad(loss, list(names.values()), allow_unused=True)
        analytic = {
            name: (g if g is not None else torch.zeros_like(t))
            for (name, t), g in zip(names.items(), grads)
        }
        for t in names.values():
            t.requires_grad_(False)

        for name, t in names.items():
            flat = t.reshape(-1)
            rng = random.Random(f"{name}:{cfg.seed}")
            count = min(coords_per_tensor, flat.numel())
            idxs = rng.sample(range(flat.numel()), count)
            for idx in idxs:
                original = float(flat[idx])
                with torch.no_grad():
                    flat[idx] = original + step
                    plus = float(full_loss(epoch))
                    flat[idx] = original - step
                    minus = float(full_loss(epoch))
                    flat[idx] = original
                fd = (plus - minus) / (2 * step)
                a = float(analytic[name].reshape(-1)[idx])
                err = abs(a - fd) / max(abs(a), abs(fd), 1e-5)
                max_err = max(max_err, err)
    return max_err


# -- corpus splitting and checkpoints ---------------------------------------------


def split_corpus(items: list, seed: int) -> tuple[list, list, list]:
    """Seeded 8:1:1 train/valid/test split."""
    order = list(items)
    random.Random(seed).shuffle(order)
    n = len(order)
    n_valid = max(1, round(n / 10)) if n >= 3 else 0
    n_test = max(1, round(n / 10)) if n >= 3 else 0
    train_part = order[: n - n_valid - n_test]
    valid_part = order[n - n_valid - n_test : n - n_test]
    test_part = order[n - n_test :]
    return train_part, valid_part, test_part


def to_checkpoint(params: ModelParams) -> dict:
    return {
        "format_version": CHECKPOINT_FORMAT,
        "config": params.config.to_dict(),
        "tensors": {name: t.detach().tolist() for name, t in named_tensors(params).items()},
    }


def from_checkpoint(doc: dict) -> ModelParams:
    if doc.get("format_version") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {doc.get('format_version')}")
    cfg = TrainConfig.from_dict(doc["config"])
    params = init_params(cfg)
    tensors = named_tensors(params)
    if set(tensors) != set(doc["tensors"]):
        raise ValueError("checkpoint tensor names do not match the configuration")
    with torch.no_grad():
        for name, t in tensors.items():
            value = torch.tensor(doc["tensors"][name], dtype=DTYPE)
            if value.shape != t.shape:
                raise ValueError(f"tensor {name} has shape {tuple(value.shape)}, expected {tuple(t.shape)}")
            t.copy_(value)
    return params


def save_checkpoint(params: ModelParams, path: Path | str) -> None:
    Path(path).write_text(checkpoint_bytes(params))


def checkpoint_bytes(params: ModelParams) -> str:
    return json.dumps(to_checkpoint(params), sort_keys=True, separators=(",", ":")) + "\n"


def load_checkpoint(path: Path | str) -> ModelParams:
    return from_checkpoint(json.loads(Path(path).read_text()))
