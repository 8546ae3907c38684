"""Trainer tests: prediction, schedule, freezing, metrics, gradients."""

import math

import pytest
import torch

from conftest import tiny_corpus

from repospd.encoder import DTYPE
from repospd.trainer import (
    HeadParams,
    MetricsReport,
    TrainConfig,
    cross_entropy,
    evaluate,
    from_checkpoint,
    checkpoint_bytes,
    grad_check,
    init_params,
    graph_tensors,
    named_tensors,
    predict,
    progressive_loss,
    seq_tensors,
    split_corpus,
    tensor_digests,
    to_checkpoint,
    train,
)


def heads_from(w_g_rows, w_s_rows):
    return HeadParams(
        w_g=torch.tensor(w_g_rows, dtype=DTYPE),
        w_s=torch.tensor(w_s_rows, dtype=DTYPE),
    )


class TestPredict:
    def test_identical_branch_outputs_pass_through(self):
        heads = heads_from([[3.0, 1.0], [0.0, 0.0]], [[3.0, 1.0], [0.0, 0.0]])
        f = torch.tensor([1.0, 0.0], dtype=DTYPE)
        p, cls = predict(f, f, heads)
        assert torch.allclose(p, torch.tensor([3.0, 1.0], dtype=DTYPE))
        assert cls == 0

    def test_zero_vectors_tie_break_to_zero(self):
        heads = heads_from([[1.0, 2.0], [3.0, 4.0]], [[1.0, 2.0], [3.0, 4.0]])
        zero = torch.zeros(2, dtype=DTYPE)
        p, cls = predict(zero, zero, heads)
        assert torch.equal(p, zero)
        assert cls == 0

    def test_arithmetic_mean_and_tie(self):
        heads = heads_from([[2.0, 0.0], [0.0, 0.0]], [[0.0, 2.0], [0.0, 0.0]])
        f = torch.tensor([1.0, 0.0], dtype=DTYPE)
        p, cls = predict(f, f, heads)
        assert torch.allclose(p, torch.tensor([1.0, 1.0], dtype=DTYPE))
        assert cls == 0

    def test_scaling_keeps_argmax(self):
        heads = heads_from([[2.0, 1.0], [0.0, 0.0]], [[1.0, 0.5], [0.0, 0.0]])
        f = torch.tensor([1.0, 0.0], dtype=DTYPE)
        p1, cls1 = predict(f, f, heads)
        scaled = HeadParams(w_g=heads.w_g * 5, w_s=heads.w_s * 5)
        p2, cls2 = predict(f, f, scaled)
        assert torch.allclose(p2, p1 * 5)
        assert cls1 == cls2

    def test_dimension_mismatch_raises(self):
        heads = heads_from([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(RuntimeError):
            predict(torch.zeros(3, dtype=DTYPE), torch.zeros(2, dtype=DTYPE), heads)


class TestProgressiveLoss:
    def test_sequence_first_by_default(self):
        zeros = torch.zeros(2, dtype=DTYPE)
        _, active = progressive_loss(zeros, zeros, 1, epoch=0, e_max=10)
        assert active == "seq"
        _, active = progressive_loss(zeros, zeros, 1, epoch=5, e_max=10)
        assert active == "graph"

    def test_eq6_literal_reverses(self):
        zeros = torch.zeros(2, dtype=DTYPE)
        _, active = progressive_loss(zeros, zeros, 1, 0, 10, schedule="eq6-literal")
        assert active == "graph"
        _, active = progressive_loss(zeros, zeros, 1, 5, 10, schedule="eq6-literal")
        assert active == "seq"

    def test_uniform_logits_loss_is_ln2(self):
        zeros = torch.zeros(2, dtype=DTYPE)
        loss, active = progressive_loss(torch.tensor([9.0, 9.0], dtype=DTYPE), zeros, 1, 0, 10)
        assert active == "seq"
        assert math.isclose(float(loss), math.log(2), rel_tol=1e-12)

    def test_invalid_label_rejected(self):
        zeros = torch.zeros(2, dtype=DTYPE)
        with pytest.raises(ValueError):
            progressive_loss(zeros, zeros, 2, 0, 10)

    def test_cross_entropy_value(self):
        logits = torch.tensor([1.0, -1.0], dtype=DTYPE)
        expected = -math.log(math.exp(-1.0) / (math.exp(1.0) + math.exp(-1.0)))
        assert math.isclose(float(cross_entropy(logits, 1)), expected, rel_tol=1e-12)


def small_cfg(**kw):
    defaults = dict(epochs=2, dim=8, vocab_size=64, heads=2, seed=5)
    defaults.update(kw)
    return TrainConfig(**defaults)


class TestTrainConfig:
    def test_odd_epochs_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=7)

    def test_round_trip(self):
        cfg = small_cfg(epochs=4)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_paper_defaults(self):
        cfg = TrainConfig()
        assert cfg.epochs == 10
        assert cfg.batch_size == 4
        assert cfg.lr_graph == 5e-5
        assert cfg.lr_seq == 2e-5
        assert cfg.heads == 2


class TestTrainFreezing:
    def test_minimal_schedule_one_sample(self):
        corpus = tiny_corpus()[:1]
        params, history = train(corpus, small_cfg(epochs=2))
        init = tensor_digests(init_params(small_cfg(epochs=2)))
        after_e0 = history[0]["digests"]
        after_e1 = history[1]["digests"]
        g_names = set(graph_tensors(params))
        s_names = set(seq_tensors(params))
        assert history[0]["active_branch"] == "seq"
        assert history[1]["active_branch"] == "graph"
        # Epoch 0: graph tensors untouched, at least one sequence tensor moved.
        assert all(after_e0[n] == init[n] for n in g_names)
        assert any(after_e0[n] != init[n] for n in s_names)
        # Epoch 1: sequence tensors frozen at their epoch-0 state.
        assert all(after_e1[n] == after_e0[n] for n in s_names)
        assert any(after_e1[n] != after_e0[n] for n in g_names)

    def test_eq6_literal_flag_reverses_phases(self):
        corpus = tiny_corpus()[:1]
        cfg = small_cfg(epochs=2, schedule="eq6-literal")
        params, history = train(corpus, cfg)
        init = tensor_digests(init_params(cfg))
        after_e0 = history[0]["digests"]
        g_names = set(graph_tensors(params))
        s_names = set(seq_tensors(params))
        assert history[0]["active_branch"] == "graph"
        assert all(after_e0[n] == init[n] for n in s_names)
        assert any(after_e0[n] != init[n] for n in g_names)

    def test_two_runs_bit_identical(self):
        corpus = tiny_corpus()
        cfg = small_cfg(epochs=4)
        params1, hist1 = train(corpus, cfg)
        params2, hist2 = train(corpus, cfg)
        assert tensor_digests(params1) == tensor_digests(params2)
        assert [h["loss"] for h in hist1] == [h["loss"] for h in hist2]

    def test_history_records_loss_and_accuracy(self):
        corpus = tiny_corpus()
        _, history = train(corpus, small_cfg(epochs=2))
        assert len(history) == 2
        for rec in history:
            assert rec["loss"] > 0
            assert 0.0 <= rec["train_accuracy"] <= 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            train([], small_cfg())


class TestEvaluate:
    def test_formula_values(self):
        r = MetricsReport(tp=3, tn=5, fp=1, fn=1)
        assert r.accuracy == 0.8
        assert r.precision == 0.75
        assert r.recall == 0.75
        assert r.f1 == 0.75
        assert math.isclose(r.fpr, 1 / 6)

    def test_perfect_classifier(self):
        r = MetricsReport(tp=4, tn=6, fp=0, fn=0)
        assert r.accuracy == 1.0 and r.fpr == 0.0

    def test_degenerate_all_negative(self):
        r = MetricsReport(tp=0, tn=7, fp=0, fn=0)
        assert r.precision == 0.0 and r.recall == 0.0 and r.f1 == 0.0 and r.fpr == 0.0

    def test_fresh_params_predict_class_zero(self):
        # Zero-initialized heads give p = 0 for everything: ties go to 0.
        corpus = tiny_corpus()
        params = init_params(small_cfg())
        report = evaluate(params, corpus)
        positives = sum(1 for s in corpus if s.label == 1)
        negatives = len(corpus) - positives
        assert (report.tp, report.tn, report.fp, report.fn) == (0, negatives, 0, positives)

    def test_per_tag_grouping(self):
        corpus = tiny_corpus()
        params = init_params(small_cfg())
        report = evaluate(params, corpus, by_tag=True)
        assert set(report.per_tag) == {"bounds", "rename"}
        assert report.per_tag["bounds"].total == 2
        assert report.per_tag["rename"].total == 2
        data = report.to_dict()
        assert data["per_tag"]["rename"]["accuracy"] == 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            evaluate(init_params(small_cfg()), [])

    def test_metrics_recomputable_from_counts(self):
        r = MetricsReport(tp=2, tn=3, fp=4, fn=1)
        d = r.to_dict()
        c = d["counts"]
        assert d["accuracy"] == (c["tp"] + c["tn"]) / sum(c.values())
        assert d["precision"] == c["tp"] / (c["tp"] + c["fp"])
        assert d["fpr"] == c["fp"] / (c["fp"] + c["tn"])


class TestGradCheck:
    def test_random_sample_within_tolerance(self):
        corpus = tiny_corpus()
        params = init_params(small_cfg(epochs=4, seed=11))
        # Move heads off zero so head gradients are informative.
        gen = torch.Generator().manual_seed(42)
        with torch.no_grad():
            params.heads.w_g.normal_(0.0, 0.3, generator=gen)
            params.heads.w_s.normal_(0.0, 0.3, generator=gen)
        err = grad_check(params, corpus[0], coords_per_tensor=3)
        assert err <= 1e-4

    def test_frozen_branch_gradient_exactly_zero(self):
        corpus = tiny_corpus()
        params = init_params(small_cfg(epochs=4))
        sample = corpus[0]
        for t in named_tensors(params).values():
            t.requires_grad_(True)
        from repospd.trainer import graph_feature, seq_feature

        logits_g = params.heads.w_g.T @ graph_feature(params, sample)
        logits_s = params.heads.w_s.T @ seq_feature(params, sample)
        loss, active = progressive_loss(logits_g, logits_s, sample.label, 0, 4)
        assert active == "seq"
        grads = torch.autograd.grad(loss, list(graph_tensors(params).values()), allow_unused=True)
        for t in named_tensors(params).values():
            t.requires_grad_(False)
        for g in grads:
            assert g is None or torch.equal(g, torch.zeros_like(g))

    def test_zero_embeddings_degenerate_sample_finite(self):
        corpus = tiny_corpus()
        params = init_params(small_cfg(epochs=4))
        with torch.no_grad():
            params.graph.token_table.zero_()
            params.graph.kind_table.zero_()
            params.seq.token_table.zero_()
            params.seq.marker_table.zero_()
        err = grad_check(params, corpus[0], coords_per_tensor=2)
        assert math.isfinite(err)


class TestSplitCorpus:
    def test_eight_one_one(self):
        items = list(range(40))
        tr, va, te = split_corpus(items, seed=3)
        assert (len(tr), len(va), len(te)) == (32, 4, 4)
        assert sorted(tr + va + te) == items

    def test_deterministic(self):
        items = list(range(20))
        assert split_corpus(items, 7) == split_corpus(items, 7)
        assert split_corpus(items, 7) != split_corpus(items, 8)


class TestCheckpoint:
    def test_round_trip_bit_identical(self):
        corpus = tiny_corpus()
        params, _ = train(corpus, small_cfg(epochs=2))
        doc = to_checkpoint(params)
        restored = from_checkpoint(doc)
        assert tensor_digests(restored) == tensor_digests(params)
        assert checkpoint_bytes(restored) == checkpoint_bytes(params)

    def test_bad_format_rejected(self):
        with pytest.raises(ValueError):
            from_checkpoint({"format_version": "nope", "config": {}, "tensors": {}})

    def test_config_survives(self):
        params = init_params(small_cfg(epochs=6, dim=8))
        restored = from_checkpoint(to_checkpoint(params))
        assert restored.config == params.config
