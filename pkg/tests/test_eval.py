import json

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from hrfnet.datasynth import DatasetManifest, SynthConfig, generate_dataset, make_synthetic_bases
from hrfnet.errors import ConfigError, DataError, ShapeError, UndefinedAUCError
from hrfnet.evaluation import (
    MetricsReport,
    bench_row,
    evaluate,
    grid_size,
    measure_fps,
    measure_memory,
    pixel_auc,
    render_comparison,
)
from hrfnet.evaluation.render import MARGIN, TITLE_HEIGHT
from hrfnet.model import HRFNet, ModelConfig
from oracles import pairwise_auc


def mixed_labels(n, rng):
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    return labels


class TestPixelAUC:
    def test_perfect_ranking(self):
        t = np.array([[0, 1], [1, 0]])
        assert pixel_auc(t.astype(float), t) == 1.0

    def test_all_tied_is_half(self):
        t = np.array([[0, 1, 1], [0, 0, 1]])
        assert pixel_auc(np.full(t.shape, 0.3), t) == 0.5

    @pytest.mark.parametrize("t", [np.zeros((3, 3), int), np.ones((3, 3), int)])
    def test_single_class_raises(self, t):
        with pytest.raises(UndefinedAUCError):
            pixel_auc(np.random.default_rng(0).random((3, 3)), t)

    @pytest.mark.parametrize("seed", range(10))
    def test_twenty_pixels_match_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        labels = mixed_labels(20, rng)
        # a coarse grid forces plenty of ties
        scores = rng.integers(0, 5, 20) / 4.0
        assert pixel_auc(scores.reshape(4, 5), labels.reshape(4, 5)) == pairwise_auc(scores, labels)

    @settings(max_examples=200, deadline=None)
    @given(data=st.data(), n=st.integers(2, 30))
    def test_pairwise_oracle_property(self, data, n):
        labels = data.draw(arrays(np.int64, n, elements=st.integers(0, 1)))
        labels[0], labels[-1] = 0, 1
        scores = data.draw(arrays(np.float64, n, elements=st.floats(0, 1)))
        assert pixel_auc([scores], [labels]) == pairwise_auc(scores, labels)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_monotone_invariance(self, seed):
        rng = np.random.default_rng(seed)
        labels, scores = mixed_labels(30, rng), rng.random(30)
        assert abs(pixel_auc(scores ** 3, labels) - pixel_auc(scores, labels)) <= 1e-12
        assert abs(pixel_auc(np.log(scores + 1e-3), labels) - pixel_auc(scores, labels)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_complement_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        labels, scores = mixed_labels(25, rng), rng.permutation(25) / 25.0
        assert pixel_auc(1 - scores, labels) == pytest.approx(1 - pixel_auc(scores, labels), abs=1e-15)

    def test_pooled_is_order_invariant(self):
        rng = np.random.default_rng(4)
        scores = [rng.random((4, 4)) for _ in range(5)]
        masks = [mixed_labels(16, rng).reshape(4, 4) for _ in range(5)]
        perm = rng.permutation(5)
        assert pixel_auc(scores, masks) == pixel_auc([scores[i] for i in perm], [masks[i] for i in perm])

    def test_per_image_mean_excludes_single_class(self, caplog):
        good = np.array([[0, 1]]), np.array([[0.1, 0.9]])
        flipped = np.array([[0, 1]]), np.array([[0.9, 0.1]])
        blank = np.array([[0, 0]]), np.array([[0.5, 0.2]])
        masks, scores = zip(good, flipped, blank)
        with caplog.at_level("INFO"):
            assert pixel_auc(list(scores), list(masks), "per_image_mean") == 0.5
        assert "excluded 1" in caplog.text

    def test_per_image_all_single_class(self):
        with pytest.raises(UndefinedAUCError):
            pixel_auc([np.ones((2, 2))], [np.zeros((2, 2))], "per_image_mean")

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            pixel_auc([np.ones((2, 2))], [np.zeros((2, 3))])

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            pixel_auc(np.ones((2, 2)), np.eye(2), "macro")


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    root = tmp_path_factory.mktemp("eval")
    make_synthetic_bases(root / "bases", 3, size=64, seed=9)
    return generate_dataset(root / "bases", root / "ds",
                            SynthConfig(count=6, size=64, region_sizes=(16,), split=(0.0, 0.0, 1.0), seed=2))


class LookupModel(torch.nn.Module):
    """Emits logits whose tampered probability equals a fixed map per input image."""

    def __init__(self, manifest, fn):
        super().__init__()
        self.cfg = ModelConfig.desk(64, 0.125)
        self.table = {}
        for e in manifest.entries:
            img = np.asarray(Image.open(manifest.image_path(e)).convert("RGB"))
            mask = np.asarray(Image.open(manifest.mask_path(e))) > 0
            self.table[img.astype(np.float32).tobytes()] = fn(mask)

    def forward(self, x):
        key = x[0].permute(1, 2, 0).numpy().astype(np.float32).tobytes()
        p = torch.as_tensor(self.table[key], dtype=torch.float64).clamp(1e-6, 1 - 1e-6)
        return torch.stack([torch.log1p(-p), torch.log(p)]).unsqueeze(0)


class TestEvaluate:
    def test_oracle_model_scores_one(self, small):
        report = evaluate(LookupModel(small, lambda m: m.astype(float)), small, "test")
        assert report.auc == 1.0 and report.f1 == 1.0 and report.iou == 1.0
        assert report.n_images == len(small.split("test")) == len(report.per_image_auc)

    def test_constant_model_is_half(self, small):
        report = evaluate(LookupModel(small, lambda m: np.full(m.shape, 0.5)), small, "test")
        assert report.auc == 0.5

    def test_per_image_mode(self, small):
        report = evaluate(LookupModel(small, lambda m: m.astype(float)), small, "test", mode="per_image_mean")
        assert report.auc == 1.0 and report.mode == "per_image_mean"

    def test_order_invariant(self, small):
        model = HRFNet(ModelConfig.desk(64, 0.125))
        torch.manual_seed(0)
        a = evaluate(model, small, "test").auc
        shuffled = DatasetManifest(small.root, small.entries[::-1], small.split_fractions, small.config)
        assert evaluate(model, shuffled, "test").auc == a

    def test_resolution_mismatch(self, small):
        with pytest.raises(DataError):
            evaluate(HRFNet(ModelConfig.desk(96, 0.125)), small, "test")

    def test_empty_split(self, small):
        with pytest.raises(DataError):
            evaluate(HRFNet(ModelConfig.desk(64, 0.125)), small, "val")

    def test_report_roundtrip(self, tmp_path):
        r = MetricsReport(auc=0.75, mode="pooled", n_images=2, per_image_auc=[0.5, None], fps=3.0,
                          memory_mb="unavailable", memory_mode="unavailable")
        assert MetricsReport.load(r.save(tmp_path / "m.json")) == r
        assert json.loads(r.to_json())["auc"] == 0.75

    def test_report_rejects_bad_auc(self):
        with pytest.raises(ValueError):
            MetricsReport(auc=1.5, mode="pooled", n_images=1)


class TestBench:
    @pytest.fixture(scope="class")
    @staticmethod
    def model():
        torch.manual_seed(0)
        return HRFNet(ModelConfig.desk(128, 0.25))

    def test_fps_positive_and_stable(self, model):
        # per-forward times on a shared CPU spread by about 15%, so average enough of them
        a = measure_fps(model, (128, 128), iters=25)
        b = measure_fps(model, (128, 128), iters=50)
        assert a > 0 and b > 0
        assert abs(a - b) / max(a, b) < 0.10

    def test_smaller_input_not_slower(self, model):
        full = measure_fps(model, (128, 128), iters=20)
        half = measure_fps(model, (128, 64), iters=20)
        assert half >= full

    @pytest.mark.parametrize("iters,warmup", [(9, 3), (10, 2)])
    def test_minimum_iterations(self, model, iters, warmup):
        with pytest.raises(ConfigError):
            measure_fps(model, (128, 128), iters=iters, warmup=warmup)

    def test_memory_monotone_and_stable(self):
        small = [measure_memory(ModelConfig.desk(256, 0.25), (256, 256)) for _ in range(2)]
        large = measure_memory(ModelConfig.desk(256, 0.5), (256, 256))
        assert small[0].mode == "cpu_peak_rss"
        assert large.mb > small[0].mb
        assert abs(small[0].mb - small[1].mb) <= 0.05 * max(small[0].mb, small[1].mb)

    def test_memory_baseline_near_zero(self):
        assert measure_memory(None, (64, 64)).mb < 50

    def test_memory_of_model_instance(self, model):
        assert measure_memory(model, (128, 128)).mb > 0

    def test_bench_row_columns(self):
        from hrfnet.evaluation.bench import MemoryResult

        assert bench_row("HRFNet", MemoryResult(12.34, "cpu_peak_rss"), 5.678) == "| HRFNet | 12.3 | 5.68 |"
        assert bench_row("x", MemoryResult("unavailable", "unavailable"), 1.0) == "| x | unavailable | 1.00 |"


class TestRender:
    def sample(self, seed=0, names=("A", "B")):
        rng = np.random.default_rng(seed)
        image = rng.integers(0, 256, (16, 20, 3), dtype=np.uint8)
        gt = (rng.random((16, 20)) > 0.5).astype(np.uint8)
        preds = {n: (rng.random((16, 20)) > 0.5).astype(np.uint8) for n in names}
        return image, gt, preds

    def test_one_sample_two_predictions_is_four_wide(self, tmp_path):
        img = render_comparison([self.sample()], path=tmp_path / "g.png")
        assert img.size == (4 * 20 + 5 * MARGIN, TITLE_HEIGHT + 16 + 2 * MARGIN)
        assert Image.open(tmp_path / "g.png").size == img.size

    def test_grid_size_formula(self):
        img = render_comparison([self.sample(i) for i in range(4)])
        assert img.size == grid_size((16, 20), 4, 4)

    def test_masks_are_pure_black_and_white(self):
        image, gt, preds = self.sample()
        arr = np.asarray(render_comparison([(image, gt, preds)]))
        top, left = TITLE_HEIGHT + MARGIN, MARGIN + 20 + MARGIN
        tile = arr[top:top + 16, left:left + 20]
        assert set(np.unique(tile)) <= {0, 255}
        assert np.array_equal(tile[..., 0] == 255, gt == 1)
        pred_tile = arr[top:top + 16, left + 2 * (20 + MARGIN):left + 2 * (20 + MARGIN) + 20, 0]
        assert np.array_equal(pred_tile == 255, preds["B"] == 1)

    def test_input_tile_exact(self):
        image, gt, preds = self.sample()
        arr = np.asarray(render_comparison([(image, gt, preds)]))
        top = TITLE_HEIGHT + MARGIN
        assert np.array_equal(arr[top:top + 16, MARGIN:MARGIN + 20], image)

    def test_dim_mismatch(self):
        image, gt, preds = self.sample()
        with pytest.raises(ShapeError):
            render_comparison([(image, gt[:-1], preds)])

    def test_inconsistent_columns(self):
        with pytest.raises(ValueError):
            render_comparison([self.sample(0), self.sample(1, names=("A",))])
