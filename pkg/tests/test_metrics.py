import helpers
import numpy as np
import pytest

from vimu.errors import ValidationError
from vimu.metrics import (
    ConfusionMatrix,
    accuracy,
    confusion,
    confusion_table,
    f1_micro,
    metrics_report,
    one_vs_rest_counts,
    per_class_precision_recall,
    plain_accuracy,
)


class TestConfusion:
    def test_perfect_predictions_are_diagonal(self):
        preds = [0, 1, 2, 1, 0]
        cm = confusion(preds, preds, 3)
        np.testing.assert_array_equal(cm.counts, np.diag([2, 2, 1]))

    def test_empty_lists_give_zero_matrix(self):
        cm = confusion([], [], 3)
        np.testing.assert_array_equal(cm.counts, np.zeros((3, 3), dtype=np.int64))

    def test_hand_tallied_pairs(self):
        truths = [0, 0, 1, 2, 2, 2]
        preds = [0, 1, 1, 2, 0, 2]
        cm = confusion(preds, truths, 3)
        np.testing.assert_array_equal(
            cm.counts, [[1, 1, 0], [0, 1, 0], [1, 0, 2]]
        )

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="length"):
            confusion([0, 1], [0], 2)

    def test_out_of_range_label_rejected(self):
        with pytest.raises(ValidationError, match="outside"):
            confusion([0, 3], [0, 1], 3)

    def test_merge_is_entrywise_sum(self):
        a = confusion([0, 1], [0, 1], 2)
        b = confusion([1, 1], [0, 1], 2)
        np.testing.assert_array_equal(a.merged_with(b).counts, a.counts + b.counts)


class TestAccuracy:
    def test_all_correct_is_one_under_both_conventions(self):
        cm = ConfusionMatrix(np.diag([4, 3, 5]))
        assert accuracy(cm) == 1.0
        assert plain_accuracy(cm) == 1.0

    def test_binary_case_equals_plain_accuracy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            cm = ConfusionMatrix(rng.integers(0, 9, size=(2, 2)) + 1)
            assert accuracy(cm) == pytest.approx(plain_accuracy(cm), abs=1e-15)

    def test_three_class_single_error_case(self):
        # 4 samples, 1 error: plain accuracy 0.75, one-vs-rest value from the
        # brute-force counting oracle
        cm = ConfusionMatrix([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
        oracle_acc, _ = helpers.one_vs_rest_oracle(cm.counts)
        assert plain_accuracy(cm) == 0.75
        assert accuracy(cm) == pytest.approx(oracle_acc, abs=1e-15)
        assert accuracy(cm) > plain_accuracy(cm)

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            accuracy(ConfusionMatrix(np.zeros((3, 3), dtype=int)))


class TestF1Micro:
    def test_perfect_predictions_score_one(self):
        assert f1_micro(ConfusionMatrix(np.diag([2, 2, 2]))) == 1.0

    def test_equals_trace_over_total_always(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            cn = int(rng.integers(2, 7))
            counts = rng.integers(0, 20, size=(cn, cn))
            if counts.sum() == 0:
                counts[0, 0] = 1
            cm = ConfusionMatrix(counts)
            assert f1_micro(cm) == plain_accuracy(cm)

    def test_matches_counting_oracle_on_random_matrices(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            cn = int(rng.integers(2, 7))
            counts = rng.integers(0, 15, size=(cn, cn))
            if counts.sum() == 0:
                counts[1, 0] = 3
            cm = ConfusionMatrix(counts)
            oracle_acc, oracle_f1 = helpers.one_vs_rest_oracle(counts)
            assert accuracy(cm) == pytest.approx(oracle_acc, abs=1e-15)
            assert f1_micro(cm) == pytest.approx(oracle_f1, abs=1e-15)


class TestProperties:
    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        counts = rng.integers(0, 10, size=(4, 4)) + 1
        cm = ConfusionMatrix(counts)
        perm = rng.permutation(4)
        permuted = ConfusionMatrix(counts[np.ix_(perm, perm)])
        assert accuracy(permuted) == pytest.approx(accuracy(cm), abs=1e-15)
        assert plain_accuracy(permuted) == pytest.approx(plain_accuracy(cm), abs=1e-15)
        assert f1_micro(permuted) == pytest.approx(f1_micro(cm), abs=1e-15)

    def test_metrics_bounded_and_one_iff_diagonal(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            counts = rng.integers(0, 6, size=(3, 3))
            if counts.sum() == 0:
                counts[0, 1] = 1
            cm = ConfusionMatrix(counts)
            for value in (accuracy(cm), plain_accuracy(cm), f1_micro(cm)):
                assert 0.0 <= value <= 1.0
            diagonal = counts.sum() == np.trace(counts)
            assert (plain_accuracy(cm) == 1.0) == diagonal
            assert (f1_micro(cm) == 1.0) == diagonal
            assert (accuracy(cm) == 1.0) == diagonal

    def test_one_vs_rest_counts_read(self):
        cm = ConfusionMatrix([[5, 1], [2, 4]])
        tp, fp, tn, fn = one_vs_rest_counts(cm)
        np.testing.assert_array_equal(tp, [5, 4])
        np.testing.assert_array_equal(fp, [2, 1])
        np.testing.assert_array_equal(fn, [1, 2])
        np.testing.assert_array_equal(tn, [4, 5])


class TestReporting:
    def test_report_fields(self):
        cm = confusion([0, 1, 1, 2], [0, 1, 2, 2], 3)
        report = metrics_report(cm, ["a", "b", "c"])
        assert report["class_count"] == 3
        assert report["total_windows"] == 4
        assert report["plain_accuracy"] == 0.75
        assert len(report["per_class"]) == 3
        assert report["per_class"][1]["name"] == "b"

    def test_per_class_precision_recall(self):
        cm = ConfusionMatrix([[3, 1], [0, 2]])
        precision, recall, support = per_class_precision_recall(cm)
        np.testing.assert_allclose(precision, [1.0, 2 / 3])
        np.testing.assert_allclose(recall, [0.75, 1.0])
        np.testing.assert_array_equal(support, [4, 2])

    def test_confusion_table_layout(self):
        cm = ConfusionMatrix([[2, 0], [1, 3]])
        text = confusion_table(cm, ["x", "y"])
        lines = text.strip().splitlines()
        assert lines[0].split("\t") == ["true\\pred", "x", "y"]
        assert lines[1].split("\t") == ["x", "2", "0"]
        assert lines[2].split("\t") == ["y", "1", "3"]

    def test_heatmap_renders_png(self, tmp_path):
        from vimu.metrics import render_heatmap

        cm = confusion([0, 1, 1], [0, 0, 1], 2)
        out = tmp_path / "cm.png"
        render_heatmap(cm, out, ["a", "b"])
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
