"""Intersection enumeration, weight formula, and representation correlation."""

import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import make_manifest
from fairaug.errors import DataError
from fairaug.intersections import (
    IntersectionKey,
    compute_class_weights,
    enumerate_intersections,
    representation_correlation,
)
from fairaug.manifest import EnvAttributes, Manifest, SampleRecord


def manifest_with_counts(class_counts, split="train"):
    """One sample per count; env fixed to (low, simple)."""
    samples = []
    i = 0
    for label, n in class_counts.items():
        for _ in range(n):
            samples.append(
                SampleRecord(
                    f"s{i}", f"{i}.png", label, split,
                    EnvAttributes.from_scores(40.0, 0.05),
                )
            )
            i += 1
    return Manifest.from_samples(samples)


class TestEnumerate:
    def test_five_classes_give_twenty_cells(self):
        spec = [(f"s{i}", f"c{i % 5}", "train", "low", "simple") for i in range(10)]
        stats = enumerate_intersections(make_manifest(spec), "train")
        assert len(stats) == 20
        assert sum(s.count for s in stats) == 10
        assert math.fsum(s.proportion for s in stats) == pytest.approx(1.0, abs=1e-12)

    def test_single_condition_toy_set(self):
        spec = [("a", "x", "train", "low", "simple"),
                ("b", "x", "train", "low", "simple"),
                ("c", "y", "val", "low", "simple")]
        stats = enumerate_intersections(make_manifest(spec), "train")
        populated = [s for s in stats if s.count > 0]
        assert len(populated) == 1
        assert populated[0].key == IntersectionKey("x", "low", "simple")
        assert populated[0].proportion == 1.0

    def test_underrepresented_cell_proportion(self):
        # 59 samples in one cell of a 4892-sample split
        spec = [(f"r{i}", "rare", "train", "low", "complex") for i in range(59)]
        spec += [(f"c{i}", "common", "train", "high", "simple") for i in range(4892 - 59)]
        stats = enumerate_intersections(make_manifest(spec), "train")
        rare = next(s for s in stats if s.key.class_label == "rare" and s.count > 0)
        assert rare.proportion == pytest.approx(0.01206, abs=5e-6)
        assert rare.proportion * 100 == pytest.approx(1.21, abs=0.01)

    def test_missing_env_names_samples(self):
        m = Manifest.from_samples([
            SampleRecord("a", "a.png", "x", "train"),
            SampleRecord("b", "b.png", "y", "train",
                         EnvAttributes.from_scores(40.0, 0.05)),
        ])
        with pytest.raises(DataError, match="a"):
            enumerate_intersections(m, "train")

    def test_counts_partition_split(self):
        rng = np.random.default_rng(17)
        spec = []
        for i in range(300):
            spec.append((
                f"s{i}",
                f"c{rng.integers(0, 4)}",
                "train",
                ("low", "high")[rng.integers(0, 2)],
                ("simple", "complex")[rng.integers(0, 2)],
            ))
        m = make_manifest(spec)
        stats = enumerate_intersections(m, "train")
        assert sum(s.count for s in stats) == 300


class TestWeights:
    def test_uniform_counts_weight_one(self):
        w = compute_class_weights(manifest_with_counts({"a": 7, "b": 7, "c": 7}))
        assert all(v == 1.0 for v in w.weights.values())

    def test_reported_training_counts(self):
        counts = {"Person": 1203, "Cat": 845, "Dog": 978, "Chair": 1024, "Table": 842}
        w = compute_class_weights(manifest_with_counts(counts))
        # oracle: exact rational evaluation of N / (n * C)
        n_total = sum(counts.values())
        for label, n in counts.items():
            exact = float(Fraction(n_total, n * len(counts)))
            assert w[label] == pytest.approx(exact, abs=1e-12)
        assert w["Person"] == pytest.approx(0.8133, abs=1e-4)
        assert w["Table"] == pytest.approx(1.1620, abs=1e-4)

    def test_two_class_hand_values(self):
        w = compute_class_weights(manifest_with_counts({"big": 9, "small": 1}))
        assert w["big"] == pytest.approx(0.5555555555555556, abs=1e-12)
        assert w["small"] == pytest.approx(5.0, abs=1e-12)

    def test_weight_identity(self):
        rng = np.random.default_rng(3)
        counts = {f"c{i}": int(rng.integers(1, 400)) for i in range(6)}
        w = compute_class_weights(manifest_with_counts(counts))
        n_total = sum(counts.values())
        for label, n in counts.items():
            assert n * w[label] == pytest.approx(n_total / len(counts), abs=1e-9)

    def test_scaling_invariance(self):
        base = {"a": 3, "b": 5, "c": 9}
        scaled = {k: 7 * v for k, v in base.items()}
        w1 = compute_class_weights(manifest_with_counts(base))
        w2 = compute_class_weights(manifest_with_counts(scaled))
        for label in base:
            assert w2[label] == pytest.approx(w1[label], abs=1e-12)

    def test_monotone_in_count(self):
        w = compute_class_weights(manifest_with_counts({"a": 2, "b": 5, "c": 11}))
        assert w["a"] > w["b"] > w["c"]

    def test_empty_class_rejected(self):
        m = Manifest(
            labels=("a", "b"),
            samples=(
                SampleRecord("s0", "0.png", "a", "train",
                             EnvAttributes.from_scores(40.0, 0.05)),
            ),
        )
        with pytest.raises(DataError, match="b"):
            compute_class_weights(m)


class TestRepresentationCorrelation:
    def _stats(self, proportions):
        spec = []
        i = 0
        for j, n in enumerate(proportions):
            for _ in range(n):
                spec.append((f"s{i}", f"c{j}", "train", "low", "simple"))
                i += 1
        return enumerate_intersections(make_manifest(spec), "train")

    def test_perfectly_linear(self):
        stats = self._stats([10, 20, 30])
        acc = {s.key: 0.1 + 2.0 * s.proportion for s in stats if s.count > 0}
        r, p = representation_correlation(stats, acc)
        assert r == 1.0

    def test_perfectly_anticorrelated(self):
        stats = self._stats([10, 20, 30])
        acc = {s.key: 0.9 - 0.5 * s.proportion for s in stats if s.count > 0}
        r, _ = representation_correlation(stats, acc)
        assert r == -1.0

    def test_matches_direct_covariance_formula(self):
        rng = np.random.default_rng(8)
        counts = [int(rng.integers(1, 50)) for _ in range(20)]
        stats = self._stats(counts)
        populated = [s for s in stats if s.count > 0]
        acc = {s.key: float(rng.uniform(0.4, 1.0)) for s in populated}
        r, _ = representation_correlation(stats, acc)
        xs = np.array([s.proportion for s in populated])
        ys = np.array([acc[s.key] for s in populated])
        expected = float(
            ((xs - xs.mean()) * (ys - ys.mean())).sum()
            / math.sqrt(((xs - xs.mean()) ** 2).sum() * ((ys - ys.mean()) ** 2).sum())
        )
        assert r == pytest.approx(expected, abs=1e-12)

    def test_too_few_cells(self):
        stats = self._stats([5, 5])  # only two populated cells
        acc = {s.key: 0.5 for s in stats if s.count > 0}
        with pytest.raises(DataError, match="at least 3"):
            representation_correlation(stats, acc)
