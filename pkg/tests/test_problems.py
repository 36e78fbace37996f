"""Tests for the box, the regression objectives and the synthetic dataset."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.problems.dataset import Dataset, export_dataset, generate_dataset, import_dataset
from src.problems.objectives import (
    Box,
    ObjectiveSet,
    eval_objective,
    make_objective,
    project_box,
    residual_range,
    subgrad,
)


class TestBox:
    def test_geometry(self, box3):
        assert box3.dimension == 3
        assert np.array_equal(box3.center, np.zeros(3))
        assert box3.diameter == pytest.approx(np.sqrt(12.0))
        assert box3.max_norm == pytest.approx(np.sqrt(3.0))

    def test_invalid(self):
        with pytest.raises(ValueError):
            Box(np.array([1.0]), np.array([0.0]))
        with pytest.raises(ValueError):
            Box(np.zeros(2), np.ones(3))

    def test_contains_and_projection(self, box3):
        x = np.array([2.0, -0.5, -3.0])
        assert not box3.contains(x)
        p = project_box(x, box3)
        assert p.tolist() == [1.0, -0.5, -1.0]
        assert box3.contains(p)

    def test_sample_inside(self, box3):
        pts = box3.sample(np.random.default_rng(0), 50)
        assert pts.shape == (50, 3)
        assert all(box3.contains(p) for p in pts)


def test_residual_range():
    box = Box.uniform(-1.0, 1.0, 2)
    assert residual_range(np.array([1.0, -1.0]), 0.5, box) == pytest.approx(2.5)


class TestSingleTerm:
    def test_quadratic_value_and_gradient(self):
        box = Box.uniform(-1.0, 1.0, 2)
        obj = make_objective("quadratic", np.array([1.0, 2.0]), 1.0, 0.5, box)
        x = np.array([1.0, 1.0])
        assert eval_objective(obj, x) == pytest.approx(5.0)
        assert subgrad(obj, x).tolist() == pytest.approx([2 * 2 * 1 + 1, 2 * 2 * 2 + 1])
        assert obj.mu == 1.0

    def test_absolute_kink_uses_zero(self):
        box = Box.uniform(-1.0, 1.0, 2)
        obj = make_objective("absolute", np.array([1.0, 1.0]), 2.0, 0.25, box)
        x = np.array([1.0, 1.0])
        assert eval_objective(obj, x) == pytest.approx(0.5)
        assert subgrad(obj, x).tolist() == pytest.approx([0.5, 0.5])

    def test_invalid_kind_and_reg(self):
        box = Box.uniform(-1.0, 1.0, 1)
        with pytest.raises(ValueError):
            make_objective("huber", np.ones(1), 0.0, 0.0, box)
        with pytest.raises(ValueError):
            make_objective("absolute", np.ones(1), 0.0, -0.1, box)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000), loss=st.sampled_from(["quadratic", "absolute"]), reg=st.floats(0.0, 1.0))
    def test_lipschitz_bound_holds(self, seed, loss, reg):
        rng = np.random.default_rng(seed)
        box = Box.uniform(-1.0, 1.0, 3)
        obj = make_objective(loss, rng.random(3), float(rng.random()), reg, box)
        for x in box.sample(rng, 20):
            assert np.linalg.norm(subgrad(obj, x)) <= obj.L + 1e-12
        corner = np.where(obj.a >= 0, box.upper, box.lower)
        assert np.linalg.norm(subgrad(obj, corner)) <= obj.L + 1e-12


class TestObjectiveSet:
    def _make(self, loss="quadratic", reg=0.1):
        rng = np.random.default_rng(4)
        box = Box.uniform(-1.0, 1.0, 3)
        return ObjectiveSet(loss, rng.random((5, 3)), rng.random(5), reg, box), rng

    @pytest.mark.parametrize("loss", ["quadratic", "absolute"])
    def test_matches_single_terms(self, loss):
        objs, rng = self._make(loss)
        X = objs.box.sample(rng, 5)
        terms = objs.objectives()
        assert objs.local_values(X) == pytest.approx([eval_objective(t, x) for t, x in zip(terms, X)])
        assert np.allclose(objs.subgrads(X), [subgrad(t, x) for t, x in zip(terms, X)])
        z = X[0]
        assert objs.total(z) == pytest.approx(sum(eval_objective(t, z) for t in terms))
        assert np.allclose(objs.total_gradient(z), sum(subgrad(t, z) for t in terms))

    def test_constants(self):
        objs, _ = self._make(reg=0.05)
        assert objs.n == 5 and objs.d == 3
        assert objs.mu == pytest.approx(0.1)
        assert objs.L_total == pytest.approx(sum(t.L for t in objs.objectives()))

    def test_totals_rows(self):
        objs, rng = self._make()
        Z = objs.box.sample(rng, 4)
        assert objs.totals(Z) == pytest.approx([objs.total(z) for z in Z])

    def test_from_objectives(self):
        objs, _ = self._make()
        rebuilt = ObjectiveSet.from_objectives(objs.objectives(), objs.box)
        assert np.array_equal(rebuilt.features, objs.features)
        with pytest.raises(ValueError):
            ObjectiveSet.from_objectives([], objs.box)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ObjectiveSet("quadratic", np.ones((2, 3)), np.ones(2), 0.0, Box.uniform(-1, 1, 2))
        with pytest.raises(ValueError):
            ObjectiveSet("quadratic", np.ones((2, 2)), np.ones(3), 0.0, Box.uniform(-1, 1, 2))


class TestConvexity:
    """Oracle properties checked in bulk: 100 terms x 1000 batches of point pairs."""

    @pytest.mark.parametrize("reg", [0.0, 0.3])
    @pytest.mark.parametrize("loss", ["quadratic", "absolute"])
    def test_subgradient_inequality(self, loss, reg):
        # with mu = 2 reg: f_i(y) >= f_i(x) + g_i(x).(y - x) + reg ||y - x||^2
        rng = np.random.default_rng(11)
        box = Box.uniform(-1.0, 1.0, 4)
        objs = ObjectiveSet(loss, rng.random((100, 4)), rng.random(100), reg, box)
        worst = np.inf
        for _ in range(1000):
            X, Y = box.sample(rng, 100), box.sample(rng, 100)
            diff = Y - X
            lower = objs.local_values(X) + np.einsum("ij,ij->i", objs.subgrads(X), diff)
            slack = objs.local_values(Y) - lower - reg * np.einsum("ij,ij->i", diff, diff)
            worst = min(worst, slack.min())
        assert worst >= -1e-10

    @pytest.mark.parametrize("loss", ["quadratic", "absolute"])
    def test_central_differences(self, loss):
        rng = np.random.default_rng(12)
        box = Box.uniform(-1.0, 1.0, 4)
        objs = ObjectiveSet(loss, rng.random((100, 4)), rng.random(100), 0.1, box)
        h = 1e-5
        X = box.sample(rng, 100)
        # keep every row clear of its kink for the absolute loss
        residual = np.einsum("ij,ij->i", X, objs.features) - objs.labels
        keep = np.abs(residual) > 1e-3
        X = X[keep]
        sub = ObjectiveSet(loss, objs.features[keep], objs.labels[keep], objs.reg, box)
        numeric = np.empty_like(X)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            numeric[:, j] = (sub.local_values(X + e) - sub.local_values(X - e)) / (2.0 * h)
        assert np.allclose(sub.subgrads(X), numeric, atol=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=3),
        y=st.lists(st.floats(-10.0, 10.0), min_size=3, max_size=3),
    )
    def test_projection_nonexpansive_and_idempotent(self, x, y):
        box = Box(np.array([-1.0, 0.0, -0.5]), np.array([1.0, 2.0, 0.5]))
        x, y = np.array(x), np.array(y)
        px, py = project_box(x, box), project_box(y, box)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
        assert np.array_equal(project_box(px, box), px)
        assert box.contains(px)


class TestDataset:
    def test_deterministic(self):
        a = generate_dataset(10, 4, seed=3)
        b = generate_dataset(10, 4, seed=3)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)
        assert a.features.shape == (10, 4)
        assert np.all((a.features >= 0) & (a.features < 1))

    def test_samples(self):
        data = generate_dataset(3, 2, seed=0)
        (a0, b0), *_ = data.samples()
        assert np.array_equal(a0, data.features[0])
        assert b0 == data.labels[0]

    def test_export_import_exact(self, tmp_path):
        data = generate_dataset(8, 3, seed=5)
        path = export_dataset(data, tmp_path / "data.txt")
        back = import_dataset(path)
        assert np.array_equal(back.features, data.features)
        assert np.array_equal(back.labels, data.labels)

    def test_import_rejects_bad_files(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        ragged = tmp_path / "ragged.txt"
        ragged.write_text("0.1 0.2 0.3\n0.4 0.5\n")
        for path in (empty, ragged):
            with pytest.raises(ValueError):
                import_dataset(path)

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            generate_dataset(0, 3, seed=0)
        assert isinstance(Dataset(np.ones((1, 1)), np.ones(1)).n, int)
