import math

import numpy as np
import pytest

from scenefit.errors import GeometryError
from scenefit.evaluate import (
    PlacementMap,
    UniformRandomScorer,
    fold_partition,
    map_to_csv,
    map_to_pgm,
    probability_map,
    removal_experiment,
    top_k,
)
from scenefit.geometry import FurnitureGroup
from helpers import box_at, obj, rect_room


class ConstScorer:
    def __init__(self, value=0.5):
        self.value = value

    def score_points(self, scene, group, dims, centers):
        return np.full(len(centers), self.value)


class BumpScorer:
    """Gaussian bumps at given centers."""

    def __init__(self, bumps, width=0.5):
        self.bumps = bumps
        self.width = width

    def score_points(self, scene, group, dims, centers):
        out = np.zeros(len(centers))
        for (bx, by, h) in self.bumps:
            d2 = (centers[:, 0] - bx) ** 2 + (centers[:, 1] - by) ** 2
            out = np.maximum(out, h * np.exp(-d2 / (2 * self.width ** 2)))
        return out


class OracleScorer:
    """1 at the cell nearest the removed object's true center, else ~0."""

    def __init__(self, scenes):
        self.truth = {}
        for s in scenes:
            for o in s.objects:
                self.truth[(s.id, o.group.label)] = o.bbox.centroid_xy

    def score_points(self, scene, group, dims, centers):
        tx, ty = self.truth[(scene.id, group.label)]
        d2 = (centers[:, 0] - tx) ** 2 + (centers[:, 1] - ty) ** 2
        out = np.zeros(len(centers))
        out[np.argmin(d2)] = 1.0
        return out


class TestProbabilityMap:
    def test_grid_covers_room_and_masks_outside(self):
        # L-shaped room: upper-right quadrant missing.
        from scenefit.geometry import Scene, walls_from_loop

        loop = [(0, 0), (8, 0), (8, 4), (4, 4), (4, 8), (0, 8)]
        s = Scene("L", "living room", walls_from_loop(loop), ())
        pmap = probability_map(ConstScorer(), s, FurnitureGroup.Table,
                               (1, 1, 0.7), cell_size=0.5)
        assert pmap.shape == (16, 16)
        assert pmap.mask[:8, :].all() and pmap.mask[8:, :8].all()
        assert not pmap.mask[9:, 9:].any()
        assert (pmap.probs[~pmap.mask] == 0).all()

    def test_probabilities_recorded_in_mask(self):
        s = rect_room(4, 4)
        pmap = probability_map(ConstScorer(0.25), s, FurnitureGroup.Table,
                               (1, 1, 0.7), cell_size=0.5)
        assert (pmap.probs[pmap.mask] == 0.25).all()

    def test_reproducible(self):
        s = rect_room(4, 4)
        a = probability_map(UniformRandomScorer(7), s, FurnitureGroup.Table,
                            (1, 1, 0.7), 0.5)
        b = probability_map(UniformRandomScorer(7), s, FurnitureGroup.Table,
                            (1, 1, 0.7), 0.5)
        np.testing.assert_array_equal(a.probs, b.probs)


class TestTopK:
    def _uniform_map(self):
        s = rect_room(4, 4)
        return probability_map(ConstScorer(1.0), s, FurnitureGroup.Table,
                               (1, 1, 0.7), cell_size=1.0)

    def test_k1_is_argmax(self):
        s = rect_room(6, 6)
        pmap = probability_map(BumpScorer([(4.5, 2.5, 0.9)]), s,
                               FurnitureGroup.Table, (1, 1, 0.7), 0.5)
        [(x, y, p)] = top_k(pmap, 1, nms_radius=0.5)
        assert (x, y) == (4.25, 2.75) or math.hypot(x - 4.5, y - 2.5) < 0.5

    def test_uniform_ties_row_major_with_suppression(self):
        picks = top_k(self._uniform_map(), 3, nms_radius=1.5)
        assert [(x, y) for x, y, _ in picks] == [(0.5, 0.5), (2.5, 0.5), (0.5, 2.5)]

    def test_two_bumps_found(self):
        s = rect_room(10, 6)
        pmap = probability_map(BumpScorer([(2.0, 3.0, 1.0), (8.0, 3.0, 0.8)]),
                               s, FurnitureGroup.Table, (1, 1, 0.7), 0.25)
        picks = top_k(pmap, 2, nms_radius=2.0)
        assert math.hypot(picks[0][0] - 2.0, picks[0][1] - 3.0) < 0.3
        assert math.hypot(picks[1][0] - 8.0, picks[1][1] - 3.0) < 0.3

    def test_probs_nonincreasing_and_separated(self):
        s = rect_room(8, 8)
        pmap = probability_map(UniformRandomScorer(3), s, FurnitureGroup.Table,
                               (1, 1, 0.7), 0.4)
        picks = top_k(pmap, 6, nms_radius=1.0)
        probs = [p for _, _, p in picks]
        assert all(a >= b for a, b in zip(probs, probs[1:]))
        for i in range(len(picks)):
            for j in range(i + 1, len(picks)):
                assert math.hypot(picks[i][0] - picks[j][0],
                                  picks[i][1] - picks[j][1]) >= 1.0

    def test_empty_mask_raises(self):
        pmap = PlacementMap((0, 0), 1.0, np.zeros((2, 2)),
                            np.zeros((2, 2), dtype=bool))
        with pytest.raises(GeometryError):
            top_k(pmap, 1, 1.0)


class TestFoldPartition:
    def test_disjoint_and_sized(self):
        rng = np.random.default_rng(0)
        folds = fold_partition(120, 4, 0.2, rng)
        assert len(folds) == 4
        seen = set()
        for f in folds:
            assert len(f) == 24
            assert not seen & set(f.tolist())
            seen |= set(f.tolist())

    def test_infeasible_partition_rejected(self):
        with pytest.raises(ValueError):
            fold_partition(3, 4, 0.5, np.random.default_rng(0))


def corpus_for_eval(n=10, seed=0):
    rng = np.random.default_rng(seed)
    rooms = []
    for i in range(n):
        bx, by = rng.uniform(2, 8, size=2)
        objs = [obj(f"t{i}", "Table", box_at(bx, by, 1.2, 0.8, 0.75))]
        rooms.append(rect_room(10, 10, objs, scene_id=f"ev{i}"))
    return rooms


class TestRemovalExperiment:
    def test_oracle_scorer_hits_within_discretization(self):
        rooms = corpus_for_eval(8)
        oracle = OracleScorer(rooms)
        report = removal_experiment(rooms, [FurnitureGroup.Table],
                                    lambda tr, g: oracle, folds=4,
                                    val_fraction=0.2, cell_size=0.1, seed=1)
        g = report.groups["Table"]
        bound = 0.1 * math.sqrt(2) / 2
        assert g.top1_mean <= bound + 1e-9
        assert g.top5_mean <= g.top1_mean

    def test_uniform_scorer_top5_not_worse(self):
        rooms = corpus_for_eval(8, seed=3)
        report = removal_experiment(rooms, [FurnitureGroup.Table],
                                    lambda tr, g: UniformRandomScorer(5),
                                    folds=4, val_fraction=0.2, cell_size=0.2,
                                    seed=2)
        g = report.groups["Table"]
        assert g.top5_mean <= g.top1_mean
        assert g.count == 8  # every room visited exactly once across folds

    def test_absent_group_skipped(self, caplog):
        rooms = corpus_for_eval(8)
        with caplog.at_level("WARNING"):
            report = removal_experiment(rooms, [FurnitureGroup.TV],
                                        lambda tr, g: UniformRandomScorer(),
                                        folds=4, val_fraction=0.2,
                                        cell_size=0.2, seed=0)
        assert "TV" not in report.groups
        assert any("TV" in r.message for r in caplog.records)

    def test_validation_never_trained_on(self):
        rooms = corpus_for_eval(10)
        seen_pairs = []

        def spy_train(train_scenes, group):
            seen_pairs.append({s.id for s in train_scenes})
            return UniformRandomScorer()

        removal_experiment(rooms, [FurnitureGroup.Table], spy_train,
                           folds=4, val_fraction=0.2, cell_size=0.25, seed=4)
        all_ids = {s.id for s in rooms}
        for train_ids in seen_pairs:
            val_ids = all_ids - train_ids
            assert len(val_ids) == 2
            assert not train_ids & val_ids


class TestExports:
    def _map(self):
        s = rect_room(3, 2)
        return probability_map(UniformRandomScorer(1), s, FurnitureGroup.Table,
                               (1, 1, 0.7), cell_size=0.5)

    def test_csv_row_count(self, tmp_path):
        pmap = self._map()
        out = tmp_path / "heat.csv"
        map_to_csv(pmap, out)
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "x,y,prob"
        assert len(lines) - 1 == int(pmap.mask.sum())
        x, y, p = lines[1].split(",")
        assert float(p) == pmap.probs[pmap.mask][0]

    def test_pgm_dimensions_and_values(self, tmp_path):
        pmap = self._map()
        out = tmp_path / "heat.pgm"
        map_to_pgm(pmap, out)
        raw = out.read_bytes()
        header, rest = raw.split(b"\n", 1)
        assert header == b"P5"
        dims, rest = rest.split(b"\n", 1)
        assert dims == b"6 4"
        maxval, pixels = rest.split(b"\n", 1)
        assert maxval == b"65535"
        arr = np.frombuffer(pixels, dtype=">u2").reshape(4, 6)
        expected = np.round(pmap.probs * 65535).astype(int)
        np.testing.assert_array_equal(arr[pmap.mask], expected[pmap.mask])

    def test_report_exports(self, tmp_path):
        rooms = corpus_for_eval(8)
        report = removal_experiment(rooms, [FurnitureGroup.Table],
                                    lambda tr, g: UniformRandomScorer(5),
                                    folds=4, val_fraction=0.2, cell_size=0.25,
                                    seed=2)
        from scenefit.evaluate import report_to_json, report_to_text
        report_to_json(report, tmp_path / "r.json")
        report_to_text(report, tmp_path / "r.txt")
        import json
        data = json.loads((tmp_path / "r.json").read_text())
        assert "Table" in data["groups"]
        assert "Table" in (tmp_path / "r.txt").read_text()
