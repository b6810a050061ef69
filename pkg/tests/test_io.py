import numpy as np
import pytest

from scenefit.bundle import (
    bundle_manifest,
    dataset_fingerprint,
    load_group_model,
    load_model_bundle,
    save_group_model,
    save_model_bundle,
)
from scenefit.config import ENV_CONFIG, RunConfig, config_from_dict, load_config
from scenefit.errors import SchemaError
from scenefit.features import Standardizer
from scenefit.geometry import FurnitureGroup
from scenefit.model import GroupModel, ModelDims
from scenefit.sceneio import (
    load_scene,
    load_scene_dir,
    save_scene,
    save_scene_dir,
    scene_from_doc,
    scene_to_doc,
)
from helpers import box_at, obj, random_scene, rect_room


def valid_doc():
    return {
        "schema_version": 1,
        "id": "bedroom_01",
        "room_type": "bedroom",
        "walls": [[0, 0], [5, 0], [5, 4], [0, 4], [0, 0]],
        "objects": [
            {"id": "bed0", "group": "Bed",
             "bbox": {"min": [0.1, 0.1, 0.0], "max": [2.1, 1.7, 0.6]}},
        ],
    }


class TestSceneSchema:
    def test_valid_document(self):
        s = scene_from_doc(valid_doc())
        assert s.id == "bedroom_01"
        assert len(s.walls) == 4
        assert s.objects[0].group is FurnitureGroup.Bed

    def test_open_loop_rejected(self):
        doc = valid_doc()
        doc["walls"] = doc["walls"][:-1]
        with pytest.raises(SchemaError, match="open wall loop"):
            scene_from_doc(doc)

    def test_inverted_bbox_names_field(self):
        doc = valid_doc()
        doc["objects"][0]["bbox"]["min"] = [3.0, 0.1, 0.0]
        with pytest.raises(SchemaError, match=r"objects\[0\].bbox: min\[0\] > max\[0\]"):
            scene_from_doc(doc)

    def test_unknown_group_rejected(self):
        doc = valid_doc()
        doc["objects"][0]["group"] = "Lamp"
        with pytest.raises(SchemaError, match="unknown furniture group"):
            scene_from_doc(doc)

    def test_unknown_keys_rejected(self):
        doc = valid_doc()
        doc["color"] = "blue"
        with pytest.raises(SchemaError, match="unknown keys"):
            scene_from_doc(doc)

    def test_self_intersecting_polygon_rejected(self):
        doc = valid_doc()
        doc["walls"] = [[0, 0], [2, 2], [2, 0], [0, 2], [0, 0]]
        doc["objects"] = []
        with pytest.raises(SchemaError, match="self-intersecting"):
            scene_from_doc(doc)

    def test_round_trip(self):
        s = random_scene(np.random.default_rng(0), n_objects=4)
        doc = scene_to_doc(s)
        back = scene_from_doc(doc)
        assert scene_to_doc(back) == doc

    def test_file_round_trip(self, tmp_path):
        s = random_scene(np.random.default_rng(1), n_objects=3)
        save_scene(s, tmp_path / "scene.json")
        back = load_scene(tmp_path / "scene.json")
        assert scene_to_doc(back) == scene_to_doc(s)

    def test_missing_file_is_schema_error(self, tmp_path):
        with pytest.raises(SchemaError, match="cannot read"):
            load_scene(tmp_path / "nope.json")

    def test_scene_dir_sorted(self, tmp_path):
        scenes = [random_scene(np.random.default_rng(i), n_objects=2,
                               scene_id=f"s{i}") for i in range(3)]
        save_scene_dir(scenes, tmp_path)
        loaded = load_scene_dir(tmp_path)
        assert [s.id for s in loaded] == ["s0", "s1", "s2"]


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({})
        assert cfg.train.epochs == 100
        assert cfg.train.batch_pairs == 100
        assert cfg.train.lr == 0.005
        assert cfg.train.l2_siamese == 1.0
        assert cfg.train.margin == 15.0
        assert cfg.augment.variants_per_room == 20
        assert cfg.feature.rho_fraction == 0.2
        assert cfg.grid.cell_size == 0.1

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(SchemaError, match="train"):
            config_from_dict({"train": {"eppochs": 10}})
        with pytest.raises(SchemaError, match="unknown keys"):
            config_from_dict({"trian": {}})

    def test_global_seed_propagates(self):
        cfg = config_from_dict({"seed": 17})
        assert cfg.seed == 17
        assert cfg.train.seed == 17
        assert cfg.augment.seed == 17

    def test_explicit_section_seed_wins(self):
        cfg = config_from_dict({"seed": 17, "train": {"seed": 3}})
        assert cfg.train.seed == 3
        assert cfg.augment.seed == 17

    def test_yaml_file_and_env_fallback(self, tmp_path, monkeypatch):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 5\ntrain:\n  epochs: 7\nmodel:\n  embed_dim: 32\n"
                        "  heads: 4\n  head_dim: 8\n  init_hidden: [32, 32, 32]\n"
                        "  proj_hidden: [96, 64, 48]\n  proj_dim: 32\n"
                        "  ae_hidden: [24, 16]\n  ae_latent: 8\n")
        cfg = load_config(path)
        assert cfg.train.epochs == 7
        assert cfg.model.embed_dim == 32
        monkeypatch.setenv(ENV_CONFIG, str(path))
        assert load_config(None).train.epochs == 7
        monkeypatch.delenv(ENV_CONFIG)
        assert load_config(None) == RunConfig()

    def test_bad_value_reported(self):
        with pytest.raises(SchemaError, match="grid"):
            config_from_dict({"grid": {"cell_size": -1}})


class TestBundles:
    def _model(self):
        model = GroupModel.create(FurnitureGroup.Chair, seed=4, dims=ModelDims.small())
        rng = np.random.default_rng(2)
        model.standardizer = Standardizer.fit(rng.normal(size=(10, 48)))
        return model

    def test_round_trip_bitwise(self, tmp_path):
        model = self._model()
        save_group_model(model, tmp_path / "Chair", {"note": "test"})
        loaded = load_group_model(tmp_path / "Chair")
        assert loaded.group is model.group
        assert loaded.dims == model.dims
        for (n1, t1), (n2, t2) in zip(model.named_parameters(),
                                      loaded.named_parameters()):
            assert n1 == n2
            np.testing.assert_array_equal(t1.data, t2.data)
        np.testing.assert_array_equal(loaded.standardizer.mean,
                                      model.standardizer.mean)
        assert bundle_manifest(tmp_path / "Chair")["note"] == "test"

    def test_reload_reproduces_scores(self, tmp_path):
        model = self._model()
        s = rect_room(8, 8, [obj("c", "Chair", box_at(4, 4, 0.5, 0.5, 0.9))])
        save_group_model(model, tmp_path / "Chair")
        loaded = load_group_model(tmp_path / "Chair")
        for center in [(2.0, 2.0), (6.0, 3.0), (4.0, 5.5)]:
            y1 = model.project(s, (0.5, 0.5, 0.9), center)
            y2 = loaded.project(s, (0.5, 0.5, 0.9), center)
            np.testing.assert_array_equal(y1, y2)
            assert model.plausibility(y1) == loaded.plausibility(y2)

    def test_multi_group_bundle(self, tmp_path):
        models = {FurnitureGroup.Chair: self._model()}
        save_model_bundle(models, tmp_path)
        loaded = load_model_bundle(tmp_path)
        assert set(loaded) == {FurnitureGroup.Chair}

    def test_missing_bundle_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            load_model_bundle(tmp_path / "empty")

    def test_unfitted_model_refused(self, tmp_path):
        model = GroupModel.create(FurnitureGroup.Chair, dims=ModelDims.small())
        with pytest.raises(SchemaError, match="standardizer"):
            save_group_model(model, tmp_path / "Chair")

    def test_fingerprint_stable_and_sensitive(self):
        rng = np.random.default_rng(3)
        scenes = [random_scene(rng, n_objects=3, scene_id=f"fp{i}") for i in range(3)]
        f1 = dataset_fingerprint(scenes)
        f2 = dataset_fingerprint(list(reversed(scenes)))
        assert f1 == f2  # order independent
        other = [scenes[0].without(scenes[0].objects[0].id)] + scenes[1:]
        assert dataset_fingerprint(other) != f1
