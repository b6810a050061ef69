import json
from pathlib import Path

import pytest

from scenefit.cli import main
from scenefit.sceneio import save_scene, save_scene_dir, scene_to_doc
from helpers import box_at, obj, rect_room, rule_based_corpus

FAST_YAML = """\
seed: 11
train:
  epochs: 3
  batch_pairs: 16
  negatives_per_positive: 1
augment:
  variants_per_room: 4
model:
  init_hidden: [32, 32, 32]
  embed_dim: 32
  heads: 4
  head_dim: 8
  proj_hidden: [96, 64, 48]
  proj_dim: 32
  ae_hidden: [24, 16]
  ae_latent: 8
grid:
  cell_size: 0.25
eval:
  folds: 2
  val_fraction: 0.25
"""


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    save_scene_dir(rule_based_corpus(8, seed=5), d)
    return d


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "run.yaml"
    p.write_text(FAST_YAML)
    return p


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory, corpus_dir, cfg_file):
    out = tmp_path_factory.mktemp("models")
    rc = main(["train", "--corpus", str(corpus_dir), "--out", str(out),
               "--groups", "Table", "--config", str(cfg_file)])
    assert rc == 0
    return out


class TestValidate:
    def test_valid_scene_exit_zero(self, tmp_path, capsys):
        save_scene(rect_room(8, 6, [obj("b", "Bed", box_at(2, 2, 2, 1.6, 0.5))]),
                   tmp_path / "ok.json")
        assert main(["validate", str(tmp_path / "ok.json")]) == 0
        assert "ok" in capsys.readouterr().out

    def test_open_loop_exit_two_names_scene(self, tmp_path, capsys):
        doc = scene_to_doc(rect_room(8, 6))
        doc["walls"] = doc["walls"][:-1]
        (tmp_path / "bad.json").write_text(json.dumps(doc))
        assert main(["validate", str(tmp_path / "bad.json")]) == 2
        out = capsys.readouterr().out
        assert "INVALID" in out and "open wall loop" in out

    def test_inverted_bbox_reports_field_path(self, tmp_path, capsys):
        doc = scene_to_doc(rect_room(8, 6, [obj("b", "Bed", box_at(2, 2, 2, 1.6, 0.5))]))
        doc["objects"][0]["bbox"]["min"][0] = 99.0
        (tmp_path / "bad.json").write_text(json.dumps(doc))
        assert main(["validate", str(tmp_path / "bad.json")]) == 2
        assert "objects[0].bbox" in capsys.readouterr().out

    def test_usage_error_exit_one(self, capsys):
        assert main(["validate"]) == 1


class TestAugment:
    def test_deterministic_output_trees(self, tmp_path, corpus_dir, cfg_file, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["augment", "--in", str(corpus_dir), "--out", str(out),
                         "--config", str(cfg_file)]) == 0
        files1 = sorted(p.name for p in (out1 / "scenes").glob("*.json"))
        files2 = sorted(p.name for p in (out2 / "scenes").glob("*.json"))
        assert files1 == files2 and files1
        for name in files1:
            assert (out1 / "scenes" / name).read_bytes() == \
                (out2 / "scenes" / name).read_bytes()
        report = (out1 / "report.txt").read_text()
        for col in ("original", "parametric", "filtered", "removal"):
            assert col in report

    def test_multiplier(self, tmp_path, capsys):
        src = tmp_path / "one"
        save_scene_dir([rect_room(8, 6, [obj("b", "Bed", box_at(2, 2, 3, 2.5, 0.5)),
                                         obj("t", "Table", box_at(5.5, 4, 2.5, 1.8, 0.7))],
                                  scene_id="solo")], src)
        out = tmp_path / "out"
        assert main(["augment", "--in", str(src), "--out", str(out)]) == 0
        report = (out / "report.txt").read_text()
        rooms_row = [l for l in report.splitlines() if l.startswith("Rooms")][0]
        assert rooms_row.split()[1:3] == ["1", "20"]


class TestTrain:
    def test_bundle_layout_and_losses(self, model_dir):
        assert (model_dir / "Table" / "params.bin").exists()
        assert (model_dir / "Table" / "params.json").exists()
        lines = (model_dir / "Table" / "losses.csv").read_text().strip().splitlines()
        assert lines[0] == "stage,epoch,loss"
        siamese = [l for l in lines if l.startswith("siamese")]
        ae = [l for l in lines if l.startswith("autoencoder")]
        assert len(siamese) == 3 and len(ae) == 3

    def test_repeat_training_identical_bundle(self, tmp_path, corpus_dir, cfg_file):
        out2 = tmp_path / "again"
        rc = main(["train", "--corpus", str(corpus_dir), "--out", str(out2),
                   "--groups", "Table", "--config", str(cfg_file)])
        assert rc == 0
        # Compare against a third run into another directory.
        out3 = tmp_path / "third"
        assert main(["train", "--corpus", str(corpus_dir), "--out", str(out3),
                     "--groups", "Table", "--config", str(cfg_file)]) == 0
        assert (out2 / "Table" / "params.bin").read_bytes() == \
            (out3 / "Table" / "params.bin").read_bytes()
        assert (out2 / "Table" / "losses.csv").read_text() == \
            (out3 / "Table" / "losses.csv").read_text()

    def test_group_without_instances_errors(self, tmp_path, corpus_dir, cfg_file,
                                            capsys):
        rc = main(["train", "--corpus", str(corpus_dir), "--out", str(tmp_path),
                   "--groups", "TV", "--config", str(cfg_file)])
        assert rc == 3

    def test_manifest_provenance(self, model_dir):
        meta = json.loads((model_dir / "Table" / "params.json").read_text())["metadata"]
        assert meta["group"] == "Table"
        assert meta["seed"] == 11
        assert "dataset_fingerprint" in meta
        assert meta["train_config"]["epochs"] == 3


class TestPlace:
    def test_outputs_and_topk(self, tmp_path, model_dir, corpus_dir, cfg_file, capsys):
        scene_file = sorted(Path(corpus_dir).glob("*.json"))[0]
        out = tmp_path / "place"
        rc = main(["place", "--models", str(model_dir), "--scene", str(scene_file),
                   "--group", "Table", "--dims", "1.4x0.8x0.75",
                   "--out", str(out), "--config", str(cfg_file), "--k", "3"])
        assert rc == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert printed[0] == "rank,x,y,P"
        assert len(printed) == 4
        csv_lines = (out / "heatmap.csv").read_text().strip().splitlines()
        pgm = (out / "heatmap.pgm").read_bytes()
        assert pgm.startswith(b"P5\n")
        # CSV rows = in-mask cells; top-k coordinates must come from them.
        cells = {tuple(round(float(v), 6) for v in l.split(",")[:2])
                 for l in csv_lines[1:]}
        for line in printed[1:]:
            _, x, y, p = line.split(",")
            assert (round(float(x), 6), round(float(y), 6)) in cells
            assert 0.0 < float(p) <= 1.0

    def test_missing_group_is_data_error(self, tmp_path, model_dir, corpus_dir,
                                         cfg_file, capsys):
        scene_file = sorted(Path(corpus_dir).glob("*.json"))[0]
        rc = main(["place", "--models", str(model_dir), "--scene", str(scene_file),
                   "--group", "TV", "--dims", "1x0.3x0.6", "--out", str(tmp_path)])
        assert rc == 2

    def test_bad_dims_usage_error(self, model_dir, corpus_dir):
        scene_file = sorted(Path(corpus_dir).glob("*.json"))[0]
        rc = main(["place", "--models", str(model_dir), "--scene", str(scene_file),
                   "--group", "Table", "--dims", "1x2"])
        assert rc == 1


class TestEvaluate:
    def test_report_written_and_t5_le_t1(self, tmp_path, corpus_dir, cfg_file, capsys):
        out = tmp_path / "eval"
        rc = main(["evaluate", "--corpus", str(corpus_dir), "--out", str(out),
                   "--groups", "Table", "--config", str(cfg_file)])
        assert rc == 0
        data = json.loads((out / "report.json").read_text())
        g = data["groups"]["Table"]
        assert g["top5_mean"] <= g["top1_mean"] + 1e-12
        assert (out / "report.txt").read_text().startswith("Group")

    def test_determinism(self, tmp_path, corpus_dir, cfg_file):
        outs = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            assert main(["evaluate", "--corpus", str(corpus_dir), "--out", str(out),
                         "--groups", "Table", "--config", str(cfg_file)]) == 0
            outs.append((out / "report.json").read_text())
        assert outs[0] == outs[1]

    def test_too_few_rooms(self, tmp_path, cfg_file, capsys):
        src = tmp_path / "small"
        save_scene_dir([rect_room(8, 6, [obj("t", "Table", box_at(4, 3, 1.4, 0.8, 0.75))],
                                  scene_id="only")], src)
        rc = main(["evaluate", "--corpus", str(src), "--out", str(tmp_path / "o"),
                   "--config", str(cfg_file)])
        assert rc == 3
        assert "need at least" in capsys.readouterr().err


class TestPlaceViaServer:
    def test_thin_client_round_trip(self, tmp_path, model_dir, corpus_dir,
                                    cfg_file, capsys, monkeypatch):
        # Route the CLI's httpx.post through an in-process service instance.
        import httpx
        from fastapi.testclient import TestClient
        from scenefit.service import create_app

        app_client = TestClient(create_app(model_dir=model_dir))
        app_client.__enter__()

        def fake_post(url, json=None, timeout=None):
            path = url.split("http://svc", 1)[1]
            return app_client.post(path, json=json)

        monkeypatch.setattr(httpx, "post", fake_post)
        scene_file = sorted(Path(corpus_dir).glob("*.json"))[0]
        out_local = tmp_path / "local"
        out_remote = tmp_path / "remote"
        rc = main(["place", "--models", str(model_dir), "--scene", str(scene_file),
                   "--group", "Table", "--dims", "1.4x0.8x0.75",
                   "--out", str(out_local), "--config", str(cfg_file), "--k", "3"])
        assert rc == 0
        local_out = capsys.readouterr().out
        rc = main(["place", "--server", "http://svc", "--scene", str(scene_file),
                   "--group", "Table", "--dims", "1.4x0.8x0.75",
                   "--out", str(out_remote), "--config", str(cfg_file), "--k", "3"])
        assert rc == 0
        remote_out = capsys.readouterr().out
        app_client.__exit__(None, None, None)
        assert local_out == remote_out
        assert (out_remote / "heatmap.pgm").read_bytes() == \
            (out_local / "heatmap.pgm").read_bytes()


SAMPLES = Path(__file__).resolve().parent.parent / "sample_scenes"


class TestSampleScenes:
    def test_shipped_examples_validate(self, capsys):
        assert main(["validate", str(SAMPLES)]) == 0
        out = capsys.readouterr().out
        assert out.count("ok ") == 3

    def test_stacked_scene_has_support_relation(self):
        from scenefit.features import FeatureParams, supp_by_counts
        from scenefit.geometry import FurnitureGroup
        from scenefit.sceneio import load_scene

        scene = load_scene(SAMPLES / "stacked_support.json")
        tv = next(o for o in scene.objects if o.id == "tv")
        counts = supp_by_counts(tv, scene, FeatureParams())
        assert counts[FurnitureGroup.Storage.value] == 1
