import json

import numpy as np
import pytest

import synthmap
from maptext import ingest
from maptext.cli import main
from maptext.fcm import FcmConfig
from maptext.gridfilter import GridSpec
from maptext.pipeline import PipelineConfig, config_to_json, run_pipeline
from maptext.raster import RgbImage


@pytest.fixture(scope="module")
def fixture_map(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    m = synthmap.generate_map(3)
    path = root / "map.png"
    ingest.save_image(RgbImage(m.rgb_array()), path)
    return m, path


def corpus_config():
    return PipelineConfig(
        fcm=FcmConfig(k=2, seed=7), area_threshold=60, grid=GridSpec(passes=())
    )


def run(capsys, *argv) -> tuple:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExtract:
    def test_golden_output(self, fixture_map, tmp_path, capsys):
        m, path = fixture_map
        out = tmp_path / "text.png"
        code, stdout, _ = run(
            capsys,
            "extract", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--threshold", "60", "--grid", "none", "--out", str(out),
        )
        assert code == 0
        golden = run_pipeline(RgbImage(m.rgb_array()), corpus_config()).planes["i_f"]
        reloaded = ingest.load_image(out)  # gray PNG replicates across channels
        assert np.array_equal(reloaded.pixels[:, :, 0], golden.pixels)
        summary = json.loads(stdout)
        assert set(summary) == {"component_count", "foreground_area", "j_m", "iterations"}

    def test_threshold_zero_is_usage_error(self, fixture_map, capsys):
        _, path = fixture_map
        code, _, err = run(capsys, "extract", "--input", str(path), "--threshold", "0")
        assert code == 2

    def test_missing_input_file(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "extract", "--input", str(tmp_path / "nope.png"), "--threshold", "10"
        )
        assert code == 1

    def test_dump_stages_writes_eight_pngs(self, fixture_map, tmp_path, capsys):
        _, path = fixture_map
        d = tmp_path / "stages"
        code, _, _ = run(
            capsys,
            "extract", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--threshold", "60", "--grid", "none", "--dump-stages", str(d),
        )
        assert code == 0
        assert sorted(p.name for p in d.iterdir()) == sorted(
            f"{n}.png" for n in ("i_rgb", "i_gray", "i_mask", "i_e", "i_d", "i_mcc", "i_o", "i_f")
        )

    def test_config_file_with_flag_override(self, fixture_map, tmp_path, capsys):
        _, path = fixture_map
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_json(corpus_config())))
        out1 = tmp_path / "a.png"
        out2 = tmp_path / "b.png"
        code1, s1, _ = run(
            capsys, "extract", "--input", str(path), "--config", str(cfg_path),
            "--threshold", "90", "--out", str(out1),
        )
        code2, s2, _ = run(
            capsys, "extract", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--threshold", "90", "--grid", "none", "--out", str(out2),
        )
        assert code1 == code2 == 0
        assert s1 == s2
        assert out1.read_bytes() == out2.read_bytes()

    def test_byte_stable_stdout(self, fixture_map, capsys):
        _, path = fixture_map
        args = ("extract", "--input", str(path), "--clusters", "2", "--seed", "7",
                "--threshold", "60", "--grid", "none")
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b

    def test_rounds_flag(self, fixture_map, tmp_path, capsys):
        _, path = fixture_map
        code, stdout, _ = run(
            capsys,
            "extract", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--rounds", "400:3;410:", "--out", str(tmp_path / "r.png"),
        )
        assert code == 0


class TestSweep:
    def test_range_semantics_end_exclusive(self, fixture_map, capsys):
        _, path = fixture_map
        code, stdout, _ = run(
            capsys,
            "sweep", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--grid", "none", "--t-range", "100:300:100",
        )
        assert code == 0
        lines = stdout.strip().splitlines()
        assert lines[0] == "t,component_count,foreground_area"
        assert [l.split(",")[0] for l in lines[1:]] == ["100", "200"]

    def test_t_list_two_values(self, fixture_map, tmp_path, capsys):
        _, path = fixture_map
        out_dir = tmp_path / "sweep"
        code, stdout, _ = run(
            capsys,
            "sweep", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--grid", "none", "--t-list", "400,410", "--out-dir", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "sweep.csv").exists()
        assert (out_dir / "i_f_t400.png").exists()
        assert (out_dir / "i_f_t410.png").exists()

    def test_empty_list_usage_error(self, fixture_map, capsys):
        _, path = fixture_map
        code, _, _ = run(capsys, "sweep", "--input", str(path), "--t-list", "")
        assert code == 2

    def test_partial_failures_continue(self, fixture_map, capsys):
        _, path = fixture_map
        code, stdout, err = run(
            capsys,
            "sweep", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--grid", "none", "--t-list", "60,999999",
        )
        assert code == 0
        assert "999999" in err  # logged failure
        assert "999999" not in stdout

    def test_all_fail_exit_one(self, fixture_map, capsys):
        _, path = fixture_map
        code, _, _ = run(
            capsys,
            "sweep", "--input", str(path), "--clusters", "2", "--seed", "7",
            "--t-list", "999999",
        )
        assert code == 1


class TestEval:
    def make_stage_dump(self, tmp_path, index=4):
        m = synthmap.generate_map(index)
        img_path = tmp_path / f"{m.name}.png"
        ingest.save_image(RgbImage(m.rgb_array()), img_path)
        stages = run_pipeline(RgbImage(m.rgb_array()), corpus_config())
        d = tmp_path / m.name
        d.mkdir()
        for name in ("i_rgb", "i_gray", "i_mask", "i_e", "i_d", "i_mcc", "i_o", "i_f"):
            ingest.save_image(stages.planes[name], d / f"{name}.png")
        truth_path = tmp_path / f"{m.name}.json"
        truth_path.write_text(json.dumps(m.ground_truth))
        return m, d, truth_path

    def test_perfect_fixture(self, tmp_path, capsys):
        m, d, truth_path = self.make_stage_dump(tmp_path)
        code, stdout, _ = run(
            capsys, "eval", "--pred-stages", str(d), "--truth", str(truth_path)
        )
        assert code == 0
        result = json.loads(stdout)
        assert result["accuracy"] == 1.0
        assert result["fn"] == 0 and result["fp"] == 0

    def test_headline_arithmetic(self, tmp_path, capsys):
        # engineered counts: 97 found, 3 missed, 0 false, 100 negatives
        from maptext.evaluation import ConfusionMatrix, accuracy

        assert accuracy(ConfusionMatrix(tp=97, fn=3, fp=0, tn=100)) == 0.985

    def test_schema_error_exit_one(self, tmp_path, capsys):
        m, d, truth_path = self.make_stage_dump(tmp_path, index=5)
        doc = json.loads(truth_path.read_text())
        doc["regions"][0]["label"] = "banana"
        truth_path.write_text(json.dumps(doc))
        code, _, err = run(
            capsys, "eval", "--pred-stages", str(d), "--truth", str(truth_path)
        )
        assert code == 1
        assert "region 0" in err

    def test_run_config_mode(self, tmp_path, capsys):
        m = synthmap.generate_map(10)
        img_path = tmp_path / "in.png"
        ingest.save_image(RgbImage(m.rgb_array()), img_path)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config_to_json(corpus_config())))
        truth_path = tmp_path / "truth.json"
        truth_path.write_text(json.dumps(m.ground_truth))
        code, stdout, _ = run(
            capsys,
            "eval", "--run-config", str(cfg_path), "--input", str(img_path),
            "--truth", str(truth_path),
        )
        assert code == 0
        assert json.loads(stdout)["accuracy"] == 1.0

    def test_aggregate_mode(self, tmp_path, capsys):
        stages_root = tmp_path / "pred"
        truth_root = tmp_path / "truth"
        stages_root.mkdir()
        truth_root.mkdir()
        for i in (6, 7):
            m = synthmap.generate_map(i)
            stages = run_pipeline(RgbImage(m.rgb_array()), corpus_config())
            d = stages_root / m.name
            d.mkdir()
            ingest.save_image(stages.planes["i_o"], d / "i_o.png")
            (truth_root / f"{m.name}.json").write_text(json.dumps(m.ground_truth))
        code, stdout, _ = run(
            capsys, "eval", "--pred-stages", str(stages_root), "--truth", str(truth_root)
        )
        assert code == 0
        lines = stdout.strip().splitlines()
        assert lines[0] == "image,tp,fn,fp,tn,accuracy"
        assert len(lines) == 4  # header + 2 images + TOTAL
        assert lines[-1].startswith("TOTAL,")


class TestFetchCommand:
    def test_fetch_saves_image(self, tmp_path, capsys, rng):
        import http.server
        import threading

        from test_ingest import _Handler, png_bytes

        server = http.server.HTTPServer(("127.0.0.1", 0), _Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            _Handler.status = 200
            _Handler.payload = png_bytes(rng.integers(0, 256, size=(3, 4, 3), dtype=np.uint8))
            out = tmp_path / "tile.png"
            code, stdout, _ = run(
                capsys,
                "fetch", "--lat", "22.6", "--lon", "88.3",
                "--url-template", f"http://127.0.0.1:{server.server_address[1]}/t",
                "--out", str(out),
            )
            assert code == 0
            assert json.loads(stdout) == {"width": 4, "height": 3}
            assert out.exists()
        finally:
            server.shutdown()

    def test_http_error_exit_one(self, tmp_path, capsys):
        import http.server
        import threading

        from test_ingest import _Handler

        server = http.server.HTTPServer(("127.0.0.1", 0), _Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            _Handler.status = 404
            code, _, err = run(
                capsys,
                "fetch", "--lat", "0", "--lon", "0",
                "--url-template", f"http://127.0.0.1:{server.server_address[1]}/t",
                "--out", str(tmp_path / "x.png"),
            )
            assert code == 1
            assert "404" in err
        finally:
            server.shutdown()


class TestUsage:
    def test_no_command(self, capsys):
        assert main([]) == 2

    def test_unknown_command(self, capsys):
        assert main(["transmogrify"]) == 2
