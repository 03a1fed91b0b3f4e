import csv
import json
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from safestreets.cli import main
from safestreets import geodata

from synth import make_city, write_cells_fixture, write_city_geojson, write_image_fixture


@pytest.fixture(scope="module")
def city(tmp_path_factory):
    base = tmp_path_factory.mktemp("city")
    districts, planted = make_city(seed=0)
    paths = {
        "districts": base / "districts.geojson",
        "cells": base / "cells.geojson",
        "counts": base / "counts.csv",
        "images": base / "images",
        "manifest": base / "images.csv",
    }
    write_city_geojson(paths["districts"], districts)
    write_cells_fixture(paths["cells"], paths["counts"], districts, planted)
    write_image_fixture(paths["images"], paths["manifest"], districts, planted)
    return {"districts": districts, "planted": planted, "paths": paths, "base": base}


def run_cli(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    return result


class TestRank:
    def test_empty_votes_ok(self, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text("left_id,right_id,outcome\n")
        out = tmp_path / "scores.csv"
        result = run_cli("rank", "--votes", votes, "--out", out)
        assert result.exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert rows == []

    def test_rank_scores_csv(self, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text(
            "left_id,right_id,outcome\n"
            "a,b,left\n"
            "a,b,left\n"
            "b,c,equal\n"
        )
        out = tmp_path / "scores.csv"
        result = run_cli("rank", "--votes", votes, "--out", out)
        assert result.exit_code == 0
        rows = {r["image_id"]: r for r in csv.DictReader(out.open())}
        assert set(rows) == {"a", "b", "c"}
        assert float(rows["a"]["score"]) == 10.0

    def test_reproducible_output(self, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text("left_id,right_id,outcome\nx,y,left\ny,z,right\n")
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        run_cli("rank", "--votes", votes, "--out", out1)
        run_cli("rank", "--votes", votes, "--out", out2)
        assert out1.read_bytes() == out2.read_bytes()


class TestGrid:
    def test_grid_counts(self, city, tmp_path):
        out = tmp_path / "points.csv"
        result = run_cli("grid", "--region", city["paths"]["districts"],
                         "--density", 4, "--out", out)
        assert result.exit_code == 0
        points = geodata.read_sample_points_csv(out)
        # 40 km^2 at 4 points/km^2
        assert abs(len(points) - 160) <= 2 * np.sqrt(160) + 4


class TestScoreAggregate:
    def test_score_with_synthetic_and_aggregate(self, city, tmp_path):
        records_csv = tmp_path / "records.csv"
        result = run_cli("score", "--images", city["paths"]["manifest"],
                         "--synthetic", "green-mean", "--out", records_csv)
        assert result.exit_code == 0
        agg = tmp_path / "agg.geojson"
        result = run_cli("aggregate", "--records", records_csv,
                         "--districts", city["paths"]["districts"], "--out", agg)
        assert result.exit_code == 0
        scored = geodata.read_districts_geojson(agg)
        with open(agg) as fh:
            props = {f["properties"]["id"]: f["properties"] for f in json.load(fh)["features"]}
        for d in scored:
            planted = city["planted"][d.id]["safety"]
            assert props[d.id]["safety_score"] == pytest.approx(planted, abs=0.05)
            assert props[d.id]["n_images"] == 2

    def test_score_over_wire_protocol(self, city, tmp_path):
        # Subset manifest through a scorer/1 subprocess.
        rows = list(csv.DictReader(open(city["paths"]["manifest"])))[:8]
        subset = tmp_path / "subset.csv"
        with open(subset, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=rows[0].keys())
            writer.writeheader()
            writer.writerows(rows)
        out = tmp_path / "wire.csv"
        cmd = f"{sys.executable} -m safestreets.scorer --kind constant --value 7.5"
        result = run_cli("score", "--images", subset, "--scorer-cmd", cmd,
                         "--crops", 3, "--out", out)
        assert result.exit_code == 0
        records = geodata.read_score_records_csv(out)
        assert len(records) == 8
        assert all(r.score == 7.5 for r in records)


class TestMetricsRegress:
    def test_metrics_roundtrip(self, city, tmp_path):
        out = tmp_path / "metrics.csv"
        result = run_cli("metrics", "--cells", city["paths"]["cells"],
                         "--counts", city["paths"]["counts"],
                         "--districts", city["paths"]["districts"], "--out", out)
        assert result.exit_code == 0
        rows = {r["district_id"]: r for r in csv.DictReader(out.open())}
        for did, p in city["planted"].items():
            assert float(rows[did]["R_p"]) == pytest.approx(p["R_p"], rel=1e-6)
            assert float(rows[did]["R_f"]) == pytest.approx(p["R_f"], rel=1e-6)

    def test_regress_people_preset(self, city, tmp_path):
        # safety_score comes from the planted field directly via aggregate.
        records_csv = tmp_path / "records.csv"
        run_cli("score", "--images", city["paths"]["manifest"],
                "--synthetic", "green-mean", "--out", records_csv)
        agg = tmp_path / "agg.geojson"
        run_cli("aggregate", "--records", records_csv,
                "--districts", city["paths"]["districts"], "--out", agg)
        metrics_csv = tmp_path / "metrics.csv"
        run_cli("metrics", "--cells", city["paths"]["cells"],
                "--counts", city["paths"]["counts"],
                "--districts", city["paths"]["districts"], "--out", metrics_csv)
        out = tmp_path / "people.json"
        result = run_cli("regress", "--districts", agg, "--metrics", metrics_csv,
                         "--preset", "people", "--permutations", 199, "--out", out)
        assert result.exit_code == 0
        report = json.loads(out.read_text())
        betas = {c["name"]: c for c in report["coefficients"]}
        assert betas["Safety appearance"]["beta"] > 0
        assert betas["Safety appearance"]["p_value"] < 0.01
        assert out.with_suffix(".txt").exists()
        assert (tmp_path / "manifest_regress.json").exists()


class TestOccludeValidate:
    def test_occlude_outputs(self, tmp_path):
        image = np.zeros((60, 60, 3), dtype=np.uint8)
        image[20:40, 20:40, 0] = 255
        path = tmp_path / "img.png"
        Image.fromarray(image).save(path)
        out_dir = tmp_path / "occ"
        result = run_cli("occlude", "--image", path, "--synthetic", "region-box",
                         "--patches", 100, "--seed", 3, "--out-dir", out_dir)
        assert result.exit_code == 0
        assert (out_dir / "positive_mask.png").exists()
        assert (out_dir / "negative_mask.png").exists()
        trials = list(csv.DictReader((out_dir / "trials.csv").open()))
        assert len(trials) == 100

    def test_validate_pearson(self, tmp_path):
        ref, pred = tmp_path / "ref.csv", tmp_path / "pred.csv"
        ref.write_text("image_id,score\n" + "\n".join(f"i{k},{k}" for k in range(10)) + "\n")
        pred.write_text("image_id,score\n" + "\n".join(f"i{k},{k * 2 + 1}" for k in range(10)) + "\n")
        out = tmp_path / "report.json"
        result = run_cli("validate", "--reference", ref, "--predicted", pred, "--out", out)
        assert result.exit_code == 0
        report = json.loads(out.read_text())
        assert report["pearson_r"] == pytest.approx(1.0)

    def test_validate_requires_overlap(self, tmp_path):
        ref, pred = tmp_path / "ref.csv", tmp_path / "pred.csv"
        ref.write_text("image_id,score\na,1\nb,2\nc,3\n")
        pred.write_text("image_id,score\nx,1\ny,2\nz,3\n")
        result = CliRunner().invoke(main, ["validate", "--reference", str(ref), "--predicted", str(pred)])
        assert result.exit_code != 0


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        votes = tmp_path / "votes.csv"
        votes.write_text("left_id,right_id,outcome\na,b,left\n")
        out = tmp_path / "scores.csv"
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"rank": {"votes": str(votes), "out": str(out)}}))
        result = run_cli("--config", config, "rank")
        assert result.exit_code == 0
        assert out.exists()
