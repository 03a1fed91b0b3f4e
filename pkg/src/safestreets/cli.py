"""Pipeline orchestration: votes -> scores -> districts -> metrics -> models."""

import csv
import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import activity, geodata, occlusion, ranking, spatial
from .errors import SafestreetsError
from .presets import PRESETS
from .scorer import CropConfig, SubprocessScorer, score_augmented, synthetic_scorer


def _hash_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir, subcommand, inputs, outputs, seed):
    manifest = {
        "subcommand": subcommand,
        "seed": seed,
        "inputs": {str(p): _hash_file(p) for p in inputs if Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"manifest_{subcommand}.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def _config_defaults(config_path):
    if not config_path:
        return {}
    with open(config_path) as fh:
        return json.load(fh)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config supplying default option values per subcommand.")
@click.pass_context
def main(ctx, config_path):
    """Perceived-safety mapping and activity-regression pipeline."""
    ctx.default_map = _config_defaults(config_path)


@main.command()
@click.option("--votes", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--score-basis", default="conservative", type=click.Choice(["conservative", "mu"]))
@click.option("--sweeps", default=1, type=int)
@click.option("--seed", default=0, type=int)
def rank(votes, out, score_basis, sweeps, seed):
    """Pairwise votes CSV -> per-image scores CSV."""
    config = ranking.RatingConfig(score_basis=score_basis, n_sweeps=sweeps, sweep_seed=seed)
    vote_list = ranking.read_votes_csv(votes)
    ratings = ranking.rate_votes(vote_list, config)
    raw = {k: (r.mu if score_basis == "mu" else r.conservative()) for k, r in ratings.items()}
    scores = ranking.rescale_scores(raw)
    ranking.write_scores_csv(out, ratings, scores)
    _write_manifest(Path(out).parent, "rank", [votes], [out], seed)
    click.echo(f"rank: {len(vote_list)} votes, {len(scores)} images -> {out}")


@main.command()
@click.option("--region", required=True, type=click.Path(exists=True),
              help="GeoJSON FeatureCollection or geometry delimiting the area.")
@click.option("--density", default=100.0, type=float, help="points per square km")
@click.option("--out", required=True, type=click.Path())
def grid(region, density, out):
    """Region polygon -> dense sample-point CSV with cardinal headings."""
    with open(region) as fh:
        gj = json.load(fh)
    if gj.get("type") == "FeatureCollection":
        rings = []
        for feature in gj["features"]:
            rings.extend(geodata._geojson_rings(feature["geometry"]))
    else:
        rings = geodata._geojson_rings(gj.get("geometry", gj))
    points = geodata.generate_grid(rings, density)
    geodata.write_sample_points_csv(out, points)
    _write_manifest(Path(out).parent, "grid", [region], [out], None)
    click.echo(f"grid: {len(points)} sample points -> {out}")


@main.command()
@click.option("--images", "manifest", required=True, type=click.Path(exists=True),
              help="CSV image_id,lat,lon,heading,path")
@click.option("--scorer-cmd", default=None, help="scorer/1 command line")
@click.option("--synthetic", default=None, type=click.Choice(["green-mean", "region-box"]),
              help="use an in-process synthetic scorer instead of --scorer-cmd")
@click.option("--constant", default=None, type=float, help="use a constant synthetic scorer")
@click.option("--crops", default=30, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", required=True, type=click.Path())
def score(manifest, scorer_cmd, synthetic, constant, crops, seed, out):
    """Image manifest + scorer -> crop-augmented ScoreRecord CSV."""
    if constant is not None:
        handle = synthetic_scorer("constant", value=constant)
    elif synthetic:
        handle = synthetic_scorer(synthetic)
    elif scorer_cmd:
        handle = SubprocessScorer(scorer_cmd.split())
    else:
        raise click.UsageError("one of --scorer-cmd, --synthetic, --constant is required")
    config = CropConfig(n=crops, seed=seed)
    records = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            value = score_augmented(row["path"], handle, config, image_id=row["image_id"])
            records.append(
                geodata.ScoreRecord(
                    image_id=row["image_id"],
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    heading=float(row["heading"]),
                    score=value,
                )
            )
    handle.close()
    geodata.write_score_records_csv(out, records)
    _write_manifest(Path(out).parent, "score", [manifest], [out], seed)
    click.echo(f"score: {len(records)} records -> {out}")


@main.command()
@click.option("--records", required=True, type=click.Path(exists=True))
@click.option("--districts", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def aggregate(records, districts, out):
    """ScoreRecord CSV + districts GeoJSON -> GeoJSON with safety_score."""
    district_list = geodata.read_districts_geojson(districts)
    record_list = geodata.read_score_records_csv(records)
    report = geodata.aggregate_scores(record_list, district_list)
    for d in district_list:
        if d.id in report.scores:
            d.safety_score, d.n_images = report.scores[d.id]
    geodata.write_districts_geojson(out, district_list)
    _write_manifest(Path(out).parent, "aggregate", [records, districts], [out], None)
    n_scored = len(report.scores)
    click.echo(
        f"aggregate: {n_scored}/{len(district_list)} districts scored, "
        f"{report.unassigned_locations} locations outside all districts -> {out}"
    )


@main.command()
@click.option("--cells", required=True, type=click.Path(exists=True), help="cell GeoJSON")
@click.option("--counts", required=True, type=click.Path(exists=True), help="long CSV of hourly counts")
@click.option("--districts", required=True, type=click.Path(exists=True))
@click.option("--window", default="daily_mean", type=click.Choice(["daily_mean", "sum"]))
@click.option("--out", required=True, type=click.Path())
def metrics(cells, counts, districts, window, out):
    """Cell-grid counts -> per-district activity metrics CSV."""
    district_list = geodata.read_districts_geojson(districts)
    cell_list = activity.read_cells(cells, counts, window=window)
    report = activity.district_counts(cell_list, district_list)
    metric_map = activity.compute_metrics(report, district_list)
    activity.write_metrics_csv(out, metric_map)
    _write_manifest(Path(out).parent, "metrics", [cells, counts, districts], [out], None)
    click.echo(
        f"metrics: {len(metric_map)} districts, unallocated people "
        f"{report.unallocated:.2f}/{report.total_input:.2f} -> {out}"
    )


def _resolve_variable(name, district, metric):
    if name in ("R_p", "R_f", "R_young", "R_old"):
        return getattr(metric, name)
    if name == "pop_density":
        return district.population / district.area_i
    if name == "emp_density":
        return district.employees / district.area_i
    if name == "safety_score":
        return district.safety_score
    return getattr(district, name)


@main.command()
@click.option("--districts", required=True, type=click.Path(exists=True),
              help="aggregated GeoJSON carrying safety_score")
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True))
@click.option("--preset", default=None, type=click.Choice(sorted(PRESETS)))
@click.option("--spec", "spec_path", default=None, type=click.Path(exists=True),
              help="custom regression spec JSON (overrides --preset)")
@click.option("--stop-p-value", default=0.10, type=float)
@click.option("--permutations", default=999, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--no-urban-filter", is_flag=True, default=False)
@click.option("--out", required=True, type=click.Path())
def regress(districts, metrics_path, preset, spec_path, stop_p_value, permutations,
            seed, no_urban_filter, out):
    """Spatially corrected OLS of an activity metric on safety + controls."""
    if spec_path:
        with open(spec_path) as fh:
            model = json.load(fh)
    elif preset:
        model = PRESETS[preset]
    else:
        raise click.UsageError("either --preset or --spec is required")

    district_list = geodata.read_districts_geojson(districts)
    metric_map = activity.read_metrics_csv(metrics_path)
    if not no_urban_filter:
        district_list = activity.urban_filter(district_list)
    usable = [
        d for d in district_list
        if d.id in metric_map and d.safety_score is not None
    ]
    if len(usable) < 3:
        raise click.ClickException("fewer than 3 districts with scores and metrics")

    dep = model["dependent"]
    y = spatial.transform(
        [_resolve_variable(dep["name"], d, metric_map[d.id]) for d in usable],
        dep.get("transform", "none"),
        log_offset=dep.get("log_offset", 0.0),
    )
    cols, labels = [], []
    for cov in model["covariates"]:
        vec = spatial.transform(
            [_resolve_variable(cov["name"], d, metric_map[d.id]) for d in usable],
            cov.get("transform", "none"),
            log_offset=cov.get("log_offset", 0.0),
        )
        cols.append(vec)
        labels.append(cov.get("label", cov["name"]))

    weights = spatial.queen_weights(usable)
    config = spatial.StepwiseConfig(
        stop_p_value=model.get("stop_p_value", stop_p_value),
        n_permutations=model.get("n_permutations", permutations),
        seed=model.get("seed", seed),
    )
    result = spatial.stepwise_filter_regress(y, np.column_stack(cols), weights, config, names=labels)
    title = model.get("title", dep["name"])
    spatial.write_result_json(out, result, title=title)
    table_path = Path(out).with_suffix(".txt")
    table_path.write_text(spatial.render_table(title, result) + "\n")
    _write_manifest(Path(out).parent, "regress", [districts, metrics_path], [out, table_path], seed)
    click.echo(spatial.render_table(title, result))


@main.command()
@click.option("--image", required=True, type=click.Path(exists=True))
@click.option("--scorer-cmd", default=None)
@click.option("--synthetic", default=None, type=click.Choice(["green-mean", "region-box"]))
@click.option("--patches", default=1000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out-dir", required=True, type=click.Path())
def occlude(image, scorer_cmd, synthetic, patches, seed, out_dir):
    """Occlusion sensitivity masks for one image."""
    from PIL import Image as PILImage

    if synthetic:
        handle = synthetic_scorer(synthetic)
    elif scorer_cmd:
        handle = SubprocessScorer(scorer_cmd.split())
    else:
        raise click.UsageError("one of --scorer-cmd, --synthetic is required")
    array = np.asarray(PILImage.open(image).convert("RGB"))
    config = occlusion.OcclusionConfig(n_patches=patches, seed=seed)
    masks = occlusion.sensitivity_map(array, handle, config)
    handle.close()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    occlusion.write_mask_png(out / "positive_mask.png", masks.positive)
    occlusion.write_mask_png(out / "negative_mask.png", masks.negative)
    occlusion.write_trials_csv(out / "trials.csv", masks)
    _write_manifest(out, "occlude", [image], [out / "positive_mask.png", out / "negative_mask.png"], seed)
    click.echo(f"occlude: baseline {masks.baseline_score:.3f}, {patches} trials -> {out}")


@main.command()
@click.option("--reference", required=True, type=click.Path(exists=True),
              help="score CSV with image_id,score columns")
@click.option("--predicted", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
def validate(reference, predicted, out):
    """Pearson correlation between two score files joined on image_id."""
    def read_scores(path):
        with open(path, newline="") as fh:
            return {row["image_id"]: float(row["score"]) for row in csv.DictReader(fh)}

    ref = read_scores(reference)
    pred = read_scores(predicted)
    shared = sorted(set(ref) & set(pred))
    if len(shared) < 3:
        raise click.ClickException("fewer than 3 shared image ids")
    r, p = spatial.pearson([ref[i] for i in shared], [pred[i] for i in shared])
    report = {"n": len(shared), "pearson_r": r, "p_value": p}
    click.echo(f"validate: n={len(shared)} r={r:.3f} p={p:.2e}")
    if out:
        with open(out, "w") as fh:
            json.dump(report, fh, indent=2)
        _write_manifest(Path(out).parent, "validate", [reference, predicted], [out], None)


def entry():
    try:
        main(standalone_mode=True)
    except SafestreetsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entry()
