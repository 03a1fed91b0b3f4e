"""Regression presets mirroring the four published model specifications."""

PRESETS = {
    "people": {
        "title": "Presence of people",
        "dependent": {"name": "R_p", "transform": "log"},
        "covariates": [
            {"name": "pop_density", "transform": "log", "label": "Population density"},
            {"name": "emp_density", "transform": "log", "label": "Employees density"},
            {"name": "deprivation", "transform": "none", "label": "Deprivation"},
            {"name": "dist_centre", "transform": "none", "label": "Distance centre"},
            {"name": "safety_score", "transform": "none", "label": "Safety appearance"},
        ],
    },
    "women": {
        "title": "Presence of women",
        "dependent": {"name": "R_f", "transform": "none"},
        "covariates": [
            {"name": "pct_women", "transform": "cube_root", "label": "% of women (residents)"},
            {"name": "deprivation", "transform": "none", "label": "Deprivation"},
            {"name": "dist_centre", "transform": "none", "label": "Distance centre"},
            {"name": "safety_score", "transform": "none", "label": "Safety perception"},
        ],
    },
    "young": {
        "title": "Presence of people younger than 30",
        "dependent": {"name": "R_young", "transform": "log"},
        "covariates": [
            {"name": "pct_young", "transform": "log", "label": "% of younger residents"},
            {"name": "deprivation", "transform": "none", "label": "Deprivation"},
            {"name": "dist_centre", "transform": "none", "label": "Distance centre"},
            {"name": "safety_score", "transform": "none", "label": "Safety perception"},
        ],
    },
    "elderly": {
        "title": "Presence of elderly people",
        "dependent": {"name": "R_old", "transform": "none"},
        "covariates": [
            {"name": "pct_elderly", "transform": "cube_root", "label": "% of elderly residents"},
            {"name": "deprivation", "transform": "none", "label": "Deprivation"},
            {"name": "dist_centre", "transform": "none", "label": "Distance centre"},
            {"name": "safety_score", "transform": "none", "label": "Safety perception"},
        ],
    },
}
