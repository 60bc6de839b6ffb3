"""Bundled run configurations reproducing the published figure panels."""
from __future__ import annotations

FIGURES = {
    "1f": {
        "description": "j=4 quench traces from |4,4> and |4,3> at h/gx = 0 and 2, "
                       "with and without decay",
        "config": {
            "protocol": "dpt",
            "j": 4,
            "params": {"cases": [
                {"initial_m": 4, "h": 0.0, "gamma_x": 1.0},
                {"initial_m": 4, "h": 2.0, "gamma_x": 1.0},
                {"initial_m": 3, "h": 0.0, "gamma_x": 1.0},
                {"initial_m": 3, "h": 2.0, "gamma_x": 1.0},
            ], "t_max": 2.0e-6, "n_points": 201},
            "noise": {"enabled": True, "also_ideal": True},
        },
    },
    "2d": {
        "description": "single even-even gap Ramsey trace and spectrum, j=4, h/gx=0.6",
        "config": {
            "protocol": "gap",
            "j": 4,
            "params": {"h_over_gamma_x": [0.6], "gap_kind": "even_even"},
        },
    },
    "2e": {
        "description": "even-even and even-odd gap spectroscopy, j=1..4, h/gx in [0,2]",
        "config": {
            "protocol": "gap",
            "j": [1, 2, 3, 4],
            "params": {
                "h_over_gamma_x": [0.0, 0.2, 0.4, 0.6, 0.8, 1.2, 1.4, 1.6, 1.8, 2.0],
                "gap_kind": ["even_even", "even_odd"],
                "skip_unresolvable": True,
            },
        },
    },
    "3b": {
        "description": "quench-speed sweep of the final ground population, "
                       "j=1..4 and doubled j=8",
        "config": {
            "protocol": "kz",
            "j": [1, 2, 3, 4, 8],
            "params": {"t_min": 1.0e-9, "t_max": 3.0e-5, "n_ramps": 16,
                       "doubled_j": [8]},
        },
    },
    "4d": {
        "description": "Jx eigenstate distributions vs h/gx, j=1..4",
        "config": {
            "protocol": "order",
            "j": [1, 2, 3, 4],
            "params": {"h_over_gamma_x": [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]},
        },
    },
    "4f": {
        "description": "doubled-spin (j=8) Jx eigenstate distributions with the "
                       "semiclassical minima overlay",
        "config": {
            "protocol": "order",
            "j": [8],
            "params": {"h_over_gamma_x": [0.0, 0.125, 0.25, 0.375, 0.5, 0.625,
                                          0.75, 0.875, 1.0],
                       "doubled": True, "semiclassical_overlay": True},
        },
    },
    "5d": {
        "description": "reconstructed pair splittings vs pair energy, j=8, h/gx=0.18",
        "config": {
            "protocol": "esqpt",
            "j": 8,
            "params": {"h_over_gamma_x": 0.18},
        },
    },
    "S2c": {
        "description": "semiclassical density of states over j=500 eigenvalue "
                       "histograms, h in {0.18, 0.5}",
        "config": {
            "protocol": "dos",
            "j": 500,
            "params": {"h": [0.18, 0.5], "n_energies": 240, "histogram_bins": 21},
        },
    },
}


def figure_config(figure_id: str) -> dict:
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; known: {sorted(FIGURES)}")
    import copy
    cfg = copy.deepcopy(FIGURES[figure_id]["config"])
    cfg["figure_id"] = figure_id
    return cfg
