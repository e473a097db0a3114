"""Published regional results, transcribed verbatim.

R2[site][component] rows are T = 1, 3, 6, 12, 24; columns are S = 1, 3, ..., 13.
MAX_STD[site] is (u, v) max sigma of the ACC.
"""

R2 = {
    "Korea": {
        "u": [
            [0.970, 0.983, 0.986, 0.987, 0.986, 0.986, 0.986],
            [0.992, 0.995, 0.996, 0.996, 0.996, 0.995, 0.996],
            [0.989, 0.995, 0.996, 0.996, 0.995, 0.994, 0.995],
            [0.985, 0.994, 0.994, 0.994, 0.993, 0.993, 0.992],
            [0.982, 0.993, 0.993, 0.993, 0.992, 0.992, 0.992],
        ],
        "v": [
            [0.968, 0.987, 0.988, 0.989, 0.989, 0.988, 0.989],
            [0.992, 0.996, 0.997, 0.996, 0.996, 0.996, 0.996],
            [0.989, 0.996, 0.996, 0.996, 0.995, 0.995, 0.995],
            [0.985, 0.995, 0.994, 0.995, 0.994, 0.993, 0.993],
            [0.982, 0.994, 0.994, 0.994, 0.993, 0.993, 0.992],
        ],
    },
    "USA": {
        "u": [
            [0.976, 0.991, 0.991, 0.991, 0.991, 0.991, 0.991],
            [0.989, 0.997, 0.997, 0.997, 0.997, 0.997, 0.997],
            [0.986, 0.996, 0.997, 0.996, 0.996, 0.996, 0.997],
            [0.984, 0.995, 0.997, 0.996, 0.996, 0.996, 0.995],
            [0.984, 0.996, 0.996, 0.995, 0.995, 0.995, 0.995],
        ],
        "v": [
            [0.970, 0.991, 0.991, 0.992, 0.992, 0.992, 0.992],
            [0.987, 0.997, 0.997, 0.998, 0.997, 0.997, 0.997],
            [0.990, 0.997, 0.997, 0.997, 0.997, 0.997, 0.997],
            [0.984, 0.996, 0.997, 0.997, 0.996, 0.996, 0.996],
            [0.989, 0.996, 0.996, 0.996, 0.996, 0.996, 0.995],
        ],
    },
    "UK": {
        "u": [
            [0.981, 0.993, 0.994, 0.994, 0.995, 0.995, 0.995],
            [0.995, 0.998, 0.998, 0.998, 0.998, 0.998, 0.998],
            [0.995, 0.998, 0.998, 0.998, 0.998, 0.998, 0.998],
            [0.989, 0.998, 0.998, 0.998, 0.998, 0.998, 0.998],
            [0.988, 0.998, 0.998, 0.998, 0.997, 0.997, 0.997],
        ],
        "v": [
            [0.984, 0.995, 0.995, 0.995, 0.995, 0.995, 0.996],
            [0.990, 0.999, 0.999, 0.999, 0.999, 0.999, 0.999],
            [0.995, 0.999, 0.999, 0.999, 0.999, 0.999, 0.998],
            [0.993, 0.999, 0.999, 0.999, 0.999, 0.999, 0.999],
            [0.991, 0.999, 0.999, 0.998, 0.998, 0.999, 0.998],
        ],
    },
}

MAX_STD = {"Korea": (0.101, 0.119), "USA": (0.043, 0.033), "UK": (0.023, 0.022)}


def sweep_results():
    """SweepResult objects carrying the published grids (same value in both R^2 modes)."""
    from windcorr.evalrun import CellResult, SweepResult
    from windcorr.windgrid import VALID_S, VALID_T

    out = []
    for site, comps in R2.items():
        res = SweepResult(site, "cnn2d3d")
        for i, T in enumerate(VALID_T):
            for j, S in enumerate(VALID_S):
                u, v = comps["u"][i][j], comps["v"][i][j]
                res.entries[(T, S)] = CellResult(T, S, 0, u, v, u, v, 0, 0.0)
        out.append(res)
    return out


def reports():
    from windcorr.stats import CorrelationReport

    return [CorrelationReport.from_max_std(site, *vals) for site, vals in MAX_STD.items()]
