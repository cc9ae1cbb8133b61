"""Regenerate the bundled synthetic fixture in src/swbi/data.

The panel mimics the shape of the real inputs: 13 annual factors over
1986-2016 driven by one common factor plus idiosyncratic noise, and two
stressor level series (trade-balance magnitude and immigration counts).
The numbers are synthetic and carry no empirical meaning.
"""
from pathlib import Path

import numpy as np

from swbi.panel import STANDARD_FACTORS

OUT = Path(__file__).resolve().parents[1] / "src" / "swbi" / "data"
YEARS = np.arange(1986, 2017)

# (base level, drift, idiosyncratic sd, loading on the common factor)
FACTOR_SETUP = {
    "Confidence": (95.0, 0.000, 0.08, 0.6),
    "CPI": (109.6, 0.026, 0.010, -0.1),
    "CrimeRate": (5480.0, -0.025, 0.03, -0.2),
    "DispIncome": (19500.0, 0.015, 0.015, 0.1),
    "GDP": (8.3, 0.025, 0.018, 0.3),
    "GenderParity": (0.66, 0.010, 0.02, 0.0),
    "GovTrans": (4.4, 0.045, 0.05, -0.3),
    "Inequality": (0.43, 0.004, 0.012, 0.0),
    "LifeExpect": (74.7, 0.0018, 0.002, 0.0),
    "Sentiment": (92.0, 0.000, 0.10, 0.7),
    "Uncertainty": (105.0, 0.010, 0.25, -0.8),
    "Unemploy": (7.0, -0.005, 0.12, -0.5),
    "VXO": (20.0, 0.000, 0.30, -1.0),
}


def main(seed: int = 20161231) -> None:
    gen = np.random.default_rng(seed)
    n = YEARS.size - 1
    common = gen.standard_t(4, n) * 0.10
    # a few crash years give the index the left skew of real well-being data
    for year, shock in ((1991, -0.15), (2001, -0.2), (2008, -0.35), (2009, -0.1)):
        common[year - YEARS[0] - 1] += shock
    cols = {}
    for name in STANDARD_FACTORS:
        base, drift, sd, load = FACTOR_SETUP[name]
        r = drift + load * common + sd * gen.standard_normal(n)
        cols[name] = base * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    with open(OUT / "panel.csv", "w") as fh:
        fh.write("# synthetic 13-factor panel, generated by tools/make_fixture.py\n")
        fh.write("year," + ",".join(STANDARD_FACTORS) + "\n")
        for t, y in enumerate(YEARS):
            fh.write(f"{y}," + ",".join(f"{cols[f][t]:.6g}" for f in STANDARD_FACTORS) + "\n")
    trade = 150.0 * np.exp(np.concatenate([[0.0], np.cumsum(0.05 + 0.3 * common * 0.3 + 0.2 * gen.standard_normal(n))]))
    immig = 600.0 * np.exp(np.concatenate([[0.0], np.cumsum(0.02 + 0.6 * common + 0.12 * gen.standard_normal(n))]))
    for fname, col, vals in (("trade.csv", "Trade", trade), ("immig.csv", "Immig", immig)):
        with open(OUT / fname, "w") as fh:
            fh.write("# synthetic stressor levels, generated by tools/make_fixture.py\n")
            fh.write(f"year,{col}\n")
            for y, v in zip(YEARS, vals):
                fh.write(f"{y},{v:.6g}\n")


if __name__ == "__main__":
    main()
