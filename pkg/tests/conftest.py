import math

import numpy as np
import pytest

from avgregret.core import Dataset, TabularUtility
from avgregret.distributions import DiscreteDistribution

HOTELS = ["Holiday Inn", "Shangri la", "Intercontinental", "Hilton"]
HI, SL, IC, HILTON = range(4)
USERS = {
    "Alex": (0.9, 0.7, 0.2, 0.4),
    "Jerry": (0.6, 1.0, 0.5, 0.2),
    "Tom": (0.2, 0.6, 0.3, 1.0),
    "Sam": (0.1, 0.2, 1.0, 0.9),
}
HOTEL_COORDS = [[1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.0]]


@pytest.fixture
def hotels():
    return Dataset(np.array(HOTEL_COORDS), labels=HOTELS)


@pytest.fixture
def users():
    return {name: TabularUtility(u) for name, u in USERS.items()}


@pytest.fixture
def hotel_F(users):
    return DiscreteDistribution.uniform(list(users.values()), names=list(users))


@pytest.fixture
def hotel_pop(hotel_F, hotels):
    return hotel_F.population(hotels)


@pytest.fixture
def hotel_files(tmp_path):
    data = tmp_path / "hotels.csv"
    data.write_text("id,x1,x2\n" + "".join(f"{h},{x:g},{y:g}\n" for h, (x, y) in zip(HOTELS, HOTEL_COORDS)))
    util = tmp_path / "users.csv"
    util.write_text("prob,u1,u2,u3,u4\n" + "".join("0.25," + ",".join(f"{v:g}" for v in u) + "\n" for u in USERS.values()))
    return data, util


def mc_region_mass(p, sky_coords, theta_l, theta_u, samples=1_000_000, seed=0):
    """Monte Carlo estimate of the regret mass of point p over a weight wedge.

    Draws w uniformly on the unit square, keeps the ones whose angle lies in
    [theta_l, theta_u] and averages the regret of p against the best skyline
    point.  Returns (estimate, standard error); both are unnormalised masses
    (the square has area 1).
    """
    rng = np.random.default_rng(seed)
    W = rng.random((samples, 2))
    ang = np.arctan2(W[:, 1], W[:, 0])
    inside = (ang >= theta_l) & (ang <= theta_u)
    sky = np.asarray(sky_coords, dtype=float)
    # same elementwise formula for every point, so p and its skyline twin agree bit for bit
    util = lambda q: W[:, 0] * q[0] + W[:, 1] * q[1]
    own = util(np.asarray(p, dtype=float))
    best = np.max([util(q) for q in sky], axis=0)
    vals = np.where(inside, 1.0 - own / best, 0.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def mc_arr(S_coords, D_coords, samples=1_000_000, seed=0):
    """Monte Carlo arr of S under uniform linear weights on [0,1]^2."""
    rng = np.random.default_rng(seed)
    W = rng.random((samples, 2))
    top = (W @ np.asarray(D_coords, dtype=float).T).max(axis=1)
    sat = (W @ np.asarray(S_coords, dtype=float).T).max(axis=1)
    rr = (top - sat) / top
    return float(rr.mean()), float(rr.std(ddof=1) / math.sqrt(samples))


def dominance_skyline(coords):
    """O(n^2) filter: indices not dominated by any other point."""
    c = np.asarray(coords, dtype=float)
    keep = []
    for i in range(len(c)):
        dominated = any(np.all(c[j] >= c[i]) and np.any(c[j] > c[i]) for j in range(len(c)) if j != i)
        if not dominated:
            keep.append(i)
    return keep
