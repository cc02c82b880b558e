#!/usr/bin/env python3
"""Generate the synthetic surrogate datasets in data/.

Each surrogate matches the instance/class/feature counts of the eponymous
UCI dataset (see data/README.md). Instances live on a low-dimensional
latent structure pushed through a fixed random linear embedding; the
layout and its knobs control how class overlap is arranged, which is what
the correlation experiments are sensitive to. Generation is deterministic
(fixed seeds).
"""
import pathlib

import numpy as np
import pandas as pd

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"

RECIPES = {
    "breast_cancer": dict(sizes=[374, 222], q=30, d=1, layout="chain",
                          blocks=36, growth=1.1, noise=0.004, seed=10),
    "wine": dict(sizes=[59, 71, 48], q=13, d=2, layout="circle",
                 radius=1.2, within=1.0, clip=1.3, scatter_frac=0.045,
                 scatter_rmin=5.5, scatter_rmax=7.0, scatter_minsep=3.0,
                 scatter_spread=55.0, noise=0.01, seed=18),
    "heart": dict(sizes=[164, 139], q=7, d=1, layout="chain",
                  blocks=16, growth=1.35, noise=0.004, seed=11),
    "liver": dict(sizes=[145, 200], q=6, d=1, layout="chain",
                  blocks=16, growth=1.35, noise=0.004, seed=12),
    "parkinson": dict(sizes=[48, 147], q=22, d=1, layout="chain",
                      blocks=14, growth=1.35, noise=0.004, seed=13),
    "sonar": dict(sizes=[97, 111], q=60, d=1, layout="chain",
                  blocks=14, growth=1.35, noise=0.004, seed=14),
    "ionosphere": dict(sizes=[126, 225], q=34, d=3, layout="line",
                       sep=2.8, within=[1.0, 1.1], noise=0.05, seed=15,
                       constant_col=True),
    "glass": dict(sizes=[70, 76, 17, 13, 9, 29], q=9, d=2, layout="circle",
                  radius=2.2, within=1.05, noise=0.06, seed=16),
    "ecoli": dict(sizes=[143, 77, 52, 35, 20, 5, 2, 2], q=7, d=2,
                  layout="circle", radius=2.4, within=1.0, noise=0.06,
                  seed=17),
}


def latent_centers(recipe, rng):
    sizes = recipe["sizes"]
    d = recipe["d"]
    c = len(sizes)
    centers = np.zeros((c, d))
    if recipe["layout"] == "line":
        for i in range(c):
            centers[i, 0] = i * recipe["sep"]
    else:  # circle in the first two latent coordinates
        for i in range(c):
            ang = 2.0 * np.pi * i / c
            centers[i, 0] = recipe["radius"] * np.cos(ang)
            centers[i, 1] = recipe["radius"] * np.sin(ang)
    return centers


def run_lengths(total, blocks, growth):
    """Split `total` into `blocks` positive integer run lengths growing
    geometrically, preserving the total exactly."""
    raw = growth ** np.arange(blocks)
    raw = raw * total / raw.sum()
    lens = np.maximum(1, np.round(raw)).astype(int)
    while lens.sum() > total:
        lens[np.argmax(lens - raw)] -= 1
    while lens.sum() < total:
        lens[np.argmin(lens - raw)] += 1
    return lens


def chain_latent(recipe, rng):
    """Two-class run-length chain: instances are evenly spaced along a
    one-dimensional manifold as alternating class runs whose lengths grow
    along the chain. Short runs at the head interleave the classes tightly
    (high label conflict, close counterfactuals); long runs at the tail
    are pure (low conflict, distant counterfactuals). Run lengths, not
    random label draws, carry the conflict gradient, so the signal has no
    sampling noise beyond the train/test split itself.
    """
    n0, n1 = recipe["sizes"]
    blocks = recipe.get("blocks", 16)
    growth = recipe.get("growth", 1.35)
    l0 = run_lengths(n0, blocks, growth)
    l1 = run_lengths(n1, blocks, growth)
    labels = []
    for a, b in zip(l0, l1):
        labels += [0] * int(a) + [1] * int(b)
    y = np.array(labels)
    n = n0 + n1
    # Even spacing with a touch of jitter so distances are not degenerate.
    t = (np.arange(n) + 0.35 * (rng.random(n) - 0.5)) / n
    z = np.repeat(t[:, None], recipe["d"], axis=1)
    return z, y


def scatter_points(n, mid, axis, spread_deg, rmin, rmax, minsep, rng):
    """Isolated points in the annulus [rmin, rmax] around `mid`, spread at
    most `spread_deg` degrees around the direction `axis` and kept at least
    `minsep` apart from one another so each one sits alone."""
    base = np.arctan2(axis[1], axis[0])
    placed = []
    sep = minsep
    misses = 0
    while len(placed) < n:
        a = base + np.deg2rad(spread_deg) * rng.uniform(-1.0, 1.0)
        r = np.sqrt(rng.uniform(rmin**2, rmax**2))
        p = mid + r * np.array([np.cos(a), np.sin(a)])
        if all(np.linalg.norm(p - q) >= sep for q in placed):
            placed.append(p)
            misses = 0
        else:
            misses += 1
            if misses >= 200:  # wedge too full for this separation
                sep *= 0.8
                misses = 0
    return np.array(placed)


def cluster_latent(recipe, rng):
    """Gaussian class clusters on a line or circle of centers, optionally
    truncated at `clip` standard deviations so classes have compact support
    instead of long sparse tails. `scatter_frac` reserves that share of each
    class for isolated far points placed well beyond the cluster along its
    own outward direction: lone same-class instances with no dense
    neighborhood anywhere, the kind a quantifier should file under missing
    knowledge rather than class ambiguity."""
    sizes = recipe["sizes"]
    d = recipe["d"]
    centers = latent_centers(recipe, rng)
    mid = centers.mean(axis=0)
    within = recipe["within"]
    if np.isscalar(within):
        within = [within] * len(sizes)
    clip = recipe.get("clip")
    scatter_frac = recipe.get("scatter_frac", 0.0)

    zs, ys = [], []
    for cls, n in enumerate(sizes):
        n_far = int(round(scatter_frac * n))
        z = centers[cls] + within[cls] * rng.standard_normal((n - n_far, d))
        if clip is not None:
            lim = clip * within[cls]
            for _ in range(64):
                bad = np.linalg.norm(z - centers[cls], axis=1) > lim
                if not bad.any():
                    break
                z[bad] = centers[cls] + within[cls] * rng.standard_normal(
                    (bad.sum(), d))
        if n_far:
            axis = centers[cls] - mid
            far = scatter_points(n_far, mid, axis,
                                 recipe.get("scatter_spread", 25.0),
                                 recipe["scatter_rmin"],
                                 recipe["scatter_rmax"],
                                 recipe["scatter_minsep"], rng)
            z = np.vstack([z, far])
        zs.append(z)
        ys.append(np.full(n, cls))
    return np.vstack(zs), np.concatenate(ys)


LATENTS = {
    "chain": chain_latent,
    "line": cluster_latent,
    "circle": cluster_latent,
}


def generate(name, recipe):
    rng = np.random.default_rng(recipe["seed"])
    q, d = recipe["q"], recipe["d"]
    z, y = LATENTS[recipe["layout"]](recipe, rng)

    # Fixed random embedding into q observed features, unit-norm rows so
    # every feature carries comparable latent signal.
    w = rng.standard_normal((q, d))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    x = z @ w.T + recipe["noise"] * rng.standard_normal((len(z), q))

    if recipe.get("constant_col"):
        x[:, q - 1] = 1.0

    # Shuffle rows so class blocks are interleaved in the file.
    order = rng.permutation(len(z))
    x, y = x[order], y[order]

    cols = {f"f{j}": np.round(x[:, j], 6) for j in range(q)}
    df = pd.DataFrame(cols)
    df["class"] = [f"c{int(t)}" for t in y]
    path = OUT / f"{name}.csv"
    df.to_csv(path, index=False)
    print(f"{path.name}: {len(df)} rows, {q} features, {len(recipe['sizes'])} classes")


def main():
    OUT.mkdir(exist_ok=True)
    for name, recipe in RECIPES.items():
        generate(name, recipe)


if __name__ == "__main__":
    main()
