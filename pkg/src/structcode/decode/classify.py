"""Turn measured element lengths into trits."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import UnclassifiableSpread
from ..imgproc import kmeans

MIN_LENGTHS = 8


def _cluster_1d(x: np.ndarray, k: int, n_init: int, seed: int):
    res = kmeans(x[:, None], k, seed=seed, n_init=n_init)
    order = np.argsort(res.centers[:, 0])
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    labels = rank[res.labels]
    centers = res.centers[order, 0]
    std = float(np.sqrt(res.inertia / len(x)))
    return labels, centers, std


def _separated(centers: np.ndarray, std: float) -> bool:
    return bool(np.min(np.diff(centers)) >= 2.0 * std)


def classify_candidates(lengths: Sequence[float], allow_uniform: bool = False,
                        n_init: int = 5, seed: int = 0) -> list[tuple[int, ...]]:
    """Trit hypotheses for ``lengths``, most likely first.

    Normally a single 3-means labelling (clusters ranked by centre). When the
    three clusters are not separated, two-level readings from 2-means are
    offered instead, for the caller to validate against the anchor.
    """
    x = np.asarray(lengths, dtype=np.float64)
    if len(x) < MIN_LENGTHS:
        raise UnclassifiableSpread(f"{len(x)} lengths are too few to classify")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise UnclassifiableSpread("lengths must be positive")
    scale = float(np.median(x))
    if np.ptp(x) <= 1e-9 * scale:
        if allow_uniform:
            return [(0,) * len(x)]
        raise UnclassifiableSpread("all lengths are equal")

    if len(np.unique(x)) >= 3:
        labels, centers, std = _cluster_1d(x, 3, n_init, seed)
        if _separated(centers, std):
            return [tuple(int(v) for v in labels)]

    labels, centers, std = _cluster_1d(x, 2, n_init, seed)
    if not _separated(centers, std):
        raise UnclassifiableSpread(
            f"cluster separation {np.min(np.diff(centers)):.3g} is below twice the spread {std:.3g}")
    a, b = centers
    half = (b - a) / 2.0
    lattice = tuple(int(v) for v in np.clip(np.rint((x - a) / half), 0, 2))
    out = [lattice, tuple(int(v) for v in labels), tuple(int(v) + 1 for v in labels),
           tuple(2 * int(v) for v in labels)]
    seen, uniq = set(), []
    for h in out:
        if h not in seen:
            seen.add(h)
            uniq.append(h)
    return uniq


def classify_lengths(lengths: Sequence[float], allow_uniform: bool = False,
                     n_init: int = 5, seed: int = 0) -> tuple[int, ...]:
    """3-means classification of lengths into 0/1/2 by ascending cluster centre."""
    return classify_candidates(lengths, allow_uniform, n_init, seed)[0]


# ---------------------------------------------------------------------------
# finger joints: one shared step, a per-side base width


def _lattice_fit(sides: list[np.ndarray], delta: float):
    """Per-side offsets and integer levels for a common step ``delta``."""
    offsets, levels = [], []
    for x in sides:
        phase = np.angle(np.exp(2j * np.pi * x / delta).mean()) / (2 * np.pi) * delta
        k = np.rint((x - phase) / delta)
        k -= k.min()
        offsets.append(float(np.mean(x - k * delta)))
        levels.append(k.astype(int))
    return offsets, levels


def _refit_delta(sides, levels) -> float | None:
    """Least-squares step given integer levels (one free offset per side)."""
    num = den = 0.0
    for x, k in zip(sides, levels):
        kc = k - k.mean()
        num += float(np.dot(kc, x - x.mean()))
        den += float(np.dot(kc, kc))
    return num / den if den > 0 else None


def classify_joint_sides(side_lengths: Sequence[Sequence[float]], n_init: int = 5,
                         seed: int = 0, max_hypotheses: int = 81) -> list[tuple[int, ...]]:
    """Trit hypotheses for a perimeter whose sides each have their own base width.

    Lengths on one side are ``d_side + trit * delta`` with one ``delta`` for
    the whole plate. The step comes from 3-means over all lengths and is then
    refined on a per-side lattice. A side that does not show all three levels
    has an ambiguous offset; every consistent shift is enumerated, those with
    the most similar base widths first.
    """
    sides = [np.asarray(s, dtype=np.float64) for s in side_lengths if len(s)]
    pooled = np.concatenate(sides) if sides else np.zeros(0)
    if len(pooled) < MIN_LENGTHS:
        raise UnclassifiableSpread(f"{len(pooled)} lengths are too few to classify")
    if np.ptp(pooled) <= 1e-9 * float(np.median(pooled)):
        raise UnclassifiableSpread("all lengths are equal")

    labels, centers, std = _cluster_1d(pooled, 3, n_init, seed)
    delta = float(centers[2] - centers[0]) / 2.0
    if delta <= 0:
        raise UnclassifiableSpread("no length spread")
    for _ in range(3):
        offsets, levels = _lattice_fit(sides, delta)
        new = _refit_delta(sides, levels)
        if new is None or new <= 0 or abs(new - delta) <= 1e-9 * delta:
            break
        delta = new
    offsets, levels = _lattice_fit(sides, delta)

    resid = np.concatenate([x - o - k * delta for x, o, k in zip(sides, offsets, levels)])
    noise = float(np.sqrt(np.mean(resid ** 2)))
    if any(k.max() > 2 for k in levels) or delta < 2.0 * noise:
        raise UnclassifiableSpread(
            f"lengths do not sit on a three-level lattice (step {delta:.3g}, residual {noise:.3g})")

    choices = [list(range(3 - int(k.max()))) for k in levels]
    combos = [[]]
    for ch in choices:
        combos = [c + [s] for c in combos for s in ch]
    def base_spread(shifts):
        bases = [o - s * delta for o, s in zip(offsets, shifts)]
        return (float(np.ptp(bases)), shifts)
    combos.sort(key=base_spread)
    out = []
    for shifts in combos[:max_hypotheses]:
        out.append(tuple(int(t) for k, s in zip(levels, shifts) for t in k + s))
    return out
