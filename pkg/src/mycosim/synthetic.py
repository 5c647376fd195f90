"""
Deterministic generators for the bundled data.

* a reconstructed insole-shaped mycelium network image (the original
  photograph is not available),
* an electrode arc following the insole edge,
* a 90-minute, 1 Hz, four-channel logger recording with a prescribed number
  of spikes in each 30-minute window.

Every generator takes an explicit seed; the bundled files were produced with
the defaults below (see ``demos/make_bundled_data.py``).
"""
from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

from .electrodes import disc_nodes

NETWORK_SEED = 20221
LOGGER_SEED = 35
TABLE1_CHANNELS = ("Ch 1-2", "Ch 3-4", "Ch 7-8", "Ch 9-10")
TABLE1_COUNTS = ((2, 10, 1), (2, 6, 0), (0, 8, 3), (0, 7, 2))

STRAND_RGB = (236, 228, 150)
SUBSTRATE_RGB = (92, 78, 58)
OUTSIDE_RGB = (12, 12, 12)


# -- network image ---------------------------------------------------------------

def insole_profile(x):
    """Half-height of the insole (fraction of image height) at relative length ``x``.

    Heel on the left, toes on the right.
    """
    x = np.asarray(x, dtype=float)
    knots = np.array([0.0, 0.04, 0.15, 0.42, 0.55, 0.75, 0.88, 0.96, 1.0])
    halfw = np.array([0.0, 0.27, 0.33, 0.26, 0.30, 0.44, 0.43, 0.30, 0.0])
    return np.interp(x, knots, halfw)


def insole_outline(height, width, margin=0.03):
    yy, xx = np.mgrid[0:height, 0:width]
    x = (xx + 0.5) / width
    x = (x - margin) / (1 - 2 * margin)
    y = (yy + 0.5) / height - 0.5
    return (x > 0) & (x < 1) & (np.abs(y) < insole_profile(np.clip(x, 0, 1)))


def growth_density(x):
    """Relative branching rate along the insole: sparse heel, dense forefoot."""
    return 0.35 + 0.9 * np.clip((x - 0.2) / 0.6, 0, 1)


def make_network_image(height=960, width=1000, seed=NETWORK_SEED, n_seeds=24,
                       step=7.0, line_width=3, branch_rate=0.14, max_tips=3000):
    """Grow a branching, anastomosing hyphal network inside an insole outline.

    Tips advance in fixed steps with a persistent random heading, branch at a
    rate that grows towards the toes, stop at the insole edge and fuse with
    any other hypha they run into. Returns an ``(height, width, 3)`` uint8 array.
    """
    rng = np.random.default_rng(seed)
    inside = insole_outline(height, width)
    owner = np.full((height, width), -1, dtype=np.int64)

    canvas = Image.new("RGB", (width, height), OUTSIDE_RGB)
    draw = ImageDraw.Draw(canvas)
    sub = np.zeros((height, width, 3), dtype=np.uint8)
    sub[inside] = SUBSTRATE_RGB
    canvas.paste(Image.fromarray(sub), mask=Image.fromarray((inside * 255).astype(np.uint8)))

    ys, xs = np.nonzero(inside)
    # seed positions spread along the length of the insole
    order = np.argsort(xs, kind="stable")
    picks = order[((np.arange(n_seeds) + rng.uniform(0.2, 0.8, n_seeds)) / n_seeds * order.size).astype(int)]
    tips = [[float(ys[p]), float(xs[p]), rng.uniform(-math.pi, math.pi), k] for k, p in enumerate(picks)]
    next_id = n_seeds
    created = n_seeds

    def claim(y0, x0, y1, x1, hid):
        n = int(max(abs(y1 - y0), abs(x1 - x0))) + 1
        for t in np.linspace(0, 1, n + 1):
            r, c = int(round(y0 + t * (y1 - y0))), int(round(x0 + t * (x1 - x0)))
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < height and 0 <= cc < width and owner[rr, cc] < 0:
                        owner[rr, cc] = hid

    def hits(y0, x0, y1, x1, hid):
        n = int(max(abs(y1 - y0), abs(x1 - x0))) + 1
        for t in np.linspace(0, 1, n + 1)[2:]:
            r, c = int(round(y0 + t * (y1 - y0))), int(round(x0 + t * (x1 - x0)))
            if 0 <= r < height and 0 <= c < width and owner[r, c] >= 0 and owner[r, c] != hid:
                return (r, c)
        return None

    while tips:
        survivors = []
        for y, x, heading, hid in tips:
            heading += rng.normal(0.0, 0.22)
            ny, nx = y + step * math.sin(heading), x + step * math.cos(heading)
            r, c = int(round(ny)), int(round(nx))
            if not (0 <= r < height and 0 <= c < width and inside[r, c]):
                # turn back from the edge once, otherwise stop
                if rng.random() < 0.5:
                    survivors.append([y, x, heading + math.pi * rng.uniform(0.6, 1.4), hid])
                continue
            contact = hits(y, x, ny, nx, hid)
            end = contact if contact is not None else (ny, nx)
            draw.line([(x, y), (end[1], end[0])], fill=STRAND_RGB, width=line_width)
            claim(y, x, end[0], end[1], hid)
            if contact is not None:
                continue
            survivors.append([ny, nx, heading, hid])
            rate = branch_rate * float(growth_density(nx / width))
            if created < max_tips and rng.random() < rate:
                side = 1 if rng.random() < 0.5 else -1
                survivors.append([ny, nx, heading + side * rng.uniform(0.5, 1.2), next_id])
                next_id += 1
                created += 1
        tips = survivors
    return np.asarray(canvas, dtype=np.uint8).copy()


def save_rgb_png(pixels, path):
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format="PNG")


# -- electrode arc ---------------------------------------------------------------

def auto_layout(grid, n=16, inset=0.12, arc=(200.0, 520.0), min_nodes=7, prefix="E"):
    """Place ``n`` electrodes on an elliptical arc inside the network's bounding box.

    Angles are in degrees, measured counter-clockwise from the +column axis
    (rows grow downwards, so 270 points at the top edge). Each arc point snaps
    to the nearest node whose radius-2 footprint holds at least ``min_nodes``
    conductive nodes. Returns ``[(id, row, col), ...]``.
    """
    mask = grid.mask
    rr, cc = np.nonzero(mask)
    r0, r1, c0, c1 = rr.min(), rr.max(), cc.min(), cc.max()
    centre_r, centre_c = (r0 + r1) / 2, (c0 + c1) / 2
    half_r, half_c = (r1 - r0) / 2 * (1 - inset), (c1 - c0) / 2 * (1 - inset)
    counts = ndimage.convolve(mask.astype(np.int64), _disc_kernel(2.0), mode="constant")
    good = mask & (counts >= min_nodes)
    _, (near_r, near_c) = ndimage.distance_transform_edt(~good, return_indices=True)
    out = []
    taken = set()
    for k, deg in enumerate(np.linspace(arc[0], arc[1], n)):
        t = math.radians(deg)
        r = int(round(centre_r - half_r * math.sin(t)))
        c = int(round(centre_c + half_c * math.cos(t)))
        r = min(max(r, 0), mask.shape[0] - 1)
        c = min(max(c, 0), mask.shape[1] - 1)
        pos = (int(near_r[r, c]), int(near_c[r, c]))
        if pos in taken:
            continue
        taken.add(pos)
        out.append((f"{prefix}{len(out) + 1}", pos[0], pos[1]))
    return out


def _disc_kernel(radius):
    reach = int(math.ceil(radius))
    yy, xx = np.mgrid[-reach:reach + 1, -reach:reach + 1]
    return (yy ** 2 + xx ** 2 < radius * radius).astype(np.int64)


def footprint_size(grid, center, radius=2.0):
    return int(disc_nodes(grid.mask, center, radius).size)


# -- logger recording ------------------------------------------------------------

def make_logger_fixture(counts=TABLE1_COUNTS, channels=TABLE1_CHANNELS, window_s=1800,
                        rate_hz=1.0, seed=LOGGER_SEED):
    """Synthetic logger export with a known spike count per channel and window.

    The baseline is an offset plus slow drift (4 uV) and uniform noise (+-3 uV);
    no baseline feature reaches 0.03 mV prominence. Each spike is a 3-sample
    bump of 0.05-0.09 mV, at least 30 s from window edges and 20 s from other
    spikes. Returns ``(times, {channel: values}, {channel: spike times})``.
    """
    rng = np.random.default_rng(seed)
    n_windows = len(counts[0])
    n = int(round(n_windows * window_s * rate_hz))
    times = np.arange(n) / rate_hz
    values = {}
    injected = {}
    for ch, row in zip(channels, counts):
        offset = rng.uniform(-0.5, 0.5)
        drift = 0.004 * np.sin(2 * math.pi * times / rng.uniform(900, 2400) + rng.uniform(0, 2 * math.pi))
        x = offset + drift + rng.uniform(-0.003, 0.003, n)
        spikes = []
        for w, k in enumerate(row):
            lo, hi = int((w * window_s + 30) * rate_hz), int(((w + 1) * window_s - 30) * rate_hz)
            chosen = []
            while len(chosen) < k:
                cand = int(rng.integers(lo, hi))
                if all(abs(cand - s) >= 20 * rate_hz for s in chosen):
                    chosen.append(cand)
            spikes.extend(sorted(chosen))
        for s in spikes:
            h = rng.uniform(0.05, 0.09)
            x[s - 1] += 0.35 * h
            x[s] += h
            x[s + 1] += 0.45 * h
        values[ch] = np.round(x, 6)
        injected[ch] = times[np.asarray(spikes, dtype=int)]
    return times, values, injected
