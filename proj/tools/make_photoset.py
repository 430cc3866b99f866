#!/usr/bin/env python3
"""Builds the desk-scale photo set used by the acceptance suite.

Each output image is a 1024x1024 mosaic of four 512x512 tiles cropped from
permissively licensed sample photos bundled with scikit-image, scikit-learn
and matplotlib (public domain / CC0 / CC-BY). Sources smaller than 512 px
are upscaled just enough to cover a tile. Training and held-out images are
drawn from disjoint source photos; every held-out tile is distinct, while
training tiles are reused in a transposed orientation to fill eight images.

usage: make_photoset.py OUT_DIR
"""
import os
import sys

from PIL import Image, ImageOps

TILE = 512


def locate():
    import matplotlib
    import skimage
    import sklearn

    sk = os.path.join(os.path.dirname(skimage.__file__), "data")
    skl = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images")
    mpl = os.path.join(matplotlib.get_data_path(), "sample_data")
    return {
        "astronaut": os.path.join(sk, "astronaut.png"),
        "camera": os.path.join(sk, "camera.png"),
        "grass": os.path.join(sk, "grass.png"),
        "moon": os.path.join(sk, "moon.png"),
        "ihc": os.path.join(sk, "ihc.png"),
        "cell": os.path.join(sk, "cell.png"),
        "hubble": os.path.join(sk, "hubble_deep_field.jpg"),
        "coffee": os.path.join(sk, "coffee.png"),
        "chelsea": os.path.join(sk, "chelsea.png"),
        "rocket": os.path.join(sk, "rocket.jpg"),
        "motorcycle": os.path.join(sk, "motorcycle_left.png"),
        "clock": os.path.join(sk, "clock_motion.png"),
        "china": os.path.join(skl, "china.jpg"),
        "flower": os.path.join(skl, "flower.jpg"),
        "hopper": os.path.join(mpl, "grace_hopper.jpg"),
        "coins": os.path.join(sk, "coins.png"),
        "brick": os.path.join(sk, "brick.png"),
        "gravel": os.path.join(sk, "gravel.png"),
        "retina": os.path.join(sk, "retina.jpg"),
    }


TRAIN = ["astronaut", "camera", "grass", "moon", "ihc", "cell", "coffee:2", "chelsea:2", "rocket:2",
         "motorcycle:2", "clock"]
TEST = ["china:2", "flower:2", "hopper", "coins", "brick", "gravel", "retina:4", "hubble:4"]


def spread(extent, n):
    """n tile offsets along an axis: disjoint and centered when they fit."""
    if n == 1:
        return [(extent - TILE) // 2]
    if extent >= n * TILE:
        start = (extent - n * TILE) // 2
        return [start + i * TILE for i in range(n)]
    return [round(i * (extent - TILE) / (n - 1)) for i in range(n)]


def tiles_of(path, count):
    im = Image.open(path).convert("RGB")
    w, h = im.size
    s = max(1.0, TILE / min(w, h))
    if s > 1.0:
        im = im.resize((max(TILE, round(w * s)), max(TILE, round(h * s))), Image.LANCZOS)
        w, h = im.size
    if count == 4:
        offsets = [(x, y) for y in spread(h, 2) for x in spread(w, 2)]
    elif count == 2 and w >= h:
        offsets = [(x, spread(h, 1)[0]) for x in spread(w, 2)]
    elif count == 2:
        offsets = [(spread(w, 1)[0], y) for y in spread(h, 2)]
    else:
        offsets = [(spread(w, 1)[0], spread(h, 1)[0])]
    return [im.crop((x, y, x + TILE, y + TILE)) for x, y in offsets]


def collect(names, paths):
    out = []
    for entry in names:
        name, _, n = entry.partition(":")
        out.extend(tiles_of(paths[name], int(n) if n else 1))
    return out


def mosaics(tiles, count):
    pool = list(tiles)
    # Reuse tiles in a transposed orientation when the pool runs short.
    while len(pool) < 4 * count:
        pool.extend(ImageOps.mirror(t).transpose(Image.ROTATE_90) for t in tiles)
    result = []
    # Interleave so each image mixes tiles from several sources.
    for m in range(count):
        canvas = Image.new("RGB", (2 * TILE, 2 * TILE))
        for k in range(4):
            canvas.paste(pool[k * count + m], ((k % 2) * TILE, (k // 2) * TILE))
        result.append(canvas)
    return result


def main():
    if len(sys.argv) != 2:
        print(__doc__)
        return 1
    out = sys.argv[1]
    paths = locate()
    for split, names, count in (("train", TRAIN, 8), ("test", TEST, 4)):
        d = os.path.join(out, split)
        os.makedirs(d, exist_ok=True)
        for i, im in enumerate(mosaics(collect(names, paths), count)):
            im.save(os.path.join(d, f"{split}_{i:02d}.png"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
