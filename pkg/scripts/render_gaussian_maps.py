"""Render blend maps for a few box shapes and every area ratio into one PNG grid."""
import argparse

import numpy as np
from PIL import Image

from scaleaug.gaussian import BoxGeometry, GaussianMapParams, alpha_to_image, gaussian_map, numeric_area
from scaleaug.policy import AREA_RATIOS

BOXES = [(16, 16), (48, 24), (24, 64), (96, 96)]  # (h, w)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="gaussian_maps.png")
    ap.add_argument("--size", type=int, default=160)
    args = ap.parse_args()
    S = args.size
    tiles = []
    for h, w in BOXES:
        row = []
        for r in AREA_RATIOS:
            p = GaussianMapParams(BoxGeometry(S / 2, S / 2, h, w, S, S), r)
            alpha = gaussian_map(p)
            tile = alpha_to_image(alpha)
            y0, x0 = int(S / 2 - h / 2), int(S / 2 - w / 2)
            tile[y0, x0:x0 + w] = tile[y0 + h - 1, x0:x0 + w] = 128  # box outline
            tile[y0:y0 + h, x0] = tile[y0:y0 + h, x0 + w - 1] = 128
            row.append(np.pad(tile, 2))
            print(f"box {h}x{w} r={r:<4} sigma_x={p.sigma_x:7.2f} sigma_y={p.sigma_y:7.2f} "
                  f"area/target={numeric_area(alpha) / (r * h * w):.4f}")
        tiles.append(np.concatenate(row, axis=1))
    Image.fromarray(np.concatenate(tiles, axis=0), mode="L").save(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
