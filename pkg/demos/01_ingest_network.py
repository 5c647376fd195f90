"""
From photograph to conductive grid
==================================

Threshold the bundled insole image, dilate once, project onto the 364 x 985
simulation grid and look at what survived.

    python3 demos/01_ingest_network.py [out_dir]
"""
import os
import sys


from mycosim import data
from mycosim.ingest import connected_components, ingest, load_image, write_pgm

out = sys.argv[1] if len(sys.argv) > 1 else "demo-out"
os.makedirs(out, exist_ok=True)

img = load_image(data.path(data.NETWORK_IMAGE))
print("image", img.pixels.shape)

grid, counts = ingest(img)
print("conductive pixels after threshold / dilation / projection:", counts)

# connectivity matters: a wave can only reach nodes in its own component
labels, sizes = connected_components(grid)
print(f"{grid.n_conductive} nodes in {sizes.size} component(s), largest {sizes.max()}")
print(f"fill fraction {grid.n_conductive / grid.mask.size:.3f}")

# column profile: the forefoot (high columns) is denser than the heel
profile = grid.mask.sum(axis=0)
for lo in range(0, grid.cols, 200):
    print(f"  cols {lo:4d}-{min(lo + 199, grid.cols - 1):4d}: {profile[lo:lo + 200].mean():6.1f} nodes/col")

write_pgm(grid.mask, os.path.join(out, "insole_grid.pgm"))
print("wrote", os.path.join(out, "insole_grid.pgm"))
