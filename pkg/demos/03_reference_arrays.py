"""Dense, spiral and tapered-spiral layouts on the 32 x 32 grid.

Each layout's far-field pattern is summarised by its main-lobe width,
peak side lobe over the standard annulus, and the mean side-lobe level of
the (u, v) map.  The tapered spiral trades main-lobe width for lower far
side lobes; its main lobe is wide enough to spill past r = 0.055, so its
"peak side lobe" over the fixed annulus is the shoulder of that main lobe.

Run:  python demos/03_reference_arrays.py
"""

from sparse2d import DenseGridSpec, build_dense_layout
from sparse2d.beampattern import bp_cut, peak_sll, sample_annulus
from sparse2d.metrics import bp_image, fwhm, msll
from sparse2d.reference import SpiralSpec, spiral_layout
from sparse2d.synthesis import MaskSpec

grid = DenseGridSpec.reference_32x32()
layouts = {
    "dense": build_dense_layout(grid),
    "spiral": spiral_layout(SpiralSpec(256, 4.8), grid),
    "spiral-taper": spiral_layout(SpiralSpec(256, 4.8, taper_fraction=0.5), grid),
}
mask = MaskSpec.reference_32x32()
region = sample_annulus(0.01, 0.01, mask.mainlobe_radius, mask.outer_radius)

print(f"{'layout':14s} {'elements':>8s} {'FWHM u':>8s} {'peak SLL':>9s} {'MSLL':>7s}")
for name, layout in layouts.items():
    u, db = bp_cut(layout, "v=0", 0.001, extent=0.3)
    width = fwhm(u, db, "db")
    img = bp_image(layout, 2.0, 0.01)
    print(f"{name:14s} {len(layout):8d} {width:8.4f} {peak_sll(layout, region):8.2f} "
          f"{msll(img):7.2f}")
