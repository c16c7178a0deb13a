"""Stack simple outlines into closed solids.

A square stacked twice becomes a 12-facet prism. A circle and square mixed
over three layers shows how layers with different point counts are joined:
each wall band has exactly as many facets as the two outlines have points
together.

    python demos/basic_shapes.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from slicemesh.contour import ContourPolyline
from slicemesh.mesh import audit
from slicemesh.stitch import LayerStack, assemble, plan_stitch
from slicemesh.stl import save_stl


def circle(n, r):
    t = 2 * np.pi * np.arange(n) / n
    return ContourPolyline(np.column_stack([r * np.cos(t), r * np.sin(t)]))


def square(side):
    h = side / 2
    return ContourPolyline(np.array([[-h, -h], [h, -h], [h, h], [-h, h]]))


def show(name, mesh, out_dir):
    info = audit(mesh)
    path = out_dir / f"{name}.stl"
    save_stl(path, mesh)
    print(
        f"{name:12s} facets={info['facets']:4d} watertight={info['watertight']} "
        f"chi={info['euler_characteristic']} volume={info['signed_volume']:.3f} -> {path}"
    )


def main(out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)

    # two identical squares: 2 cap triangles at each end + 8 wall triangles
    show("prism", assemble(LayerStack((square(10), square(10)), z_spacing_mm=5.0)), out_dir)

    # a 64-gon cylinder; its volume approaches pi r^2 h as n grows
    show("cylinder", assemble(LayerStack.from_contours([circle(64, 5.0)] * 2, 10.0)), out_dir)

    # three layers with 4, 12 and 4 points need two wall bands
    layers = [square(10), circle(12, 6.0), square(8)]
    for top, bottom in zip(layers[1:], layers[:-1]):
        plan = plan_stitch(top, bottom)
        print(f"  wall {len(bottom)} -> {len(top)} points: case={plan.case}, facets={len(top) + len(bottom)}")
    show("three_layer", assemble(LayerStack.from_contours(layers, 4.0)), out_dir)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output"))
