"""Regenerate the bundled 235-element conforming mesh fixture.

Writes src/elastonet/data/mesh2.txt from the deterministic construction in
elastonet.femesh.build_disc_fixture.  Run from the repository root:

    PYTHONPATH=src python3 tools/gen_fixture_mesh.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from elastonet import femesh  # noqa: E402


def main():
    mesh = femesh.build_disc_fixture()
    out = (pathlib.Path(__file__).resolve().parents[1]
           / "src" / "elastonet" / "data" / "mesh2.txt")
    femesh.save_mesh(mesh, out)
    again = femesh.load_conforming(out)
    assert again.n_elements == 235
    assert (again.nodes == mesh.nodes).all()
    print(f"wrote {out} ({mesh.n_nodes} nodes, {mesh.n_elements} elements)")


if __name__ == "__main__":
    main()
