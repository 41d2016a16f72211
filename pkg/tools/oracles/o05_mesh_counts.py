"""Oracle: mesh bookkeeping arithmetic.

Node/element counts for rectilinear meshes, the refined-fixture element
budget, and the coordinate-normalization examples.  Counting only.
"""


def main():
    # rectilinear: n nodes per edge -> (n-1)^2 elements, n^2 nodes
    for w, h, n in [(50, 50, 35), (50, 50, 2), (50, 25, 3)]:
        print(f"rect {w}x{h} mm, {n} nodes/edge: nodes={n * n}, "
              f"elements={(n - 1) * (n - 1)}")

    # conforming fixture budget: 9x19 background grid, two refined patches
    base = 9 * 19
    patch1 = 16 + 3 * 16   # 4x4 core + three rings of 16 around nested discs
    patch2 = 4 + 2 * 8     # 2x2 core + two rings of 8 around the third disc
    removed = 16 + 4       # background cells covered by the patch squares
    print("background cells:", base)
    print("patch1 elements:", patch1, " patch2 elements:", patch2)
    print("fixture total:", base - removed + patch1 + patch2)

    # normalization: corner-origin 50x50 mesh, center (25,25), half-extent 25
    for p in [(25.0, 25.0), (50.0, 50.0), (37.5, 12.5)]:
        xn = (p[0] - 25.0) / 25.0
        yn = (p[1] - 25.0) / 25.0
        print(f"normalize {p} -> ({xn}, {yn})")


if __name__ == "__main__":
    main()
