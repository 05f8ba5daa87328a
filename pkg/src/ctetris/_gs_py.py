"""Pure-Python Gauss-Seidel sweeps, used when the extension is unavailable.

The accumulation order matches ``_gs_ext.pyx`` exactly, so both backends
return bit-identical fields.
"""


def gauss_seidel_sweep(u, rhs, sweeps, shift):
    ny, nx = u.shape
    grid = u.tolist()
    b = rhs.tolist()
    last_i = ny - 1
    last_j = nx - 1
    for _ in range(sweeps):
        for i in range(ny):
            row = grid[i]
            up = grid[i - 1] if i > 0 else None
            down = grid[i + 1] if i < last_i else None
            brow = b[i]
            for j in range(nx):
                s = brow[j]
                deg = 0
                if up is not None:
                    s = s + up[j]
                    deg += 1
                if down is not None:
                    s = s + down[j]
                    deg += 1
                if j > 0:
                    s = s + row[j - 1]
                    deg += 1
                if j < last_j:
                    s = s + row[j + 1]
                    deg += 1
                if deg + shift > 0:
                    row[j] = s / (deg + shift)
    u[...] = grid
