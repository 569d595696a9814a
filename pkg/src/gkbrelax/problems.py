"""Built-in saddle-point problems and Matrix Market directory I/O."""

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionError, GkbError
from .gkb import SaddleSystem
from .mmio import mm_read, mm_write


@dataclass
class GeneratedProblem:
    """A system plus, when known, the solution (w, p) of the original block system."""

    system: SaddleSystem
    u_exact: np.ndarray | None
    p_exact: np.ndarray | None
    description: str
    h: float


class _Assembler:
    """Accumulates a symmetric matrix from terms c * (x_a - x_b)^2."""

    def __init__(self, size):
        self.rows, self.cols, self.vals = [], [], []
        self.rhs = np.zeros(size)
        self.size = size

    def diff(self, a, b, c, b_value=None):
        """Add c*(x_a - x_b)^2; `b` is None for a Dirichlet neighbour with value `b_value`."""
        self.rows.append(a); self.cols.append(a); self.vals.append(c)
        if b is None:
            if b_value:
                self.rhs[a] += c * b_value
            return
        self.rows += [b, a, b]
        self.cols += [b, b, a]
        self.vals += [c, -c, -c]

    def matrix(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.size, self.size))


def gen_mac_stokes_channel(nx, ny, length=20.0):
    """Staggered-grid Stokes flow in the channel [-1, length] x [-1, 1].

    Poiseuille inflow on the left, no-slip walls, do-nothing outflow on the
    right (du_x/dx - p = 0, du_y/dx = 0), which fixes the pressure level and
    leaves A with full column rank.  Unknowns: x-velocities on vertical
    faces 1..nx (face nx is the outflow), y-velocities on the interior
    horizontal faces, pressures at cell centres.  The viscous term comes
    from the discrete Dirichlet energy, so M is SPD by construction; A is
    the transpose of minus the cell-integrated divergence.
    """
    if nx < 4 or ny < 4:
        raise ValueError(f"nx and ny must be >= 4, got nx={nx}, ny={ny}")
    if not length > -1.0:
        raise ValueError(f"length must exceed -1, got {length}")
    hx, hy = (length + 1.0) / nx, 2.0 / ny
    xc = -1.0 + hx * (np.arange(nx) + 0.5)
    yc = -1.0 + hy * (np.arange(ny) + 0.5)
    u_in = 1.0 - yc**2

    nu, nv, npres = nx * ny, nx * (ny - 1), nx * ny

    def ux(i, j):  # vertical face i in 1..nx
        return (i - 1) * ny + j

    def uy(i, j):  # horizontal face j in 1..ny-1
        return nu + i * (ny - 1) + (j - 1)

    def cell(i, j):
        return i * ny + j

    asm = _Assembler(nu + nv)
    # x-velocity: x-differences inside each cell
    for i in range(nx):
        for j in range(ny):
            if i == 0:
                asm.diff(ux(1, j), None, hy / hx, u_in[j])
            else:
                asm.diff(ux(i + 1, j), ux(i, j), hy / hx)
    # x-velocity: y-differences, half control volume at the outflow face
    for i in range(1, nx + 1):
        w = 0.5 if i == nx else 1.0
        for j in range(ny - 1):
            asm.diff(ux(i, j + 1), ux(i, j), w * hx / hy)
        asm.diff(ux(i, 0), None, 2.0 * w * hx / hy)
        asm.diff(ux(i, ny - 1), None, 2.0 * w * hx / hy)
    # y-velocity: y-differences inside each cell (walls are zero)
    for i in range(nx):
        for j in range(ny):
            if j == 0:
                asm.diff(uy(i, 1), None, hx / hy)
            elif j == ny - 1:
                asm.diff(uy(i, ny - 1), None, hx / hy)
            else:
                asm.diff(uy(i, j + 1), uy(i, j), hx / hy)
    # y-velocity: x-differences between columns, zero inflow value at half spacing
    for j in range(1, ny):
        asm.diff(uy(0, j), None, 2.0 * hy / hx)
        for i in range(nx - 1):
            asm.diff(uy(i + 1, j), uy(i, j), hy / hx)
    M = asm.matrix()
    g = asm.rhs

    rows, cols, vals = [], [], []
    r = np.zeros(npres)
    for i in range(nx):
        for j in range(ny):
            c = cell(i, j)
            rows.append(ux(i + 1, j)); cols.append(c); vals.append(-hy)
            if i == 0:
                r[c] = -hy * u_in[j]
            else:
                rows.append(ux(i, j)); cols.append(c); vals.append(hy)
            if j < ny - 1:
                rows.append(uy(i, j + 1)); cols.append(c); vals.append(-hx)
            if j > 0:
                rows.append(uy(i, j)); cols.append(c); vals.append(hx)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(nu + nv, npres))

    w_exact = np.zeros(nu + nv)
    for i in range(1, nx + 1):
        for j in range(ny):
            w_exact[ux(i, j)] = u_in[j]
    p_exact = np.repeat(2.0 * (length - xc), ny)
    system = SaddleSystem(M, A, 1.0, g, r)
    desc = f"MAC Stokes channel [-1,{length:g}]x[-1,1], {nx}x{ny} cells"
    return GeneratedProblem(system, w_exact, p_exact, desc, max(hx, hy))


def gen_mixed_poisson_rt0(n, seed=0):
    """Lowest-order Raviart-Thomas x piecewise constants for -div grad u = f on (0,1)^2.

    Flux dofs are normal components on the edges of a uniform n x n grid
    (vertical edges first, then horizontal ones), oriented along +x / +y.
    Homogeneous Dirichlet data for u is natural, so every edge carries a dof.
    Blocks: M = flux mass matrix, A[e, c] = integral over cell c of div phi_e,
    g = 0 and r_c = -integral of f over c, with f ~ U(0, 1) per cell.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    h = 1.0 / n
    nvert = (n + 1) * n
    m = 2 * nvert
    ncell = n * n

    def vert(i, j):
        return i * n + j

    def horiz(i, j):
        return nvert + i * (n + 1) + j

    local = (h * h / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
    rows, cols, vals = [], [], []
    arows, acols, avals = [], [], []
    for i in range(n):
        for j in range(n):
            c = i * n + j
            for pair in ((vert(i, j), vert(i + 1, j)), (horiz(i, j), horiz(i, j + 1))):
                for a in range(2):
                    for bb in range(2):
                        rows.append(pair[a]); cols.append(pair[bb]); vals.append(local[a, bb])
            for e, s in ((vert(i, j), -h), (vert(i + 1, j), h), (horiz(i, j), -h), (horiz(i, j + 1), h)):
                arows.append(e); acols.append(c); avals.append(s)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(m, m))
    A = sp.csr_matrix((avals, (arows, acols)), shape=(m, ncell))
    rng = np.random.default_rng(seed)
    f = rng.uniform(0.0, 1.0, ncell)
    r = -f * h * h
    system = SaddleSystem(M, A, 1.0, np.zeros(m), r)
    desc = f"mixed Poisson RT0/P0 on {n}x{n} squares, seed {seed}"
    return GeneratedProblem(system, None, None, desc, h)


def rt0_interpolate(n, field):
    """Edge dofs (normal components at edge midpoints) of a vector field (x, y) -> (fx, fy)."""
    h = 1.0 / n
    nvert = (n + 1) * n
    out = np.zeros(2 * nvert)
    for i in range(n + 1):
        for j in range(n):
            out[i * n + j] = field(i * h, (j + 0.5) * h)[0]
    for i in range(n):
        for j in range(n + 1):
            out[nvert + i * (n + 1) + j] = field((i + 0.5) * h, j * h)[1]
    return out


def dense_solve(system):
    """Reference (w, p) of the original block system by a dense LU solve."""
    K = system.block_matrix()
    sol = scipy.linalg.solve(K, np.concatenate([system.g, system.r]))
    return sol[:system.m], sol[system.m:]


def gen_random_saddle(m, n, cond_target=1.0, seed=0, a_mode="whitened", max_retries=10):
    """Small dense-backed instance: M = Q D Q^T with log-spaced spectrum in [1, cond_target].

    With ``a_mode="whitened"`` (default) A = M^{1/2} G for a Gaussian G, so
    the Schur complement A^T M^{-1} A = G^T G does not inherit the
    conditioning of M: `cond_target` then controls the inner problem only.
    ``a_mode="gaussian"`` takes A = G directly.
    """
    if not m > n >= 1:
        raise ValueError(f"need m > n >= 1, got m={m}, n={n}")
    if cond_target < 1.0:
        raise ValueError(f"cond_target must be >= 1, got {cond_target}")
    if a_mode not in ("whitened", "gaussian"):
        raise ValueError(f"a_mode must be 'whitened' or 'gaussian', got {a_mode!r}")
    for attempt in range(max_retries):
        rng = np.random.default_rng([seed, attempt])
        Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        D = np.logspace(0.0, np.log10(cond_target), m)
        M = (Q * D) @ Q.T
        M = 0.5 * (M + M.T)
        A = rng.standard_normal((m, n))
        if a_mode == "whitened":
            A = (Q * np.sqrt(D)) @ (Q.T @ A)
        if np.linalg.svd(A, compute_uv=False)[-1] > 1e-8 * np.sqrt(m):
            break
    else:
        raise GkbError(f"could not generate a full-rank A after {max_retries} attempts")
    g = rng.standard_normal(m)
    r = rng.standard_normal(n)
    system = SaddleSystem(sp.csr_matrix(M), sp.csr_matrix(A), 1.0, g, r)
    w, p = dense_solve(system)
    desc = f"random saddle m={m} n={n} cond(M)={cond_target:g} seed {seed}"
    return GeneratedProblem(system, w, p, desc, 1.0)


SYSTEM_FILES = ("M.mtx", "A.mtx", "g.mtx", "r.mtx", "meta.txt")


def save_system(system, dir_path):
    os.makedirs(dir_path, exist_ok=True)
    mm_write(os.path.join(dir_path, "M.mtx"), system.M)
    mm_write(os.path.join(dir_path, "A.mtx"), system.A)
    mm_write(os.path.join(dir_path, "g.mtx"), system.g)
    mm_write(os.path.join(dir_path, "r.mtx"), system.r)
    with open(os.path.join(dir_path, "meta.txt"), "w") as fh:
        fh.write(f"eta={system.eta!r}\n")


def _read_meta(path):
    meta = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise GkbError(f"{path}:{lineno}: expected 'key=value', got {line!r}")
            meta[key.strip()] = value.strip()
    try:
        return float(meta.get("eta", "1.0"))
    except ValueError:
        raise GkbError(f"{path}: eta is not a real number: {meta['eta']!r}") from None


def load_system(dir_path):
    """Load M.mtx, A.mtx, g.mtx, r.mtx and meta.txt (``eta=<real>``) from a directory."""
    if not os.path.isdir(dir_path):
        raise FileNotFoundError(f"system directory not found: {dir_path}")
    for name in SYSTEM_FILES:
        path = os.path.join(dir_path, name)
        if not os.path.isfile(path):
            raise FileNotFoundError(f"missing file {name} in {dir_path}")
    M = mm_read(os.path.join(dir_path, "M.mtx"))
    A = mm_read(os.path.join(dir_path, "A.mtx"))
    g = mm_read(os.path.join(dir_path, "g.mtx"))
    r = mm_read(os.path.join(dir_path, "r.mtx"))
    for name, obj in (("M.mtx", M), ("A.mtx", A)):
        if not sp.issparse(obj):
            raise DimensionError(f"{name} must be a matrix, got a vector")
    for name, obj in (("g.mtx", g), ("r.mtx", r)):
        if sp.issparse(obj):
            raise DimensionError(f"{name} must be a single-column array (vector)")
    eta = _read_meta(os.path.join(dir_path, "meta.txt"))
    return SaddleSystem(M, A, eta, g, r)


GENERATORS = {
    "mac-stokes": gen_mac_stokes_channel,
    "mixed-poisson": gen_mixed_poisson_rt0,
    "random": gen_random_saddle,
}
