"""Finite-dimensional Lie algebras as structure-constant tables.

Structure constants are stored dense with layout ``c[i, j, k]`` meaning
``[e_i, e_j] = sum_k c[i, j, k] e_k``.  Dimensions are capped at 32; every
construction checks antisymmetry exactly and the Jacobi identity to a
configurable tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DIM = 32
DEFAULT_TOL = 1e-9


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class LieAlgebra:
    """Lie algebra given by its structure-constant table."""

    structure_constants: np.ndarray
    basis_labels: tuple[str, ...] | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise AlgebraError("structure constants must be a cubic rank-3 array")
        if c.shape[0] > MAX_DIM:
            raise AlgebraError(f"dimension {c.shape[0]} exceeds cap {MAX_DIM}")
        # antisymmetry is enforced, not just checked
        c = 0.5 * (c - np.swapaxes(c, 0, 1))
        object.__setattr__(self, "structure_constants", c)
        res = jacobi_residual(c)
        if res > self.tol:
            raise AlgebraError(f"Jacobi residual {res:.3e} exceeds tolerance {self.tol:.1e}")

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def bracket(self, x, y):
        return bracket(self, x, y)

    def adjoint(self, x) -> np.ndarray:
        """Matrix of ad_x acting on coordinate vectors."""
        x = np.asarray(x, dtype=float)
        return np.einsum("i,ijk->kj", x, self.structure_constants)


def bracket(A: LieAlgebra, x, y):
    """Evaluate [x, y] through the structure constants."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != (A.dim,) or y.shape != (A.dim,):
        raise AlgebraError(f"expected coordinate vectors of length {A.dim}")
    return np.einsum("i,j,ijk->k", x, y, A.structure_constants)


def jacobi_residual(c: np.ndarray) -> float:
    """Max-norm of [[x,y],z] + [[y,z],x] + [[z,x],y] over basis triples."""
    t = np.einsum("ijm,mkl->ijkl", c, c)
    cyc = t + np.einsum("jkil->ijkl", t) + np.einsum("kijl->ijkl", t)
    return float(np.max(np.abs(cyc))) if c.size else 0.0


@dataclass(frozen=True)
class JacobiReport:
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def check_jacobi(A: LieAlgebra, tol: float = DEFAULT_TOL) -> JacobiReport:
    return JacobiReport(jacobi_residual(A.structure_constants), tol)


@dataclass(frozen=True)
class MatrixRealization:
    """Concrete matrices realizing the basis of a Lie algebra.

    The commutators of the generators must reproduce the structure
    constants; this is verified at construction.
    """

    algebra: LieAlgebra
    generators: tuple[np.ndarray, ...]
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=float) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if len(gens) != self.algebra.dim:
            raise AlgebraError("one generator per basis element required")
        d = gens[0].shape[0]
        for g in gens:
            if g.shape != (d, d):
                raise AlgebraError("generators must be square matrices of equal size")
        res = self.closure_residual()
        if res > self.tol:
            raise AlgebraError(f"commutator closure residual {res:.3e} > {self.tol:.1e}")

    @property
    def matrix_dim(self) -> int:
        return self.generators[0].shape[0]

    def closure_residual(self) -> float:
        c = self.algebra.structure_constants
        res = 0.0
        for i, Gi in enumerate(self.generators):
            for j, Gj in enumerate(self.generators):
                target = sum(c[i, j, k] * Gk for k, Gk in enumerate(self.generators))
                res = max(res, float(np.max(np.abs(Gi @ Gj - Gj @ Gi - target))))
        return res

    def element(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.tensordot(xi, np.stack(self.generators), axes=([0], [0]))


def adjoint_realization(A: LieAlgebra, tol: float = 1e-8) -> MatrixRealization:
    """Realize the algebra by its adjoint matrices (faithful when the
    center is trivial)."""
    n = A.dim
    gens = [A.adjoint(np.eye(n)[i]) for i in range(n)]
    return MatrixRealization(A, tuple(gens), tol=tol)


def exp_matrix(R: MatrixRealization, xi, t: float = 1.0) -> np.ndarray:
    """exp(t * sum_i xi_i G_i), scaling-and-squaring to machine precision."""
    m = scipy.linalg.expm(float(t) * R.element(xi))
    if not np.all(np.isfinite(m)):
        raise AlgebraError("matrix exponential produced non-finite entries")
    return m


@dataclass(frozen=True)
class LogResult:
    coords: np.ndarray | None
    off_span_residual: float
    in_region: bool

    @property
    def ok(self) -> bool:
        return self.in_region and self.coords is not None


def principal_log(g: np.ndarray, series_tol: float = 1e-16) -> np.ndarray:
    """Principal matrix log by inverse scaling-and-squaring.

    Requires spectral radius of g - I below 1; repeated principal square
    roots bring the argument close to the identity before the Mercator
    series is summed.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    eye = np.eye(n)
    rho = np.max(np.abs(np.linalg.eigvals(g - eye)))
    if rho >= 1.0:
        raise AlgebraError(f"outside log convergence region (spectral radius {rho:.3f} >= 1)")
    k = 0
    a = g.copy()
    while np.linalg.norm(a - eye) > 0.25 and k < 40:
        a = scipy.linalg.sqrtm(a).real
        k += 1
    x = a - eye
    term = x.copy()
    out = x.copy()
    sign = -1.0
    for m in range(2, 60):
        term = term @ x
        incr = sign / m * term
        out += incr
        sign = -sign
        if np.max(np.abs(incr)) < series_tol:
            break
    return out * (2.0 ** k)


def log_matrix(R: MatrixRealization, g: np.ndarray, span_tol: float = 1e-8) -> LogResult:
    """Principal log of g projected onto the generator span.

    The off-span residual reports how far the log lies from the algebra; a
    large residual means g is not (a small exponential of) an algebra
    element.
    """
    try:
        L = principal_log(np.asarray(g, dtype=float))
    except AlgebraError:
        return LogResult(None, np.inf, in_region=False)
    basis = np.stack([G.reshape(-1) for G in R.generators], axis=1)
    coords, *_ = np.linalg.lstsq(basis, L.reshape(-1), rcond=None)
    resid = float(np.linalg.norm(L.reshape(-1) - basis @ coords))
    return LogResult(coords, resid, in_region=True)


@dataclass(frozen=True)
class Subalgebra:
    """Span of coordinate vectors inside a parent algebra."""

    parent: LieAlgebra
    basis_vectors: tuple[np.ndarray, ...]
    tol: float = 1e-8

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=float) for v in self.basis_vectors)
        object.__setattr__(self, "basis_vectors", vecs)
        res = self.closure_residual()
        if res > self.tol:
            raise AlgebraError(f"subalgebra closure residual {res:.3e} > {self.tol:.1e}")

    @property
    def dim(self) -> int:
        return len(self.basis_vectors)

    def matrix(self) -> np.ndarray:
        if not self.basis_vectors:
            return np.zeros((self.parent.dim, 0))
        return np.stack(self.basis_vectors, axis=1)

    def closure_residual(self) -> float:
        if not self.basis_vectors:
            return 0.0
        B = self.matrix()
        proj = B @ np.linalg.pinv(B)
        res = 0.0
        for x in self.basis_vectors:
            for y in self.basis_vectors:
                b = bracket(self.parent, x, y)
                res = max(res, float(np.max(np.abs(b - proj @ b))))
        return res


@dataclass(frozen=True)
class AlgebraMap:
    """Linear map between Lie algebras in basis coordinates."""

    source: LieAlgebra
    target: LieAlgebra
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.target.dim, self.source.dim):
            raise AlgebraError("matrix shape must be target.dim x source.dim")
        object.__setattr__(self, "matrix", m)

    def __call__(self, x):
        return self.matrix @ np.asarray(x, dtype=float)

    def compose(self, other: "AlgebraMap") -> "AlgebraMap":
        return AlgebraMap(other.source, self.target, self.matrix @ other.matrix)


@dataclass(frozen=True)
class AutomorphismReport:
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def is_automorphism(A: LieAlgebra, M: AlgebraMap, tol: float = 1e-8) -> AutomorphismReport:
    """Check M[x,y] = [Mx, My] on basis pairs; requires an invertible M."""
    if M.source is not A and M.source.dim != A.dim:
        raise AlgebraError("map must act on the given algebra")
    mat = M.matrix
    if abs(np.linalg.det(mat)) < 1e-14:
        raise AlgebraError("singular matrix cannot be an automorphism")
    n = A.dim
    eye = np.eye(n)
    res = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            lhs = mat @ bracket(A, eye[i], eye[j])
            rhs = bracket(A, mat @ eye[i], mat @ eye[j])
            res = max(res, float(np.max(np.abs(lhs - rhs))))
    return AutomorphismReport(res, tol)


# -- stock algebras -----------------------------------------------------------

def abelian(n: int) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)))


def so3() -> LieAlgebra:
    """[e1,e2]=e3 and cyclic."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return LieAlgebra(c, basis_labels=("e1", "e2", "e3"))


def so3_realization() -> MatrixRealization:
    """Cross-product generators: G_i v = e_i x v."""
    def hat(v):
        return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return MatrixRealization(so3(), tuple(hat(np.eye(3)[i]) for i in range(3)))


def affine_line() -> LieAlgebra:
    """Scaling and translation of the line: [e1, e2] = e2."""
    c = np.zeros((2, 2, 2))
    c[0, 1, 1] = 1.0
    c[1, 0, 1] = -1.0
    return LieAlgebra(c, basis_labels=("scale", "shift"))


def heisenberg() -> LieAlgebra:
    """[e1, e2] = e3 with e3 central."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    return LieAlgebra(c)


def translation_realization(n: int) -> MatrixRealization:
    """R^n as unipotent (n+1)x(n+1) matrices; log is global."""
    gens = []
    for i in range(n):
        g = np.zeros((n + 1, n + 1))
        g[i, n] = 1.0
        gens.append(g)
    return MatrixRealization(abelian(n), tuple(gens))
