"""Quantum side of the laboratory: the finite Hilbert space attached to the
torus at inverse Planck constant 2 pi N, Weyl and positive quantization of
trigonometric polynomials, an exactly-intertwining propagator for hyperbolic
toral maps, coherent states, and Husimi phase-space output.

States live in C^N in the position representation: component j is the
amplitude at position x = j/N.  Position is the second classical
coordinate, so a frequency pair k = (k1, k2) modulates position through k2
and shifts position through k1.  The elementary operator

    (translation(k) psi)(j) = exp(i pi (k1 k2 + 2 k2 j)/N) psi(j + k1 mod N)

quantizes the plane wave exp(2 pi i k.p); the half phase makes the family
closed under adjoints, translation(k)^dag = translation(-k), so real
symbols quantize to Hermitian matrices.  All phase exponents are reduced
as exact integers mod 2N before exponentiation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .classical import HyperbolicToralMap, TrigPolynomial
from .linalg import dft_matrix, operator_norm


@dataclass(frozen=True)
class PlanckData:
    """Dimension N of the quantized torus and hbar = 1/(2 pi N)."""

    dim: int
    hbar: float

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.dim) / self.dim


def make_planck(dim: int) -> PlanckData:
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    return PlanckData(dim, 1.0 / (2.0 * math.pi * dim))


@dataclass(frozen=True)
class QuantumState:
    """A vector in the position representation."""

    plk: PlanckData
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return QuantumState(self.plk, self.amplitudes / n)


def position_state(plk: PlanckData, j: int) -> QuantumState:
    """Basis vector concentrated at position j/N."""
    if not 0 <= j < plk.dim:
        raise ValueError(f"site index {j} outside 0..{plk.dim - 1}")
    amp = np.zeros(plk.dim, dtype=complex)
    amp[j] = 1.0
    return QuantumState(plk, amp)


@dataclass(frozen=True)
class TorusOperator:
    """An operator on the quantized torus, with its symbol when it has one."""

    plk: PlanckData
    matrix: np.ndarray
    symbol: TrigPolynomial | None = None

    @property
    def dim(self) -> int:
        return self.plk.dim

    def apply(self, state: QuantumState) -> QuantumState:
        return QuantumState(state.plk, self.matrix @ state.amplitudes)

    def expectation(self, state: QuantumState) -> complex:
        u = state.amplitudes
        return complex(np.vdot(u, self.matrix @ u))

    def adjoint(self) -> "TorusOperator":
        return TorusOperator(self.plk, self.matrix.conj().T.copy(), None)


# ---------------------------------------------------------------------------
# Weyl and anti-Wick quantization


def _phase_roots(n: int) -> np.ndarray:
    """exp(i pi m / N) for m = 0..2N-1; all phases index into this table."""
    return np.exp(1j * np.pi * np.arange(2 * n) / n)


def translation_matrix(plk: PlanckData, k) -> np.ndarray:
    """The unitary quantizing exp(2 pi i k.p); defined for every integer k."""
    n = plk.dim
    k1, k2 = int(k[0]), int(k[1])
    j = np.arange(n, dtype=np.int64)
    roots = _phase_roots(n)
    mat = np.zeros((n, n), dtype=complex)
    mat[j, (j + k1) % n] = roots[(k1 * k2 + 2 * k2 * j) % (2 * n)]
    return mat


def _quantize_unchecked(a: TrigPolynomial, plk: PlanckData) -> np.ndarray:
    n = plk.dim
    j = np.arange(n, dtype=np.int64)
    roots = _phase_roots(n)
    mat = np.zeros((n, n), dtype=complex)
    for (k1, k2), c in sorted(a.coefficients.items()):
        mat[j, (j + k1) % n] += c * roots[(k1 * k2 + 2 * k2 * j) % (2 * n)]
    return mat


def _check_degree(a: TrigPolynomial, plk: PlanckData) -> None:
    if a.degree >= plk.dim / 2:
        raise ValueError(
            f"aliasing: symbol degree {a.degree} >= N/2 = {plk.dim / 2}; "
            "frequencies would wrap around the discrete torus"
        )


def weyl_quantize(a: TrigPolynomial, plk: PlanckData) -> TorusOperator:
    """Sum of a_hat(k) translation(k) over the symbol's frequency support.

    Requires degree(a) < N/2 so distinct frequencies stay distinct on the
    discrete torus.  Hermitian for real symbols; the constant 1 quantizes
    to the identity exactly.
    """
    _check_degree(a, plk)
    return TorusOperator(plk, _quantize_unchecked(a, plk), symbol=a)


def antiwick_quantize(a: TrigPolynomial, plk: PlanckData,
                      width: float = 1.0) -> TorusOperator:
    """Positive quantization: Gaussian damping of each mode before the Weyl
    sum, equivalent to smearing the symbol by the coherent-state envelope.

    Mode k is damped by exp(-pi (width k1^2 + k2^2/width) / (2N)).  The
    constant mode is untouched, so the constant 1 still quantizes to the
    identity; nonnegative symbols give matrices whose spectrum is
    nonnegative up to exponentially small tails, and the distance to the
    undamped Weyl operator vanishes as N grows.
    """
    if not width > 0:
        raise ValueError(f"squeezing width must be positive, got {width}")
    _check_degree(a, plk)
    n = plk.dim
    damped = {}
    for (k1, k2), c in a.coefficients.items():
        weight = math.exp(-math.pi * (width * k1 * k1 + k2 * k2 / width)
                          / (2.0 * n))
        damped[(k1, k2)] = c * weight
    return TorusOperator(plk, _quantize_unchecked(TrigPolynomial(damped), plk),
                         symbol=a)


# ---------------------------------------------------------------------------
# propagator


def decompose_into_generators(matrix) -> list:
    """Write an SL(2, Z) matrix as an ordered product of shears and the
    quarter rotation.

    Returns tokens ("shear", c) for [[1, c], [0, 1]] and ("rotation",) for
    [[0, -1], [1, 0]]; multiplying the tokens left to right reproduces the
    input exactly (verified before returning).  The Euclidean algorithm on
    the left column drives the bottom-left entry to zero.
    """
    m = [[int(matrix[0][0]), int(matrix[0][1])],
         [int(matrix[1][0]), int(matrix[1][1])]]
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if det != 1:
        raise ValueError(
            f"generator decomposition needs determinant +1, got {det}"
        )
    original = [row[:] for row in m]
    tokens = []
    while m[1][0] != 0:
        q = m[0][0] // m[1][0]
        tokens.append(("shear", q))
        # peel R(q) off the left: M <- R(-q) M
        m[0][0] -= q * m[1][0]
        m[0][1] -= q * m[1][1]
        tokens.append(("rotation",))
        # peel J off the left: M <- J^{-1} M
        m[0], m[1] = [m[1][0], m[1][1]], [-m[0][0], -m[0][1]]
    if m[0][0] == 1:
        if m[0][1] != 0:
            tokens.append(("shear", m[0][1]))
    else:
        # M = -R(-b) = J J R(-b)
        tokens.append(("rotation",))
        tokens.append(("rotation",))
        if m[0][1] != 0:
            tokens.append(("shear", -m[0][1]))
    check = [[1, 0], [0, 1]]
    for token in tokens:
        if token[0] == "shear":
            g = [[1, token[1]], [0, 1]]
        else:
            g = [[0, -1], [1, 0]]
        check = [[check[0][0] * g[0][0] + check[0][1] * g[1][0],
                  check[0][0] * g[0][1] + check[0][1] * g[1][1]],
                 [check[1][0] * g[0][0] + check[1][1] * g[1][0],
                  check[1][0] * g[0][1] + check[1][1] * g[1][1]]]
    if check != original:
        raise RuntimeError("generator decomposition failed verification")
    return [t for t in tokens if t != ("shear", 0)]


def cat_propagator(tmap: HyperbolicToralMap, plk: PlanckData) -> TorusOperator:
    """The unitary quantizing a hyperbolic toral map.

    Built factor by factor from the generator decomposition: the quarter
    rotation quantizes to the discrete Fourier transform and the shear
    [[1, c], [0, 1]] to the quadratic phase diag(exp(i pi c j^2 / N)).
    Each factor conjugates translation(k) to translation(g^T k) with phase
    one for every integer k, so the product U satisfies

        U^dag translation(k) U = translation(A^T k)      exactly,

    which is the exact form of quantum-classical correspondence for linear
    maps.  A shear with odd c needs its diagonal phase to be N-periodic,
    which holds only for even N; incompatible (map, N) pairs are rejected.
    The global phase is fixed by rotating the (0, 0) entry to the
    nonnegative real axis.
    """
    n = plk.dim
    tokens = decompose_into_generators(tmap.matrix)
    odd_shears = [c for kind, c in
                  ((t[0], t[1] if len(t) > 1 else 0) for t in tokens)
                  if kind == "shear" and c % 2 != 0]
    if odd_shears and n % 2 != 0:
        raise ValueError(
            f"map incompatible with N = {n}: shear coefficient "
            f"{odd_shears[0]} is odd, so the quadratic phase is only "
            "well-defined for even N; choose an even dimension"
        )
    j = np.arange(n, dtype=np.int64)
    roots = _phase_roots(n)
    mat = np.eye(n, dtype=complex)
    for token in tokens:
        if token[0] == "shear":
            c = token[1]
            # right-multiplying by a diagonal scales columns
            mat = mat * roots[(c * j * j) % (2 * n)][np.newaxis, :]
        else:
            mat = mat @ dft_matrix(n)
    entry = mat[0, 0]
    if abs(entry) > 1e-12:
        mat = mat * (entry.conjugate() / abs(entry))
    return TorusOperator(plk, mat, symbol=None)


def egorov_defect(a: TrigPolynomial, n: int, tmap: HyperbolicToralMap,
                  plk: PlanckData, bypass_degree_cap: bool = False) -> float:
    """Operator-norm gap between evolving the quantized observable for n
    steps and quantizing the classically evolved symbol.

    Near machine zero by construction; kept as a regression guard.  The
    evolved symbol's degree grows like lambda^n, and once it reaches N/2
    the symbol no longer determines the operator, so larger n is rejected
    (the correspondence-horizon cap).  With bypass_degree_cap the
    comparison operator is assembled directly from the translated
    frequencies instead, which stays well-defined at any size and checks
    pure phase coherence.
    """
    if n < 0:
        raise ValueError("step count must be nonnegative")
    composed = a.compose_with(tmap, n)
    if not bypass_degree_cap:
        if composed.degree >= plk.dim / 2:
            raise ValueError(
                f"correspondence horizon exceeded: after {n} steps the "
                f"symbol degree {composed.degree} reaches N/2 = "
                f"{plk.dim / 2}; reduce n or enlarge N"
            )
    op = _quantize_unchecked(a, plk)
    target = _quantize_unchecked(composed, plk)
    u = cat_propagator(tmap, plk).matrix
    un = np.linalg.matrix_power(u, n)
    evolved = un.conj().T @ op @ un
    return operator_norm(evolved - target)


# ---------------------------------------------------------------------------
# coherent states and Husimi output

_IMAGE_RANGE = 4


def coherent_state(plk: PlanckData, x: float, xi: float) -> QuantumState:
    """Normalized Gaussian wave packet at position x with momentum xi.

    Built by periodizing the plane Gaussian of width sqrt(hbar) over the
    integer images of the position coordinate; a handful of images already
    reaches machine precision because the Gaussian decays like
    exp(-pi N m^2).
    """
    n = plk.dim
    grid = np.arange(n) / n
    amp = np.zeros(n, dtype=complex)
    for m in range(-_IMAGE_RANGE, _IMAGE_RANGE + 1):
        pos = grid + m - x
        amp += np.exp(-math.pi * n * pos * pos
                      + 2j * math.pi * n * xi * (grid + m))
    norm = np.linalg.norm(amp)
    if norm == 0.0:
        raise ValueError("coherent state underflowed; check parameters")
    return QuantumState(plk, amp / norm)


def husimi(u: QuantumState, grid: int) -> np.ndarray:
    """|overlap with the coherent state at (x, xi)|^2 on a grid x = i/G,
    xi = l/G; entry [i, l] is the value at (i/G, l/G).

    For a normalized state the grid total approximates G^2/N, the
    resolution-of-identity normalization.
    """
    if grid < 1:
        raise ValueError("grid must have at least one point per axis")
    n = u.plk.dim
    amps = u.amplitudes
    sites = np.arange(n) / n
    out = np.empty((grid, grid))
    xis = np.arange(grid) / grid
    for i in range(grid):
        x = i / grid
        packets = np.zeros((grid, n), dtype=complex)
        for m in range(-_IMAGE_RANGE, _IMAGE_RANGE + 1):
            pos = sites + m - x
            envelope = np.exp(-math.pi * n * pos * pos)
            waves = np.exp(2j * math.pi * n * np.outer(xis, sites + m))
            packets += envelope[np.newaxis, :] * waves
        norms = np.linalg.norm(packets, axis=1)
        norms[norms == 0.0] = 1.0
        overlaps = (packets.conj() @ amps) / norms
        out[i, :] = np.abs(overlaps) ** 2
    return out


def write_husimi_csv(values: np.ndarray, path: str) -> None:
    """Emit a Husimi grid as CSV rows "x,xi,value"."""
    g1, g2 = values.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write("x,xi,value\n")
        for i in range(g1):
            for l in range(g2):
                fh.write(f"{i / g1!r},{l / g2!r},{float(values[i, l])!r}\n")
