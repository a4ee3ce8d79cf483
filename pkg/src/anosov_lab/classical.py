"""Classical side of the laboratory: hyperbolic toral maps and their
thermodynamic formalism.

A hyperbolic 2x2 integer matrix A with |det A| = 1 acts on the torus
T^2 = R^2/Z^2.  This module enumerates its periodic points exactly,
approximates topological pressure by periodic-orbit sums, builds the
large-deviation rate function H(delta) as a Legendre transform of the
pressure curve, computes the dynamical variance exactly in Fourier,
estimates Kolmogorov-Sinai entropy from cylinder counts, and measures
Birkhoff deviation probabilities by Monte Carlo.

Observables are trigonometric polynomials a(p) = sum_k a_hat(k) e(k.p)
with e(v) = exp(2 pi i v), p = (p1, p2).  The position coordinate used by
the quantum side is p2.  Composition with the map permutes frequencies:
a(Ap) has coefficient a_hat(k) at frequency A^T k.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

PERIOD_CAP = 14
_MC_CHUNK = 1 << 17


# ---------------------------------------------------------------------------
# maps


def _int_matmul(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2))
        for i in range(2)
    )


def _int_matpow(m, n: int):
    """Exact integer power of a 2x2 unimodular matrix, any sign of n."""
    if n < 0:
        a, b, c, d = m[0][0], m[0][1], m[1][0], m[1][1]
        det = a * d - b * c
        # inverse of a unimodular matrix is the signed adjugate
        m = tuple(
            tuple(x * det for x in row) for row in ((d, -b), (-c, a))
        )
        n = -n
    out = ((1, 0), (0, 1))
    base = m
    while n:
        if n & 1:
            out = _int_matmul(out, base)
        base = _int_matmul(base, base)
        n >>= 1
    return out


@dataclass(frozen=True)
class HyperbolicToralMap:
    """A hyperbolic unimodular toral automorphism p -> A p mod 1.

    `lam` is the modulus of the largest eigenvalue of A and `log_lambda`
    the expansion rate in nats per step.  The unstable log-Jacobian is the
    constant phi_u = -log_lambda.
    """

    matrix: tuple
    lam: float
    log_lambda: float

    @property
    def phi_u(self) -> float:
        return -self.log_lambda

    def matrix_power(self, n: int) -> tuple:
        return _int_matpow(self.matrix, n)

    def matrix_array(self, n: int = 1) -> np.ndarray:
        return np.array(self.matrix_power(n), dtype=np.int64)

    def apply(self, points: np.ndarray, steps: int = 1) -> np.ndarray:
        """Map float torus points (shape (..., 2)) forward `steps` times."""
        a = np.array(self.matrix_power(steps), dtype=float)
        return (np.asarray(points) @ a.T) % 1.0


def make_map(matrix) -> HyperbolicToralMap:
    """Validate a 2x2 integer matrix as a hyperbolic toral automorphism."""
    m = np.asarray(matrix)
    if m.shape != (2, 2):
        raise ValueError("map matrix must be 2x2")
    if not np.all(np.equal(np.mod(m, 1), 0)):
        raise ValueError("map matrix must have integer entries")
    m = m.astype(np.int64)
    a, b, c, d = int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1])
    det = a * d - b * c
    tr = a + d
    if abs(det) != 1:
        raise ValueError(f"not unimodular: |det| = {abs(det)} != 1")
    if abs(tr) <= 2:
        raise ValueError(f"not hyperbolic: |trace| = {abs(tr)} <= 2")
    # largest-modulus root of x^2 - |tr| x + sign-adjusted det = 0
    lam = (abs(tr) + math.sqrt(tr * tr - 4 * det)) / 2.0
    return HyperbolicToralMap(((a, b), (c, d)), lam, math.log(lam))


# ---------------------------------------------------------------------------
# observables


class TrigPolynomial:
    """Real or complex trigonometric polynomial on the 2-torus.

    Stored as a finite map from integer frequency pairs k = (k1, k2) to
    complex coefficients a_hat(k).  The polynomial is real-valued iff
    a_hat(-k) = conj(a_hat(k)) for every k; its Lebesgue mean is a_hat(0).
    Position-only observables (functions of x = p2 alone) are supported on
    k1 = 0.
    """

    def __init__(self, coefficients):
        coeffs = {}
        for k, c in dict(coefficients).items():
            k1, k2 = int(k[0]), int(k[1])
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite coefficient at {k}")
            if c != 0:
                coeffs[(k1, k2)] = coeffs.get((k1, k2), 0j) + c
        self._coeffs = coeffs

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls({})

    @classmethod
    def constant(cls, c) -> "TrigPolynomial":
        return cls({(0, 0): c})

    @classmethod
    def cosine(cls, freq, amplitude: float = 1.0) -> "TrigPolynomial":
        """amplitude * cos(2 pi k.p) for a frequency pair k."""
        k = (int(freq[0]), int(freq[1]))
        if k == (0, 0):
            return cls.constant(amplitude)
        mk = (-k[0], -k[1])
        return cls({k: amplitude / 2.0, mk: amplitude / 2.0})

    @classmethod
    def position_cosine(cls, m: int, amplitude: float = 1.0) -> "TrigPolynomial":
        """amplitude * cos(2 pi m x), a function of position only."""
        return cls.cosine((0, m), amplitude)

    @property
    def coefficients(self) -> dict:
        return dict(self._coeffs)

    @property
    def degree(self) -> int:
        if not self._coeffs:
            return 0
        return max(max(abs(k1), abs(k2)) for k1, k2 in self._coeffs)

    @property
    def mean(self) -> complex:
        return self._coeffs.get((0, 0), 0j)

    @property
    def is_real(self) -> bool:
        for (k1, k2), c in self._coeffs.items():
            if abs(self._coeffs.get((-k1, -k2), 0j) - c.conjugate()) > 1e-12:
                return False
        return True

    @property
    def is_position_only(self) -> bool:
        return all(k1 == 0 for k1, _ in self._coeffs)

    @property
    def coefficient_sum(self) -> float:
        """sum_k |a_hat(k)|, a sup-norm and operator-norm upper bound."""
        return float(sum(abs(c) for c in self._coeffs.values()))

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPolynomial.constant(other)
        coeffs = dict(self._coeffs)
        for k, c in other._coeffs.items():
            coeffs[k] = coeffs.get(k, 0j) + c
        return TrigPolynomial(coeffs)

    __radd__ = __add__

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return TrigPolynomial({k: scalar * c for k, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = TrigPolynomial.constant(other)
        return self + (-other)

    def compose_with(self, tmap: HyperbolicToralMap, steps: int = 1) -> "TrigPolynomial":
        """The pullback a o A^steps; coefficients move to (A^T)^steps k."""
        at = _int_matpow(tuple(zip(*tmap.matrix)), steps)
        coeffs = {}
        for (k1, k2), c in self._coeffs.items():
            kk = (at[0][0] * k1 + at[0][1] * k2, at[1][0] * k1 + at[1][1] * k2)
            coeffs[kk] = coeffs.get(kk, 0j) + c
        return TrigPolynomial(coeffs)

    def evaluate(self, points: np.ndarray):
        """Evaluate at float torus points, shape (..., 2); real output for
        real polynomials."""
        pts = np.asarray(points, dtype=float)
        vals = np.zeros(pts.shape[:-1], dtype=complex)
        for (k1, k2), c in self._coeffs.items():
            vals += c * np.exp(2j * np.pi * (k1 * pts[..., 0] + k2 * pts[..., 1]))
        return vals.real if self.is_real else vals

    def evaluate_rational(self, numerators: np.ndarray, denominator: int):
        """Evaluate at points numerators/denominator with exact phase
        reduction mod 1 (no precision loss for large denominators)."""
        nums = np.asarray(numerators, dtype=np.int64)
        vals = np.zeros(nums.shape[:-1], dtype=complex)
        den = int(denominator)
        for (k1, k2), c in self._coeffs.items():
            arg = (k1 * nums[..., 0] + k2 * nums[..., 1]) % den
            vals += c * np.exp(2j * np.pi * (arg / den))
        return vals.real if self.is_real else vals


def parse_observable_text(text: str) -> TrigPolynomial:
    """Parse an observable from lines "k1 k2 re im"; '#' starts a comment."""
    coeffs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'k1 k2 re im', got {raw!r}")
        try:
            k1, k2 = int(parts[0]), int(parts[1])
            re, im = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed number in {raw!r}") from exc
        key = (k1, k2)
        coeffs[key] = coeffs.get(key, 0j) + complex(re, im)
    return TrigPolynomial(coeffs)


def read_observable(path: str) -> TrigPolynomial:
    with open(path, encoding="ascii") as fh:
        return parse_observable_text(fh.read())


def write_observable(a: TrigPolynomial, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for (k1, k2), c in sorted(a.coefficients.items()):
            fh.write(f"{k1} {k2} {c.real!r} {c.imag!r}\n")


# ---------------------------------------------------------------------------
# periodic points


@dataclass(frozen=True)
class PeriodicPoints:
    """Fixed points of A^n on the torus, as exact rationals num/den."""

    numerators: np.ndarray
    denominator: int
    period: int

    def __len__(self) -> int:
        return self.numerators.shape[0]

    def to_floats(self) -> np.ndarray:
        return self.numerators / float(self.denominator)

    def as_fractions(self):
        den = self.denominator
        for n1, n2 in self.numerators:
            yield (Fraction(int(n1), den), Fraction(int(n2), den))


def _smith_normal_form_2x2(m):
    """U M V = diag(d1, d2) with U, V unimodular; all exact integers."""
    m = [[int(m[0][0]), int(m[0][1])], [int(m[1][0]), int(m[1][1])]]
    u = [[1, 0], [0, 1]]
    v = [[1, 0], [0, 1]]

    def row_op(i, j, q):  # row_i -= q * row_j
        for t in range(2):
            m[i][t] -= q * m[j][t]
            u[i][t] -= q * u[j][t]

    def col_op(i, j, q):  # col_i -= q * col_j
        for t in range(2):
            m[t][i] -= q * m[t][j]
            v[t][i] -= q * v[t][j]

    def swap_rows():
        m[0], m[1] = m[1], m[0]
        u[0], u[1] = u[1], u[0]

    def swap_cols():
        for t in range(2):
            m[t][0], m[t][1] = m[t][1], m[t][0]
            v[t][0], v[t][1] = v[t][1], v[t][0]

    # clear the off-diagonal entries by the Euclidean algorithm
    while m[1][0] != 0 or m[0][1] != 0:
        if m[0][0] == 0:
            if m[1][0] != 0:
                swap_rows()
            else:
                swap_cols()
            continue
        if m[1][0] != 0:
            q = m[1][0] // m[0][0]
            row_op(1, 0, q)
            if m[1][0] != 0:
                swap_rows()
            continue
        q = m[0][1] // m[0][0]
        col_op(1, 0, q)
        if m[0][1] != 0:
            swap_cols()
    if m[0][0] < 0:
        for t in range(2):
            m[0][t] = -m[0][t]
            u[0][t] = -u[0][t]
    if m[1][1] < 0:
        for t in range(2):
            m[1][t] = -m[1][t]
            u[1][t] = -u[1][t]
    return u, (m[0][0], m[1][1]), v


def periodic_points(tmap: HyperbolicToralMap, n: int) -> PeriodicPoints:
    """All fixed points of A^n on the torus, enumerated exactly.

    Solves (A^n - I) p = 0 mod 1 through the Smith normal form; the count
    is |det(A^n - I)| = lam^n + lam^-n - 2 for det A = 1.
    """
    if not 1 <= n <= PERIOD_CAP:
        raise ValueError(
            f"period n={n} outside 1..{PERIOD_CAP} (count grows like lambda^n)"
        )
    an = tmap.matrix_power(n)
    m = ((an[0][0] - 1, an[0][1]), (an[1][0], an[1][1] - 1))
    _, (d1, d2), v = _smith_normal_form_2x2(m)
    count = d1 * d2
    den = count
    a1 = np.arange(d1, dtype=np.int64)
    a2 = np.arange(d2, dtype=np.int64)
    g1, g2 = np.meshgrid(a1, a2, indexing="ij")
    # p = V q with q = (a1/d1, a2/d2); common denominator d1*d2
    s1, s2 = den // d1, den // d2
    n1 = (v[0][0] * s1 * g1 + v[0][1] * s2 * g2) % den
    n2 = (v[1][0] * s1 * g1 + v[1][1] * s2 * g2) % den
    nums = np.stack([n1.ravel(), n2.ravel()], axis=1)
    return PeriodicPoints(nums, den, n)


def _birkhoff_sums(tmap: HyperbolicToralMap, f: TrigPolynomial,
                   pts: PeriodicPoints) -> np.ndarray:
    """Per-point Birkhoff sums sum_{t<n} f(A^t p) over the fixed points of
    A^n, with exact integer orbit arithmetic mod the common denominator."""
    a = np.array(tmap.matrix, dtype=np.int64)
    den = pts.denominator
    nums = pts.numerators.copy()
    total = np.zeros(len(pts))
    for _ in range(pts.period):
        total += f.evaluate_rational(nums, den)
        nums = (nums @ a.T) % den
    return total


# ---------------------------------------------------------------------------
# pressure and the rate function


def _require_real(f: TrigPolynomial, what: str) -> None:
    if not f.is_real:
        raise ValueError(f"{what} must be real-valued")


def topological_pressure(tmap: HyperbolicToralMap, f: TrigPolynomial, n: int) -> float:
    """Periodic-orbit pressure P_n(f) = (1/n) log sum_p exp(S_n f(p)).

    The sum runs over the fixed points of A^n; log-sum-exp guards overflow.
    """
    _require_real(f, "potential")
    pts = periodic_points(tmap, n)
    return float(logsumexp(_birkhoff_sums(tmap, f, pts))) / n


@dataclass(frozen=True)
class PressureReport:
    value: float
    convergence_gap: float
    orbit_order: int


def topological_pressure_report(tmap, f, n: int) -> PressureReport:
    """P_n(f) together with the convergence gap P_n - P_{n-1}."""
    pn = topological_pressure(tmap, f, n)
    gap = pn - topological_pressure(tmap, f, n - 1) if n >= 2 else np.nan
    return PressureReport(pn, gap, n)


@dataclass(frozen=True)
class PressureCurve:
    """Sampled s -> P_n(s a + phi_u) together with its exact evaluator.

    The per-point Birkhoff sums of a over the order-n fixed points are kept
    so the curve (and its derivative) can be re-evaluated at arbitrary s;
    the Legendre transform needs values off the sample grid.
    """

    s_grid: np.ndarray
    values: np.ndarray
    orbit_order: int
    derivative_at_zero: float
    phi_u: float
    birkhoff: np.ndarray = field(repr=False)

    def evaluate(self, s):
        """P_n(s a + phi_u) at arbitrary s (scalar or array)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        vals = np.empty_like(s_arr)
        # chunk the outer product to bound the temporary at ~64 MiB
        step = max(1, (1 << 23) // max(1, self.birkhoff.size))
        for i in range(0, s_arr.size, step):
            block = s_arr[i:i + step, None] * self.birkhoff[None, :]
            vals[i:i + step] = logsumexp(block, axis=1)
        vals = vals / self.orbit_order + self.phi_u
        return float(vals[0]) if np.isscalar(s) or np.ndim(s) == 0 else vals

    def derivative(self, s: float) -> float:
        """d/ds P_n(s a + phi_u): the Gibbs-weighted mean Birkhoff average."""
        w = self.birkhoff * s
        w -= w.max()
        w = np.exp(w)
        return float((self.birkhoff * w).sum() / w.sum()) / self.orbit_order

    @property
    def slope_range(self):
        """Attainable Birkhoff averages: the derivative stays inside this."""
        return (float(self.birkhoff.min()) / self.orbit_order,
                float(self.birkhoff.max()) / self.orbit_order)


def pressure_curve(tmap: HyperbolicToralMap, a: TrigPolynomial,
                   s_grid, n: int) -> PressureCurve:
    """Pressure curve s -> P_n(s a + phi_u) for a real mean-zero observable."""
    _require_real(a, "observable")
    if abs(a.mean) > 1e-14:
        raise ValueError(f"observable must be mean-zero; a_hat(0) = {a.mean}")
    s_grid = np.asarray(s_grid, dtype=float)
    pts = periodic_points(tmap, n)
    birkhoff = _birkhoff_sums(tmap, a, pts)
    values = logsumexp(s_grid[:, None] * birkhoff[None, :], axis=1) / n + tmap.phi_u
    return PressureCurve(s_grid, values, n, float(birkhoff.mean()) / n,
                         tmap.phi_u, birkhoff)


@dataclass(frozen=True)
class RateFunction:
    """H(delta) = inf_s { -s delta + P(s a + phi_u) } on a delta grid.

    Unattainable deviation levels carry the -inf sentinel and a cleared
    `attained` flag.  `minimizer_s` is NaN at sentinel entries.
    """

    delta_grid: np.ndarray
    values: np.ndarray
    minimizer_s: np.ndarray
    attained: np.ndarray

    def __call__(self, delta: float) -> float:
        idx = int(np.argmin(np.abs(self.delta_grid - delta)))
        if abs(self.delta_grid[idx] - delta) > 1e-12:
            raise KeyError(f"delta {delta} not on the rate-function grid")
        return float(self.values[idx])


_BRACKET_START = 50.0
_BRACKET_CAP = 51200.0


def _golden_section(g, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Golden-section minimum bracket for a convex scalar function."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    g1, g2 = g(x1), g(x2)
    while hi - lo > tol:
        if g1 <= g2:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - inv_phi * (hi - lo)
            g1 = g(x1)
        else:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + inv_phi * (hi - lo)
            g2 = g(x2)
    return (lo + hi) / 2.0


def rate_function(curve: PressureCurve, delta_grid) -> RateFunction:
    """Legendre transform of the pressure curve on a grid of deviation levels.

    The curve is centered by its value at s = 0 (the finite-n estimate of
    P(phi_u), which vanishes in exact arithmetic) so H(0) = 0 holds to the
    accuracy of the minimization rather than of the orbit sum.  For each
    delta the convex objective -s delta + P(s a + phi_u) is minimized by a
    golden-section pass refined by bisection on the derivative; the search
    bracket starts at [-50, 50] and doubles until the derivative changes
    sign, with the -inf sentinel for slopes outside the attainable range.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    center = curve.evaluate(0.0)
    values = np.empty_like(delta_grid)
    minimizers = np.empty_like(delta_grid)
    attained = np.ones(delta_grid.shape, dtype=bool)
    for i, delta in enumerate(delta_grid):
        def gprime(s):
            return curve.derivative(s) - delta

        lo, hi = -_BRACKET_START, _BRACKET_START
        while gprime(hi) < 0 and hi < _BRACKET_CAP:
            hi *= 2.0
        while gprime(lo) > 0 and lo > -_BRACKET_CAP:
            lo *= 2.0
        if gprime(hi) < 0 or gprime(lo) > 0:
            values[i] = -np.inf
            minimizers[i] = np.nan
            attained[i] = False
            continue

        def g(s):
            return curve.evaluate(s) - center - s * delta

        s_star = _golden_section(g, lo, hi)
        # derivative bisection sharpens the golden-section bracket
        blo, bhi = max(lo, s_star - 1e-3), min(hi, s_star + 1e-3)
        if gprime(blo) > 0 or gprime(bhi) < 0:
            blo, bhi = lo, hi
        for _ in range(200):
            if bhi - blo < 1e-12:
                break
            mid = (blo + bhi) / 2.0
            if gprime(mid) < 0:
                blo = mid
            else:
                bhi = mid
        s_star = (blo + bhi) / 2.0
        values[i] = g(s_star)
        minimizers[i] = s_star
    return RateFunction(delta_grid, values, minimizers, attained)


def dynamical_variance(tmap: HyperbolicToralMap, a: TrigPolynomial,
                       t_max: int) -> float:
    """sigma^2(a) = sum_{|t| <= t_max} C(t) with C(t) = int a (a o A^t) dLeb.

    Fourier orthogonality makes each correlation exact: C(t) is a finite
    sum of a_hat(k) conj(a_hat((A^T)^t k)) over a's frequency support, and
    it vanishes identically once (A^T)^t pushes every frequency out of the
    support, so the truncated sum equals the infinite one for t_max large
    enough.
    """
    _require_real(a, "observable")
    if abs(a.mean) > 1e-14:
        raise ValueError(f"observable must be mean-zero; a_hat(0) = {a.mean}")
    coeffs = a.coefficients
    if not coeffs:
        return 0.0
    at = tuple(zip(*tmap.matrix))

    def correlation(t: int) -> complex:
        m = _int_matpow(at, t)
        total = 0j
        for (k1, k2), c in coeffs.items():
            kk = (m[0][0] * k1 + m[0][1] * k2, m[1][0] * k1 + m[1][1] * k2)
            other = coeffs.get(kk)
            if other is not None:
                total += c * other.conjugate()
        return total

    sigma2 = correlation(0).real
    for t in range(1, t_max + 1):
        sigma2 += 2.0 * correlation(t).real
    return float(sigma2)


# ---------------------------------------------------------------------------
# sampling


def _philox(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, chunk index): the draw for a
    chunk depends only on its key, never on scheduling order."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF,
                    index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_points(sampler, seed: int, samples: int) -> np.ndarray:
    """Draw torus points in fixed-size chunks with per-chunk keys."""
    chunks = []
    drawn = 0
    index = 0
    while drawn < samples:
        size = min(_MC_CHUNK, samples - drawn)
        chunks.append(sampler(_philox(seed, index), size))
        drawn += size
        index += 1
    return np.concatenate(chunks, axis=0)


def lebesgue_sampler():
    """Uniform (Lebesgue) sampler on the torus."""
    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, 2))
    return sample


def point_sampler(point):
    """Point mass at a fixed torus point."""
    p = np.asarray(point, dtype=float).reshape(2) % 1.0

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.tile(p, (size, 1))
    return sample


def orbit_sampler(points):
    """Uniform measure on a finite set of torus points (e.g. an orbit)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2) % 1.0

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return pts[rng.integers(0, len(pts), size=size)]
    return sample


# ---------------------------------------------------------------------------
# KS entropy from cylinder counts


@dataclass(frozen=True)
class KSEntropyReport:
    """Cylinder-count entropy estimate for a K x K grid partition.

    `value` is the conditional-entropy estimate (H_n - H_m)/(n - m) with
    m = n//2, which removes the depth-one transient that the raw plug-in
    H_n/n carries; both are reported.  `subadditivity_gap` is
    H_m + H(last n-m symbols) - H_n >= 0, an exact inequality for any
    empirical cylinder measure, invariant or not.
    """

    value: float
    levels: np.ndarray
    plugin_rate: float
    subadditivity_gap: float
    min_cylinder_count: int
    flagged_low_counts: bool
    distinct_words: int
    samples: int


def _plugin_entropy(codes: np.ndarray):
    _, counts = np.unique(codes, return_counts=True)
    total = counts.sum()
    h = math.log(total) - float((counts * np.log(counts)).sum()) / total
    return h, counts


def ks_entropy_report(tmap: HyperbolicToralMap, sampler, k: int, n: int,
                      samples: int = 10 ** 6, seed: int = 0) -> KSEntropyReport:
    """Empirical cylinder entropies for the K x K grid partition.

    Samples itineraries of length n, counts cylinder words, and reports the
    level entropies H_1..H_n with the conditional-entropy rate estimate.
    """
    if n < 1:
        raise ValueError("itinerary length n must be >= 1")
    if k < 2:
        raise ValueError("partition needs K >= 2 cells per side")
    alphabet = k * k
    if n * math.log2(alphabet) > 62:
        raise ValueError("word codes exceed 63 bits; reduce n or K")
    pts = _sample_points(sampler, seed, samples)
    cells = np.empty((samples, n), dtype=np.int64)
    for t in range(n):
        cells[:, t] = (np.floor(pts[:, 0] * k).astype(np.int64) * k
                       + np.floor(pts[:, 1] * k).astype(np.int64))
        if t + 1 < n:
            pts = tmap.apply(pts)
    levels = np.empty(n)
    codes = np.zeros(samples, dtype=np.int64)
    counts = None
    for t in range(n):
        codes = codes * alphabet + cells[:, t]
        levels[t], counts = _plugin_entropy(codes)
    m = max(1, n // 2)
    value = (levels[-1] - levels[m - 1]) / (n - m) if n > 1 else levels[0]
    suffix = np.zeros(samples, dtype=np.int64)
    for t in range(m, n):
        suffix = suffix * alphabet + cells[:, t]
    h_suffix, _ = _plugin_entropy(suffix)
    gap = levels[m - 1] + h_suffix - levels[-1]
    min_count = int(counts.min())
    return KSEntropyReport(
        value=float(value),
        levels=levels,
        plugin_rate=float(levels[-1]) / n,
        subadditivity_gap=float(gap),
        min_cylinder_count=min_count,
        flagged_low_counts=min_count < 10,
        distinct_words=int(len(counts)),
        samples=samples,
    )


def ks_entropy_estimate(tmap, sampler, k: int, n: int,
                        samples: int = 10 ** 6, seed: int = 0) -> float:
    """Headline KS-entropy estimate; see ks_entropy_report."""
    return ks_entropy_report(tmap, sampler, k, n, samples, seed).value


# ---------------------------------------------------------------------------
# Birkhoff deviation probabilities


@dataclass(frozen=True)
class DeviationReport:
    """Monte-Carlo estimate of Leb{ x : (1/n) S_n a(x) > delta }."""

    value: float
    hits: int
    samples: int
    flagged_zero_hits: bool


def empirical_deviation_report(tmap: HyperbolicToralMap, a: TrigPolynomial,
                               delta: float, n: int, samples: int,
                               seed: int) -> DeviationReport:
    """Lebesgue probability that the n-step Birkhoff average exceeds delta."""
    _require_real(a, "observable")
    if abs(a.mean) > 1e-14:
        raise ValueError(f"observable must be mean-zero; a_hat(0) = {a.mean}")
    hits = 0
    drawn = 0
    index = 0
    amat = np.array(tmap.matrix, dtype=float)
    while drawn < samples:
        size = min(_MC_CHUNK, samples - drawn)
        pts = _philox(seed, index).random((size, 2))
        total = np.zeros(size)
        for _ in range(n):
            total += a.evaluate(pts)
            pts = (pts @ amat.T) % 1.0
        hits += int((total / n > delta).sum())
        drawn += size
        index += 1
    value = hits / samples
    return DeviationReport(value, hits, samples, hits == 0)


def empirical_deviation(tmap, a, delta: float, n: int, samples: int,
                        seed: int) -> float:
    """Monte-Carlo deviation probability; see empirical_deviation_report."""
    return empirical_deviation_report(tmap, a, delta, n, samples, seed).value
