"""Phase-space distribution experiments: time-weighted matrix elements,
state families with prescribed average behavior, deviation probabilities,
and their comparison against the classical rate function.

A family of unit states u_w with probabilities P_w is averaged against a
quantized observable through

    mu_w = sum_t theta_t <U^t u_w | Op(a) | U^t u_w>,

with theta a nonnegative time profile of unit mass.  The deviation
probability P(delta) = sum { P_w : mu_w >= delta } is computed exactly
(closed threshold), and its decay in the dimension N is regressed against
log hbar and compared with the classical rate-function bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from .classical import HyperbolicToralMap, RateFunction, TrigPolynomial
from .linalg import eigendecompose
from .quantization import (
    PlanckData,
    QuantumState,
    TorusOperator,
    cat_propagator,
    make_planck,
    weyl_quantize,
)


# ---------------------------------------------------------------------------
# time weights


@dataclass(frozen=True)
class TimeWeights:
    """Nonnegative weights over integer times t = offset, offset+1, ...
    with unit total mass."""

    weights: np.ndarray
    offset: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if w.min() < 0:
            raise ValueError(f"negative weight {w.min()}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")

    @property
    def times(self) -> np.ndarray:
        return self.offset + np.arange(self.weights.size)

    def shifted(self, s: int) -> "TimeWeights":
        """The same profile started s steps later."""
        return TimeWeights(self.weights.copy(), self.offset + int(s))


def uniform_weights(horizon: int, offset: int = 0) -> TimeWeights:
    """Uniform averaging over {offset, ..., offset + horizon - 1}."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return TimeWeights(np.full(horizon, 1.0 / horizon), offset)


def delta_weights(t: int) -> TimeWeights:
    """All mass at the single time t."""
    return TimeWeights(np.ones(1), int(t))


def default_horizon(plk: PlanckData, short: bool = False) -> int:
    """N, the 1/hbar-scale averaging window, or its log for the short
    option."""
    return max(1, int(math.log(plk.dim))) if short else plk.dim


# ---------------------------------------------------------------------------
# state families


@dataclass(frozen=True)
class GOFamily:
    """Unit states (columns) with probabilities and a provenance tag.

    For families tagged "eigenbasis" the states are eigenvectors of the
    propagator, so time-weighted measures collapse to their t = 0 value
    exactly; code may rely on that tag for fast paths.
    """

    plk: PlanckData
    states: np.ndarray
    probabilities: np.ndarray
    provenance: str

    def __post_init__(self):
        s = np.asarray(self.states, dtype=complex)
        p = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "probabilities", p)
        if s.ndim != 2 or s.shape[0] != self.plk.dim:
            raise ValueError("states must be a dim x count matrix of columns")
        if p.shape != (s.shape[1],):
            raise ValueError("one probability per state required")
        if p.min() < 0:
            raise ValueError(f"negative probability {p.min()}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
        norms = np.linalg.norm(s, axis=0)
        worst = float(np.abs(norms - 1.0).max())
        if worst > 1e-8:
            raise ValueError(f"family contains non-unit states; worst "
                             f"norm defect {worst:.3e}")

    @property
    def count(self) -> int:
        return self.states.shape[1]


def gof_eigenbasis(propagator: TorusOperator) -> GOFamily:
    """All eigenvectors of the propagator with uniform probabilities."""
    res = eigendecompose(propagator.matrix, kind="unitary")
    n = propagator.dim
    return GOFamily(propagator.plk, res.eigenvectors,
                    np.full(n, 1.0 / n), "eigenbasis")


def gof_position(plk: PlanckData) -> GOFamily:
    """The N position basis vectors with uniform probabilities."""
    n = plk.dim
    return GOFamily(plk, np.eye(n, dtype=complex), np.full(n, 1.0 / n),
                    "position")


def gof_random(plk: PlanckData, samples: int, seed: int) -> GOFamily:
    """Independent Haar-like unit states: normalized complex Gaussians."""
    if samples < 1:
        raise ValueError("need at least one sample")
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 0x67D5], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    z = rng.normal(size=(plk.dim, samples)) + 1j * rng.normal(
        size=(plk.dim, samples))
    z /= np.linalg.norm(z, axis=0)[np.newaxis, :]
    return GOFamily(plk, z, np.full(samples, 1.0 / samples),
                    f"random(seed={seed})")


@dataclass(frozen=True)
class GOFReport:
    """Outcome of the family verifier, one entry per defining condition."""

    norm_defect: float
    norms_pass: bool
    window_note: str
    expectation_defect: float
    expectations_pass: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.norms_pass and self.expectations_pass


def verify_gof(fam: GOFamily, probes, tol: float) -> GOFReport:
    """Check the family conditions: unit norms, the (here trivial) spectral
    window, and probe-averaged expectations matching the normalized trace.

    The spectral window on the quantized torus is the whole space, so the
    window condition holds vacuously and is reported as such.  The
    expectation defect is max over probes of
    |sum_w P_w <u_w|B|u_w> - Tr B / N|.
    """
    norms = np.linalg.norm(fam.states, axis=0)
    norm_defect = float(np.abs(norms - 1.0).max())
    worst = 0.0
    n = fam.plk.dim
    for probe in probes:
        b = probe.matrix if isinstance(probe, TorusOperator) else np.asarray(probe)
        if b.shape != (n, n):
            raise ValueError(f"probe shape {b.shape} does not match dim {n}")
        vals = np.einsum("ji,ji->i", fam.states.conj(), b @ fam.states)
        average = complex(np.dot(fam.probabilities, vals))
        worst = max(worst, abs(average - np.trace(b) / n))
    return GOFReport(
        norm_defect=norm_defect,
        norms_pass=norm_defect <= 1e-8,
        window_note="spectral window is the full space; condition holds vacuously",
        expectation_defect=float(worst),
        expectations_pass=worst <= tol,
        tol=tol,
    )


def evolve_family(fam: GOFamily, propagator: TorusOperator, steps: int) -> GOFamily:
    """The family of U^steps u_w (steps may be negative)."""
    u = propagator.matrix
    states = fam.states.copy()
    if steps >= 0:
        for _ in range(steps):
            states = u @ states
    else:
        uh = u.conj().T
        for _ in range(-steps):
            states = uh @ states
    norms = np.linalg.norm(states, axis=0)
    states = states / norms[np.newaxis, :]
    return GOFamily(fam.plk, states, fam.probabilities.copy(),
                    f"{fam.provenance} evolved {steps}")


# ---------------------------------------------------------------------------
# time-weighted measures


def _columns_measures(states: np.ndarray, op: np.ndarray,
                      theta: TimeWeights, u: np.ndarray | None) -> np.ndarray:
    """mu_w for each column state, evolving all columns in lock-step."""
    if u is None:
        if theta.weights.size != 1 or theta.offset != 0:
            raise ValueError(
                "time weights extend beyond t = 0, so the propagator is "
                "required"
            )
        current = states
        return np.einsum("ji,ji->i", current.conj(), op @ current)
    current = states
    t = 0
    start = int(theta.times[0])
    uh = u.conj().T
    while t > start:
        current = uh @ current
        t -= 1
    while t < start:
        current = u @ current
        t += 1
    total = np.zeros(states.shape[1], dtype=complex)
    for weight in theta.weights:
        if weight != 0.0:
            total += weight * np.einsum("ji,ji->i", current.conj(),
                                        op @ current)
        t += 1
        if t <= int(theta.times[-1]):
            current = u @ current
    return total


def family_measures(fam: GOFamily, a: TrigPolynomial, theta: TimeWeights,
                    propagator: TorusOperator | None = None) -> np.ndarray:
    """The vector of mu_w over the family; real for real symbols.

    Eigenbasis families use the exact time-invariance of eigenvector
    expectations, so the propagator is not needed; other families need it
    whenever theta carries weight away from t = 0.
    """
    op = weyl_quantize(a, fam.plk)
    if fam.provenance == "eigenbasis":
        vals = np.einsum("ji,ji->i", fam.states.conj(),
                         op.matrix @ fam.states)
    else:
        u = propagator.matrix if propagator is not None else None
        vals = _columns_measures(fam.states, op.matrix, theta, u)
    return vals.real if a.is_real else vals


@dataclass(frozen=True)
class MeasureEstimate:
    """A single time-weighted matrix element with its provenance labels."""

    value: complex
    state_label: str
    observable_label: str
    weights_label: str


def semiclassical_measure(u: QuantumState, a: TrigPolynomial,
                          theta: TimeWeights,
                          propagator: TorusOperator) -> MeasureEstimate:
    """sum_t theta_t <U^t u | Op(a) | U^t u>, by repeated application of
    the propagator to the state (no dense power of U is formed)."""
    if abs(u.norm - 1.0) > 1e-8:
        raise ValueError(f"state must be normalized, norm = {u.norm!r}")
    vals = _columns_measures(u.amplitudes[:, np.newaxis],
                             weyl_quantize(a, u.plk).matrix, theta,
                             propagator.matrix)
    value = vals[0]
    if a.is_real:
        value = value.real
    return MeasureEstimate(
        value=value,
        state_label="state",
        observable_label=f"trig[{len(a.coefficients)} modes, deg {a.degree}]",
        weights_label=f"theta[{theta.weights.size} @ {theta.offset}]",
    )


# ---------------------------------------------------------------------------
# deviation probabilities


def _require_deviation_observable(a: TrigPolynomial) -> None:
    if not a.is_real:
        raise ValueError("observable must be real-valued")
    if abs(a.mean) > 1e-14:
        raise ValueError(f"observable must be mean-zero; a_hat(0) = {a.mean}")


def deviation_probability(fam: GOFamily, a: TrigPolynomial,
                          theta: TimeWeights, delta: float,
                          propagator: TorusOperator | None = None) -> float:
    """sum of P_w over states whose measure reaches delta (closed event
    mu_w >= delta)."""
    _require_deviation_observable(a)
    if not delta > 0:
        raise ValueError(f"deviation level must be positive, got {delta}")
    if not a.coefficients:
        return 0.0
    mu = family_measures(fam, a, theta, propagator)
    return float(fam.probabilities[mu >= delta].sum())


@dataclass(frozen=True)
class ScanPoint:
    """One dimension of a deviation sweep."""

    dim: int
    hbar: float
    probability: float


def deviation_scan(tmap: HyperbolicToralMap, a: TrigPolynomial,
                   delta: float, dims) -> list:
    """Eigenbasis deviation probabilities across dimensions."""
    points = []
    for dim in dims:
        plk = make_planck(dim)
        fam = gof_eigenbasis(cat_propagator(tmap, plk))
        prob = deviation_probability(fam, a, delta_weights(0), delta)
        points.append(ScanPoint(dim, plk.hbar, prob))
    return points


@dataclass(frozen=True)
class DeviationRateReport:
    """Slope of log-probability against log hbar, next to the classical
    rate-function bound.

    The classical prediction carries a known factor-of-two ambiguity in
    the time normalization, so both bound and half_bound are reported; the
    consistency flag uses the stated bound minus the margin and is
    one-sided because the theorem constrains only the limsup from above
    (empirical decay may be faster).
    """

    slope: float
    intercept: float
    bound: float
    half_bound: float
    decay_exponent_bound: float
    margin: float
    consistent: bool
    below_resolution: bool
    points_used: int


def deviation_rate_report(scan, a: TrigPolynomial, theta: TimeWeights,
                          delta: float, rate: RateFunction,
                          tmap: HyperbolicToralMap,
                          margin: float = 0.2) -> DeviationRateReport:
    """Least-squares slope of log P against log hbar over a scan, with the
    rate-function comparison H(delta)/log lambda."""
    points = list(scan)
    if len(points) < 4:
        raise ValueError("need a scan over at least 4 dimensions")
    chi = tmap.log_lambda
    h_val = rate(delta) if isinstance(rate, RateFunction) else float(rate)
    bound = h_val / chi
    half_bound = h_val / (2.0 * chi)
    usable = [p for p in points if p.probability > 0.0]
    if len(usable) < 2:
        return DeviationRateReport(
            slope=float("nan"), intercept=float("nan"), bound=bound,
            half_bound=half_bound, decay_exponent_bound=-bound,
            margin=margin, consistent=False, below_resolution=True,
            points_used=len(usable),
        )
    x = np.log([p.hbar for p in usable])
    y = np.log([p.probability for p in usable])
    slope, intercept = np.polyfit(x, y, 1)
    return DeviationRateReport(
        slope=float(slope), intercept=float(intercept), bound=bound,
        half_bound=half_bound, decay_exponent_bound=-bound, margin=margin,
        consistent=bool(slope >= bound - margin), below_resolution=False,
        points_used=len(usable),
    )


# ---------------------------------------------------------------------------
# quantum variance


@dataclass(frozen=True)
class QuantumVarianceReport:
    """Probability-weighted variance of the family measures, with the
    conjectural comparison scales attached (report only, no assertion)."""

    value: float
    mean: float
    dim: int
    one_over_dim: float
    inverse_log_hbar: float
    inverse_log_hbar_squared: float


def quantum_variance(fam: GOFamily, a: TrigPolynomial, theta: TimeWeights,
                     propagator: TorusOperator | None = None) -> float:
    """sum_w P_w |mu_w - E mu|^2 over the family."""
    _require_deviation_observable(a)
    if not a.coefficients:
        return 0.0
    mu = family_measures(fam, a, theta, propagator)
    mean = np.dot(fam.probabilities, mu)
    return float(np.dot(fam.probabilities, np.abs(mu - mean) ** 2))


def quantum_variance_report(fam: GOFamily, a: TrigPolynomial,
                            theta: TimeWeights,
                            propagator: TorusOperator | None = None
                            ) -> QuantumVarianceReport:
    _require_deviation_observable(a)
    if a.coefficients:
        mu = family_measures(fam, a, theta, propagator)
        mean = float(np.dot(fam.probabilities, mu).real)
        value = float(np.dot(fam.probabilities, np.abs(mu - mean) ** 2))
    else:
        mean = 0.0
        value = 0.0
    n = fam.plk.dim
    log_inv_hbar = abs(math.log(fam.plk.hbar))
    return QuantumVarianceReport(
        value=value, mean=mean, dim=n, one_over_dim=1.0 / n,
        inverse_log_hbar=1.0 / log_inv_hbar,
        inverse_log_hbar_squared=1.0 / log_inv_hbar ** 2,
    )
