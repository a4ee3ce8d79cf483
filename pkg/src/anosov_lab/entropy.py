"""Smooth partitions of unity, refined word operators, and entropic
uncertainty diagnostics for the quantized torus.

A band-limited partition of unity (P_k) with sum_k P_k^2 = 1 is refined
along the quantum evolution: for a word alpha = (a_0, ..., a_{n-1}) the
operator pi_alpha applies the multiplication operator of atom a_t
conjugated to time t.  From the weights ||pi_alpha u||^2 and
||pi_alpha^* u||^2 of a normalized state u the module computes Shannon
entropies, their time-averaged versions, the pairwise contraction
constant c(n) = max ||pi_beta(n) pi_alpha||, the entropic uncertainty
inequality h^+ + h^- >= -2 log c(n), subadditivity defects below the
Ehrenfest horizon, observability constants of time-averaged position
observables, and grid estimates of the set never seen by an observable.
"""
import math
from dataclasses import dataclass

import numpy as np

from .classical import (HyperbolicToralMap, TrigPolynomial, _plugin_entropy,
                        _sample_points)
from .linalg import extremal_eigen, matrix_scale, operator_norm
from .measures import TimeWeights
from .quantization import (PlanckData, QuantumState, TorusOperator,
                           weyl_quantize)

_WINDOW_GRID = 4096
_PARTITION_TOL = 1e-10
_WORD_CAP = 10 ** 6
_SURVIVOR_TOL = 1e-8
_CUTOFF_NOTE = ("spectral cutoff taken as the identity on the full "
                "quantized space; the leakage correction is identically "
                "zero, so the bound is exact")
_ANALOG_NOTE = ("targets transplanted from the continuous-time setting by "
                "substituting the expansion rate per step; reported only, "
                "never asserted")


# ---------------------------------------------------------------- windows

def _initial_window(count: int, width: float, band_limit: int) -> np.ndarray:
    """Even real coefficients c_0..c_band of a mollified strip indicator.

    The strip [0, 1/count) is convolved with a Gaussian of standard
    deviation `width`, the resulting family q_k is normalized pointwise by
    sqrt(sum q_j^2), and the first atom is band-limited and re-centered so
    the window is even about 0.
    """
    M = _WINDOW_GRID
    f = np.fft.fftfreq(M, d=1.0 / M).astype(np.int64)
    damp = np.exp(-2.0 * math.pi ** 2 * width ** 2 * f.astype(float) ** 2)
    qs = []
    for k in range(count):
        a, b = k / count, (k + 1) / count
        hat = np.zeros(M, dtype=complex)
        nz = f != 0
        mm = f[nz].astype(float)
        hat[nz] = (np.exp(-2j * math.pi * mm * a)
                   - np.exp(-2j * math.pi * mm * b)) / (2j * math.pi * mm)
        hat[~nz] = 1.0 / count
        hat *= damp
        qs.append(np.fft.ifft(hat * M).real)
    qs = np.array(qs)
    total = (qs ** 2).sum(axis=0)
    p0 = qs[0] / np.sqrt(total)
    hat = np.fft.fft(p0) / M
    c = np.empty(band_limit + 1)
    for m in range(band_limit + 1):
        c[m] = (hat[m % M] * np.exp(1j * math.pi * m / count)).real
    return c


def _complementarity_residual(c: np.ndarray, count: int):
    """Residuals of sum_k W(x - k/count)^2 = 1 in Fourier space.

    With w the symmetric coefficient vector of W, the translates sum to a
    constant iff the autocorrelation (w*w) vanishes at every nonzero
    multiple of `count` and equals 1/count at frequency zero.
    """
    band = len(c) - 1
    w = np.concatenate([c[::-1], c[1:]])
    auto = np.convolve(w, w)
    mmax = (2 * band) // count
    res = np.array([auto[2 * band + count * m] - (1.0 / count if m == 0 else 0.0)
                    for m in range(mmax + 1)])
    return res, w, mmax


def _polish_window(c: np.ndarray, count: int, iters: int = 60) -> np.ndarray:
    """Newton-polish window coefficients to exact power complementarity.

    Gauss-Newton on the autocorrelation constraints with a minimum-norm
    step and a backtracking line search; stops at residual 1e-15 or when
    no step scale improves the residual.
    """
    band = len(c) - 1
    for _ in range(iters):
        res, w, mmax = _complementarity_residual(c, count)
        worst = np.abs(res).max()
        if worst < 1e-15:
            break
        jac = np.zeros((mmax + 1, band + 1))
        for m in range(mmax + 1):
            for l in range(band + 1):
                t = 0.0
                for s in ((count * m - l, count * m + l) if l else (count * m,)):
                    if -band <= s <= band:
                        t += w[s + band]
                jac[m, l] = 2.0 * t
        step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        for scale in (1.0, 0.5, 0.25, 0.125, 0.0625):
            trial = c + scale * step
            trial_res, _, _ = _complementarity_residual(trial, count)
            if np.abs(trial_res).max() < worst:
                c = trial
                break
        else:
            break
    return c


def _atom_polynomial(c: np.ndarray, count: int, k: int) -> TrigPolynomial:
    """The window translated to atom k as a real position-only polynomial."""
    center = (k + 0.5) / count
    coeffs = {(0, 0): complex(c[0])}
    for m in range(1, len(c)):
        phase = np.exp(-2j * math.pi * m * center)
        coeffs[(0, m)] = c[m] * phase
        coeffs[(0, -m)] = c[m] * np.conj(phase)
    return TrigPolynomial(coeffs)


@dataclass(frozen=True)
class SmoothPartition:
    """Band-limited real partition of unity: sum_k P_k(x)^2 = 1.

    Atoms are smoothed indicators of the strips [k/K, (k+1)/K) in the
    position coordinate, so their quantizations are diagonal.
    """

    functions: tuple
    width: float
    band_limit: int

    def __post_init__(self):
        if not self.functions:
            raise ValueError("partition needs at least one atom")
        for p in self.functions:
            if not (p.is_real and p.is_position_only):
                raise ValueError("atoms must be real position-only polynomials")
        count = len(self.functions)
        grid = np.arange(4 * count ** 2) / (4 * count ** 2)
        pts = np.stack([np.zeros_like(grid), grid], axis=-1)
        total = np.zeros_like(grid)
        for p in self.functions:
            total += np.asarray(p.evaluate(pts)) ** 2
        defect = float(np.abs(total - 1.0).max())
        if defect > _PARTITION_TOL:
            raise ValueError(
                f"partition of unity defect {defect!r} exceeds {_PARTITION_TOL}")

    @property
    def atom_count(self) -> int:
        return len(self.functions)


def build_partition(count: int, width: float, band_limit: int) -> SmoothPartition:
    """Build a power-complementary partition from mollified strip indicators.

    The mollified indicator family q_k is normalized to q_k/sqrt(sum q_j^2),
    band-limited, and Newton-polished so that sum P_k^2 = 1 holds to
    machine precision; the invariant is re-checked on a dense grid and a
    residual defect above 1e-10 raises with the measured value.
    """
    if int(count) != count or count < 1:
        raise ValueError(f"atom count must be an integer >= 1, got {count}")
    count = int(count)
    if not 0.0 < width:
        raise ValueError(f"width must be positive, got {width}")
    if int(band_limit) != band_limit or band_limit < 0:
        raise ValueError(f"band limit must be a nonnegative integer, got {band_limit}")
    band_limit = int(band_limit)
    if count == 1:
        return SmoothPartition((TrigPolynomial.constant(1.0),), width, band_limit)
    if width * count > 0.25:
        raise ValueError(
            f"width {width} too large for {count} atoms: smoothed strips "
            "would overlap beyond adjacent atoms")
    if band_limit < count or band_limit >= _WINDOW_GRID // 2:
        raise ValueError(
            f"band limit must lie in [{count}, {_WINDOW_GRID // 2}), got {band_limit}")
    c = _polish_window(_initial_window(count, width, band_limit), count)
    functions = tuple(_atom_polynomial(c, count, k) for k in range(count))
    grid = np.arange(_WINDOW_GRID) / _WINDOW_GRID
    pts = np.stack([np.zeros_like(grid), grid], axis=-1)
    total = np.zeros_like(grid)
    for p in functions:
        total += np.asarray(p.evaluate(pts)) ** 2
    defect = float(np.abs(total - 1.0).max())
    if defect > _PARTITION_TOL:
        raise ValueError(
            f"partition of unity defect {defect!r} exceeds {_PARTITION_TOL} "
            "after band limiting")
    return SmoothPartition(functions, width, band_limit)


# ---------------------------------------------------------------- words

def index_from_word(word, count: int) -> int:
    """Canonical index of a word: earliest letter is the most significant
    base-`count` digit; letters are 1-based atom labels."""
    idx = 0
    for letter in word:
        if int(letter) != letter or not 1 <= letter <= count:
            raise ValueError(f"letter {letter} outside 1..{count}")
        idx = idx * count + (int(letter) - 1)
    return idx


def word_from_index(index: int, count: int, length: int) -> tuple:
    """Inverse of index_from_word for words of the given length."""
    if not 0 <= index < count ** length:
        raise ValueError(f"index {index} outside range for length {length}")
    letters = []
    for _ in range(length):
        index, digit = divmod(index, count)
        letters.append(digit + 1)
    return tuple(reversed(letters))


def _require_word_cap(count: int, length: int) -> int:
    total = count ** length
    if total > _WORD_CAP:
        raise ValueError(
            f"word enumeration {count}^{length} = {total} exceeds cap {_WORD_CAP}")
    return total


def _atom_diagonals(partition: SmoothPartition, plk: PlanckData) -> np.ndarray:
    """Exact diagonals of the quantized atoms, shape (K, N).

    Position-only symbols quantize to diagonal matrices, so the atom
    operators are recovered exactly from their quantizations.
    """
    rows = []
    for p in partition.functions:
        rows.append(np.real(np.diag(weyl_quantize(p, plk).matrix)))
    return np.array(rows)


@dataclass(frozen=True)
class RefinedElement:
    """One word operator pi_alpha; a product of evolved atom multipliers."""

    word: tuple
    matrix: np.ndarray

    def __post_init__(self):
        norm = operator_norm(self.matrix)
        if norm > 1.0 + 1e-9:
            raise ValueError(f"word operator norm {norm!r} exceeds 1 + 1e-9")


def refined_operator(word, partition: SmoothPartition,
                     propagator: TorusOperator, plk: PlanckData) -> RefinedElement:
    """The operator pi_alpha = A_{a_{n-1}}(n-1) ... A_{a_0}(0).

    A_k(t) conjugates the diagonal atom multiplier A_k to time t via the
    propagator; letters are 1-based atom labels, earliest letter first.
    """
    word = tuple(int(letter) for letter in word)
    if len(word) < 1:
        raise ValueError("word must have length >= 1")
    if plk.dim != propagator.plk.dim:
        raise ValueError(
            f"dimension mismatch: plk has N={plk.dim}, propagator N={propagator.plk.dim}")
    count = partition.atom_count
    for letter in word:
        if not 1 <= letter <= count:
            raise ValueError(f"letter {letter} outside 1..{count}")
    diags = _atom_diagonals(partition, plk)
    unitary = propagator.matrix
    mat = diags[word[0] - 1][:, None] * np.eye(plk.dim, dtype=complex)
    for letter in word[1:]:
        mat = diags[letter - 1][:, None] * (unitary @ mat)
    adjoint = unitary.conj().T
    for _ in range(len(word) - 1):
        mat = adjoint @ mat
    return RefinedElement(word, mat)


def _iter_word_matrices(diags: np.ndarray, unitary: np.ndarray, length: int,
                        chunk: int = 64):
    """Yield (start, block) of un-rotated word products in canonical order.

    The block buffer is reused between yields; consumers that keep
    matrices must copy them.  The un-rotated product agrees with
    pi_alpha up to a unitary prefix, so norms and weights are unchanged.
    """
    count, dim = diags.shape
    total = count ** length
    partial = np.empty((length, dim, dim), dtype=complex)
    word = [0] * length
    eye = np.eye(dim, dtype=complex)

    def rebuild(from_level):
        for d in range(from_level, length):
            if d == 0:
                partial[0] = diags[word[0]][:, None] * eye
            else:
                partial[d] = diags[word[d]][:, None] * (unitary @ partial[d - 1])

    rebuild(0)
    buf = np.empty((min(chunk, total), dim, dim), dtype=complex)
    fill = 0
    start = 0
    for idx in range(total):
        if idx:
            d = length - 1
            while word[d] == count - 1:
                word[d] = 0
                d -= 1
            word[d] += 1
            rebuild(d)
        buf[fill] = partial[length - 1]
        fill += 1
        if fill == buf.shape[0]:
            yield start, buf[:fill]
            start = idx + 1
            fill = 0
    if fill:
        yield start, buf[:fill]


def resolution_defects(partition: SmoothPartition, propagator: TorusOperator,
                       length: int):
    """Operator-norm defects of the two resolutions of identity.

    Returns (plus, minus) where plus = ||sum pi pi* - Id|| and
    minus = ||sum pi* pi - Id|| over all words of the given length.
    """
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length}")
    _require_word_cap(partition.atom_count, int(length))
    diags = _atom_diagonals(partition, propagator.plk)
    dim = propagator.plk.dim
    left = np.zeros((dim, dim), dtype=complex)
    right = np.zeros((dim, dim), dtype=complex)
    for _, block in _iter_word_matrices(diags, propagator.matrix, int(length)):
        left += np.einsum("aij,akj->ik", block, block.conj())
        right += np.einsum("aji,ajk->ik", block.conj(), block)
    eye = np.eye(dim)
    return operator_norm(left - eye), operator_norm(right - eye)


# ---------------------------------------------------------------- entropies

def _entropy(weights: np.ndarray) -> float:
    """Shannon entropy with the 0 log 0 = 0 convention; tiny negative
    roundoff is clipped to zero."""
    w = np.asarray(weights, dtype=float)
    positive = w[w > 0.0]
    value = float(-(positive * np.log(positive)).sum())
    if -1e-9 < value < 0.0:
        value = 0.0
    return value


def _plus_weights(diags: np.ndarray, vec: np.ndarray, unitary: np.ndarray,
                  length: int) -> np.ndarray:
    """||pi_alpha u||^2 for all words in canonical order."""
    dim = diags.shape[1]
    v = diags * vec[None, :]
    for _ in range(length - 1):
        vu = v @ unitary.T
        v = (vu[:, None, :] * diags[None, :, :]).reshape(-1, dim)
    return (np.abs(v) ** 2).sum(axis=1)


def _minus_weights(diags: np.ndarray, vec: np.ndarray, unitary: np.ndarray,
                   length: int) -> np.ndarray:
    """||pi_alpha^* u||^2 for all words in canonical order."""
    dim = diags.shape[1]
    w = vec.copy()
    for _ in range(length - 1):
        w = unitary @ w
    v = diags * w[None, :]
    for _ in range(length - 1):
        vu = v @ np.conj(unitary)
        v = (diags[:, None, :] * vu[None, :, :]).reshape(-1, dim)
    return (np.abs(v) ** 2).sum(axis=1)


@dataclass(frozen=True)
class EntropyReport:
    """Word entropies of one state: h_plus from ||pi u||^2, h_minus from
    ||pi* u||^2, with the full per-word weight tables in canonical order."""

    length: int
    atom_count: int
    h_plus: float
    h_minus: float
    weights_plus: np.ndarray
    weights_minus: np.ndarray

    def __post_init__(self):
        cap = self.length * math.log(self.atom_count) + 1e-6
        for name, table in (("plus", self.weights_plus),
                            ("minus", self.weights_minus)):
            if table.min() < -1e-12 or table.max() > 1.0 + 1e-9:
                raise ValueError(
                    f"{name} weights outside [0, 1]: min {table.min()!r}, "
                    f"max {table.max()!r}")
            total = float(table.sum())
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"{name} weights sum to {total!r}, not 1")
        for name, value in (("h_plus", self.h_plus), ("h_minus", self.h_minus)):
            if not 0.0 <= value <= cap:
                raise ValueError(f"{name} = {value!r} outside [0, {cap!r}]")


def _require_state(u: QuantumState, propagator: TorusOperator) -> np.ndarray:
    if u.plk.dim != propagator.plk.dim:
        raise ValueError(
            f"dimension mismatch: state N={u.plk.dim}, propagator N={propagator.plk.dim}")
    if abs(u.norm - 1.0) > 1e-8:
        raise ValueError(f"state norm {u.norm!r} is not 1 within 1e-8")
    return np.asarray(u.amplitudes, dtype=complex)


def quantum_entropies(u: QuantumState, length: int, partition: SmoothPartition,
                      propagator: TorusOperator) -> EntropyReport:
    """Both word entropies of a normalized state at the given word length."""
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length}")
    length = int(length)
    _require_word_cap(partition.atom_count, length)
    vec = _require_state(u, propagator)
    diags = _atom_diagonals(partition, propagator.plk)
    unitary = propagator.matrix
    wp = _plus_weights(diags, vec, unitary, length)
    wm = _minus_weights(diags, vec, unitary, length)
    return EntropyReport(length, partition.atom_count,
                         _entropy(wp), _entropy(wm), wp, wm)


def averaged_entropies(u: QuantumState, theta: TimeWeights, length: int,
                       partition: SmoothPartition,
                       propagator: TorusOperator) -> EntropyReport:
    """Word entropies of the time-averaged weights sum_t theta_t w(U^t u).

    By concavity of -x log x the averaged entropies dominate the averaged
    single-time entropies.
    """
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length}")
    length = int(length)
    _require_word_cap(partition.atom_count, length)
    vec = _require_state(u, propagator)
    diags = _atom_diagonals(partition, propagator.plk)
    unitary = propagator.matrix
    adjoint = unitary.conj().T
    times = [int(t) for t in theta.times]
    states = {0: vec}
    high = max(max(times), 0)
    low = min(min(times), 0)
    for t in range(1, high + 1):
        states[t] = unitary @ states[t - 1]
    for t in range(-1, low - 1, -1):
        states[t] = adjoint @ states[t + 1]
    wp = np.zeros(partition.atom_count ** length)
    wm = np.zeros_like(wp)
    for t, weight in zip(times, theta.weights):
        wp += weight * _plus_weights(diags, states[t], unitary, length)
        wm += weight * _minus_weights(diags, states[t], unitary, length)
    return EntropyReport(length, partition.atom_count,
                         _entropy(wp), _entropy(wm), wp, wm)


# ---------------------------------------------------------------- contraction

@dataclass(frozen=True)
class ContractionReport:
    """The pairwise contraction constant c(n) = max ||pi_beta(n) pi_alpha||.

    `complete` is False when the pair budget or the matrix cache was
    exhausted before the submultiplicativity bounds certified the max;
    `upper_bound` then majorizes the true value.
    """

    length: int
    value: float
    complete: bool
    pairs_evaluated: int
    upper_bound: float
    argmax_pair: tuple


def contraction_constant(partition: SmoothPartition, propagator: TorusOperator,
                         length: int, max_pairs: int = 200000,
                         memory_budget: int = 1 << 30,
                         pair_pool: int = 2048) -> ContractionReport:
    """Maximize ||pi_beta(n) pi_alpha|| over ordered word pairs.

    All word norms are computed first; pairs are then evaluated exactly in
    decreasing order of the product bound ||pi_beta|| ||pi_alpha||, stopping
    as soon as the next bound cannot beat the best exact value.  When the
    word matrices exceed `memory_budget` bytes only the largest-norm words
    are cached and completeness against the rest is checked by the same
    bound.
    """
    if int(length) != length or length < 0:
        raise ValueError(f"length must be a nonnegative integer, got {length}")
    length = int(length)
    if length == 0:
        return ContractionReport(0, 1.0, True, 0, 1.0, ((), ()))
    count = partition.atom_count
    total = _require_word_cap(count, length)
    plk = propagator.plk
    dim = plk.dim
    diags = _atom_diagonals(partition, plk)
    unitary = propagator.matrix
    per_matrix = 16 * dim * dim
    cache_all = total * per_matrix <= memory_budget
    norms = np.empty(total)
    cached = {}
    if cache_all:
        for start, block in _iter_word_matrices(diags, unitary, length):
            svals = np.linalg.svd(block, compute_uv=False)
            norms[start:start + len(block)] = svals[:, 0]
            for i in range(len(block)):
                cached[start + i] = block[i].copy()
    else:
        for start, block in _iter_word_matrices(diags, unitary, length):
            svals = np.linalg.svd(block, compute_uv=False)
            norms[start:start + len(block)] = svals[:, 0]
    order = np.argsort(-norms, kind="stable")
    sorted_norms = norms[order]
    if not cache_all:
        keep = max(1, min(total, memory_budget // per_matrix))
        wanted = set(int(i) for i in order[:keep])
        for start, block in _iter_word_matrices(diags, unitary, length):
            for i in range(len(block)):
                if start + i in wanted:
                    cached[start + i] = block[i].copy()
    available = total if cache_all else len(cached)
    pool = min(available, pair_pool)
    bounds = np.outer(sorted_norms[:pool], sorted_norms[:pool])
    flat = np.argsort(-bounds, axis=None, kind="stable")
    best = -1.0
    best_pair = ((), ())
    evaluated = 0
    complete = True
    leftover = 0.0
    chunk = 64
    idx = 0
    while idx < flat.size:
        pi, pj = divmod(int(flat[idx]), pool)
        next_bound = float(bounds[pi, pj])
        if next_bound <= best:
            break
        if evaluated >= max_pairs:
            complete = False
            leftover = next_bound
            break
        batch = []
        while (idx < flat.size and len(batch) < chunk
               and evaluated + len(batch) < max_pairs):
            pi, pj = divmod(int(flat[idx]), pool)
            if bounds[pi, pj] <= best:
                break
            batch.append((pi, pj))
            idx += 1
        lefts = np.stack([cached[int(order[pi])] for pi, _ in batch])
        rights = np.stack([cached[int(order[pj])] for _, pj in batch])
        prods = np.matmul(lefts, np.matmul(unitary[None, :, :], rights))
        svals = np.linalg.svd(prods, compute_uv=False)[:, 0]
        evaluated += len(batch)
        arg = int(np.argmax(svals))
        if svals[arg] > best:
            best = float(svals[arg])
            pi, pj = batch[arg]
            best_pair = (word_from_index(int(order[pi]), count, length),
                         word_from_index(int(order[pj]), count, length))
    if pool < total:
        outside = float(sorted_norms[pool] * sorted_norms[0])
        if outside > best:
            complete = False
            leftover = max(leftover, outside)
    upper = best if complete else max(best, leftover)
    return ContractionReport(length, best, complete, evaluated, upper, best_pair)


@dataclass(frozen=True)
class UncertaintyReport:
    """One instance of the entropic uncertainty inequality
    h_plus(U^n u) + h_minus(u) >= -2 log c(n)."""

    length: int
    h_plus_evolved: float
    h_minus: float
    contraction: ContractionReport
    lower_bound: float
    gap: float
    satisfied: bool
    cutoff_note: str


def uncertainty_check(u: QuantumState, length: int, partition: SmoothPartition,
                      propagator: TorusOperator, max_pairs: int = 200000,
                      memory_budget: int = 1 << 30,
                      contraction: ContractionReport = None) -> UncertaintyReport:
    """Evaluate the entropic uncertainty inequality for one state.

    A precomputed ContractionReport of the same length may be passed to
    amortize the pair maximization across many states.
    """
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length}")
    length = int(length)
    if contraction is None:
        contraction = contraction_constant(partition, propagator, length,
                                           max_pairs=max_pairs,
                                           memory_budget=memory_budget)
    elif contraction.length != length:
        raise ValueError(
            f"contraction report is for length {contraction.length}, not {length}")
    vec = _require_state(u, propagator)
    unitary = propagator.matrix
    evolved = vec
    for _ in range(length):
        evolved = unitary @ evolved
    diags = _atom_diagonals(partition, propagator.plk)
    h_plus = _entropy(_plus_weights(diags, evolved, unitary, length))
    h_minus = _entropy(_minus_weights(diags, vec, unitary, length))
    lower = -2.0 * math.log(contraction.value)
    gap = h_plus + h_minus - lower
    return UncertaintyReport(length, h_plus, h_minus, contraction, lower, gap,
                             gap >= -1e-8, _CUTOFF_NOTE)


# ---------------------------------------------------------------- decay scan

def ehrenfest_horizon(plk: PlanckData, tmap: HyperbolicToralMap,
                      delta: float = 0.0) -> int:
    """floor((1 - delta) log N / log lambda): the word length at which the
    evolved symbol classes saturate the resolution of the quantization."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    return int(math.floor((1.0 - delta) * math.log(plk.dim) / tmap.log_lambda))


@dataclass(frozen=True)
class NormDecayReport:
    """Contraction constants per word length with an exponential-rate fit.

    The fitted rate over lengths up to the Ehrenfest horizon is reported
    against the dimensional-analysis prediction -log(lambda)/2 with
    prefactor scale 1/sqrt(hbar); the constant is never asserted.
    """

    lengths: tuple
    values: tuple
    complete: tuple
    fitted_rate: float
    predicted_rate: float
    horizon: int
    prefactor_scale: float
    note: str


def norm_decay_scan(partition: SmoothPartition, propagator: TorusOperator,
                    tmap: HyperbolicToralMap, lengths,
                    max_pairs: int = 200000,
                    memory_budget: int = 1 << 30) -> NormDecayReport:
    """Tabulate c(n) over word lengths and fit the exponential decay rate."""
    lengths = tuple(int(n) for n in lengths)
    if not lengths:
        raise ValueError("need at least one word length")
    if any(n < 0 for n in lengths):
        raise ValueError(f"word lengths must be nonnegative, got {lengths}")
    plk = propagator.plk
    horizon = ehrenfest_horizon(plk, tmap)
    if max(lengths) > horizon + 4:
        raise ValueError(
            f"max length {max(lengths)} exceeds Ehrenfest horizon {horizon} + 4")
    reports = [contraction_constant(partition, propagator, n,
                                    max_pairs=max_pairs,
                                    memory_budget=memory_budget)
               for n in lengths]
    values = tuple(r.value for r in reports)
    complete = tuple(r.complete for r in reports)
    fit = [(n, math.log(v)) for n, v in zip(lengths, values)
           if 1 <= n <= horizon and v > 0.0]
    if len(fit) >= 2:
        ns = np.array([p[0] for p in fit], dtype=float)
        logs = np.array([p[1] for p in fit])
        design = np.stack([np.ones_like(ns), ns], axis=-1)
        coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
        fitted = float(coef[1])
    else:
        fitted = float("nan")
    return NormDecayReport(lengths, values, complete, fitted,
                           -tmap.log_lambda / 2.0, horizon,
                           math.sqrt(2.0 * math.pi * plk.dim), _ANALOG_NOTE)


# ---------------------------------------------------------------- subadditivity

@dataclass(frozen=True)
class SubadditivityReport:
    """Entropy subadditivity defects below the Ehrenfest horizon.

    defect_plus_raw = h+_{tail+head}(u) - h+_head(u) - h+_tail(U^head u);
    the reported defects are the raw values clipped at zero.
    """

    tail_length: int
    head_length: int
    horizon: int
    h_plus_joint: float
    h_plus_head: float
    h_plus_tail: float
    h_minus_joint: float
    h_minus_head: float
    h_minus_tail: float
    defect_plus_raw: float
    defect_minus_raw: float
    defect_plus: float
    defect_minus: float


def subadditivity_check(u: QuantumState, tail_length: int, head_length: int,
                        partition: SmoothPartition, propagator: TorusOperator,
                        tmap: HyperbolicToralMap) -> SubadditivityReport:
    """Measure the subadditivity defects of both word entropies."""
    for name, n in (("tail_length", tail_length), ("head_length", head_length)):
        if int(n) != n or n < 1:
            raise ValueError(f"{name} must be a positive integer, got {n}")
    tail_length = int(tail_length)
    head_length = int(head_length)
    horizon = ehrenfest_horizon(propagator.plk, tmap)
    if tail_length + head_length > horizon:
        raise ValueError(
            f"total length {tail_length + head_length} exceeds Ehrenfest "
            f"horizon {horizon}")
    vec = _require_state(u, propagator)
    unitary = propagator.matrix
    evolved = vec
    for _ in range(head_length):
        evolved = unitary @ evolved
    shifted = QuantumState(u.plk, evolved)
    joint = quantum_entropies(u, tail_length + head_length, partition, propagator)
    head = quantum_entropies(u, head_length, partition, propagator)
    tail = quantum_entropies(shifted, tail_length, partition, propagator)
    plus_raw = joint.h_plus - head.h_plus - tail.h_plus
    minus_raw = joint.h_minus - head.h_minus - tail.h_minus
    return SubadditivityReport(
        tail_length, head_length, horizon,
        joint.h_plus, head.h_plus, tail.h_plus,
        joint.h_minus, head.h_minus, tail.h_minus,
        plus_raw, minus_raw, max(0.0, plus_raw), max(0.0, minus_raw))


def classical_subadditivity_defect(tmap: HyperbolicToralMap, sampler,
                                   cells_per_side: int, head_length: int,
                                   tail_length: int, samples: int = 100000,
                                   seed: int = 0) -> float:
    """H(joint) - H(head) - H(tail) for empirical cylinder measures.

    Cylinders are coded over a cells_per_side^2 grid along the orbit; the
    defect is nonpositive for every sampled measure, invariant or not, by
    subadditivity of Shannon entropy.
    """
    for name, n in (("head_length", head_length), ("tail_length", tail_length)):
        if int(n) != n or n < 1:
            raise ValueError(f"{name} must be a positive integer, got {n}")
    if int(cells_per_side) != cells_per_side or cells_per_side < 2:
        raise ValueError(f"cells_per_side must be an integer >= 2, got {cells_per_side}")
    head_length = int(head_length)
    tail_length = int(tail_length)
    k = int(cells_per_side)
    window = head_length + tail_length
    if k ** (2 * window) > 2 ** 62:
        raise ValueError("cylinder codes overflow 64-bit integers")
    pts = _sample_points(sampler, seed, samples)
    alphabet = k * k
    cells = np.empty((samples, window), dtype=np.int64)
    cur = pts
    for t in range(window):
        cells[:, t] = (np.floor(cur[:, 0] * k).astype(np.int64) * k
                       + np.floor(cur[:, 1] * k).astype(np.int64))
        if t + 1 < window:
            cur = tmap.apply(cur)

    def entropy_of_window(window_range):
        codes = np.zeros(samples, dtype=np.int64)
        for t in window_range:
            codes = codes * alphabet + cells[:, t]
        return _plugin_entropy(codes)[0]

    return (entropy_of_window(range(window))
            - entropy_of_window(range(head_length))
            - entropy_of_window(range(head_length, window)))


# ---------------------------------------------------------------- observability

@dataclass(frozen=True)
class ObservabilityReport:
    """Observability constant C = 1/lambda_min of the time-averaged Gram
    operator sum_t U^{-t} M_{a^2} U^t, with the hardest-to-observe state."""

    horizon: int
    constant: float
    lambda_min: float
    minimizing_state: QuantumState
    survivor: object


def observability_constant(a: TrigPolynomial, horizon: int,
                           propagator: TorusOperator,
                           survivor=None) -> ObservabilityReport:
    """Observability constant of a real position observable over a horizon.

    The Gram operator is positive semidefinite by construction; this is
    verified, and lambda_min <= 1e-14 reports an infinite constant (the
    observable misses part of the space at this resolution).
    """
    if int(horizon) != horizon or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon}")
    horizon = int(horizon)
    if not (a.is_real and a.is_position_only):
        raise ValueError("observable must be a real position-only polynomial")
    plk = propagator.plk
    avals = np.real(np.diag(weyl_quantize(a, plk).matrix))
    unitary = propagator.matrix
    adjoint = unitary.conj().T
    cur = np.diag(avals ** 2).astype(complex)
    gram = cur.copy()
    for _ in range(horizon - 1):
        cur = adjoint @ cur @ unitary
        gram += cur
    gram = (gram + gram.conj().T) / 2.0
    lam_min, vec = extremal_eigen(gram, "min")
    scale = max(matrix_scale(gram), 1.0)
    if lam_min < -1e-10 * scale:
        raise ValueError(f"Gram operator not positive semidefinite: "
                         f"lambda_min = {lam_min!r}")
    constant = math.inf if lam_min <= 1e-14 else 1.0 / lam_min
    return ObservabilityReport(horizon, constant, float(lam_min),
                               QuantumState(plk, vec), survivor)


@dataclass(frozen=True)
class SurvivorReport:
    """Grid points whose orbit keeps a^2 below tolerance for |t| <= depth.

    The box-counting dimension is estimated from the two dyadic
    resolutions G and G/2 as log2(count_fine / count_coarse); the entropy
    proxy scales the estimate by log(lambda)/2 and is compared to the
    threshold log(lambda)/2 (a dimension-one survivor set).
    """

    depth: int
    grid_resolution: int
    count: int
    coarse_count: int
    dimension_estimate: float
    dimension_below_two: bool
    entropy_proxy: float
    entropy_threshold: float
    entropy_below_threshold: bool
    mask: np.ndarray
    tolerance: float


def _survivor_mask(a: TrigPolynomial, depth: int, grid: int,
                   tmap: HyperbolicToralMap) -> np.ndarray:
    """Boolean mask over the (i/G, j/G) grid; position is the second slot."""
    xs = np.arange(grid) / grid
    pts = np.stack([np.zeros(grid), xs], axis=-1)
    column = np.asarray(a.evaluate(pts)) ** 2
    row_idx, col_idx = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
    worst = column[col_idx].copy()
    m = np.asarray(tmap.matrix, dtype=np.int64)
    inverse = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=np.int64)
    for mat in (m, inverse):
        cur_i, cur_j = row_idx.copy(), col_idx.copy()
        for _ in range(depth):
            cur_i, cur_j = ((mat[0, 0] * cur_i + mat[0, 1] * cur_j) % grid,
                            (mat[1, 0] * cur_i + mat[1, 1] * cur_j) % grid)
            worst = np.maximum(worst, column[cur_j])
    return worst <= _SURVIVOR_TOL


def survivor_set(a: TrigPolynomial, depth: int, grid_resolution: int,
                 tmap: HyperbolicToralMap) -> SurvivorReport:
    """Estimate the set never seen by the observable along the orbit.

    The toral map preserves the rational grid, so orbits are computed
    exactly with integer index maps in both time directions.
    """
    if int(depth) != depth or depth < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {depth}")
    depth = int(depth)
    grid = int(grid_resolution)
    if grid != grid_resolution or grid < 2 or grid > 2048:
        raise ValueError(
            f"grid resolution must be an integer in [2, 2048], got {grid_resolution}")
    if grid % 2:
        raise ValueError(f"grid resolution must be even, got {grid}")
    if not (a.is_real and a.is_position_only):
        raise ValueError("observable must be a real position-only polynomial")
    fine = _survivor_mask(a, depth, grid, tmap)
    coarse = _survivor_mask(a, depth, grid // 2, tmap)
    count = int(fine.sum())
    coarse_count = int(coarse.sum())
    if count > 0 and coarse_count > 0:
        dimension = math.log2(count / coarse_count)
    else:
        dimension = 0.0
    threshold = tmap.log_lambda / 2.0
    proxy = dimension * tmap.log_lambda / 2.0
    return SurvivorReport(depth, grid, count, coarse_count, dimension,
                          dimension < 2.0, proxy, threshold, proxy < threshold,
                          fine, _SURVIVOR_TOL)


def strip_vanishing_observable(half_order: int = 8) -> TrigPolynomial:
    """The real position observable sin(pi x)^(2 h) in closed form.

    Vanishing to order 2h at x = 0, it stays below 7e-9 on the strip
    |x| <= 0.1 for h = 8 while reaching 1 at x = 1/2; degree h.
    """
    if int(half_order) != half_order or half_order < 1:
        raise ValueError(f"half_order must be a positive integer, got {half_order}")
    h = int(half_order)
    coeffs = {(0, 0): complex(math.comb(2 * h, h) / 4.0 ** h)}
    for j in range(1, h + 1):
        amplitude = 2.0 * (-1) ** j * math.comb(2 * h, h - j) / 4.0 ** h
        coeffs[(0, j)] = amplitude / 2.0
        coeffs[(0, -j)] = amplitude / 2.0
    return TrigPolynomial(coeffs)


# ---------------------------------------------------------------- limit trend

@dataclass(frozen=True)
class LimitEntropyReport:
    """Entropy production rates h/n per dimension against analog targets."""

    length: int
    dims: tuple
    plus_rates: tuple
    minus_rates: tuple
    lower_analog: float
    upper_analog: float
    note: str


def limit_entropy_estimate(entries, length: int, partition: SmoothPartition,
                           tmap: HyperbolicToralMap) -> LimitEntropyReport:
    """Entropy rates of (state, propagator) pairs over increasing dimension.

    The analog targets log(lambda)/2 and log(lambda) translate the
    continuous-time lower and upper entropy bounds; they are reported,
    never asserted.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("need at least one (state, propagator) entry")
    dims = []
    plus_rates = []
    minus_rates = []
    for state, propagator in entries:
        if dims and propagator.plk.dim <= dims[-1]:
            raise ValueError("entries must have strictly increasing dimension")
        report = quantum_entropies(state, length, partition, propagator)
        dims.append(propagator.plk.dim)
        plus_rates.append(report.h_plus / length)
        minus_rates.append(report.h_minus / length)
    return LimitEntropyReport(int(length), tuple(dims), tuple(plus_rates),
                              tuple(minus_rates), tmap.log_lambda / 2.0,
                              tmap.log_lambda, _ANALOG_NOTE)


# ---------------------------------------------------------------- csv output

def write_entropy_csv(rows, path: str) -> None:
    """Emit entropy scan rows "N,n,word_count,h_plus,h_minus,bound"."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("N,n,word_count,h_plus,h_minus,bound\n")
        for dim, length, words, h_plus, h_minus, bound in rows:
            fh.write(f"{int(dim)},{int(length)},{int(words)},"
                     f"{float(h_plus)!r},{float(h_minus)!r},{float(bound)!r}\n")


def write_observability_csv(rows, path: str) -> None:
    """Emit observability rows "N,T,C,lambda_min"."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("N,T,C,lambda_min\n")
        for dim, horizon, constant, lam_min in rows:
            fh.write(f"{int(dim)},{int(horizon)},{float(constant)!r},"
                     f"{float(lam_min)!r}\n")


def write_survivor_csv(report: SurvivorReport, path: str) -> None:
    """Emit the survivor grid as "x,y,survives" rows after a summary line.

    x is the position coordinate (second slot), y the first slot.
    """
    grid = report.grid_resolution
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# n,count,dimension_estimate\n")
        fh.write(f"# {report.depth},{report.count},"
                 f"{float(report.dimension_estimate)!r}\n")
        fh.write("x,y,survives\n")
        for i in range(grid):
            for j in range(grid):
                fh.write(f"{j / grid!r},{i / grid!r},{int(report.mask[i, j])}\n")
