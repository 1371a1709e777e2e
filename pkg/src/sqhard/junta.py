"""Distributions on the hypercube {0,1}^M: hidden juntas, binary products, Ising hard instances.

Points of the cube are integers; bit ``i`` of ``x`` is coordinate ``i``. Subsets
of coordinates are given either as index collections or as bit masks.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .report import AuditReport
from .scalar import EXACT_ARITH, Arith, to_float, to_fraction
from .univariate import UnivariateDist, chi_squared, ising_sum, kravchuk_moment, tilted_binomial, tv_distance

MAX_BRUTE_DIM = 24


def mask_of(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << i
    return out


def indices_of(mask: int) -> Tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def bits_to_str(x: int, M: int) -> str:
    """Character ``j`` is coordinate ``j``."""
    return "".join("1" if (x >> j) & 1 else "0" for j in range(M))


def str_to_bits(s: str) -> int:
    return sum(1 << j for j, ch in enumerate(s.strip()) if ch == "1")


def as_point(x: Union[int, Sequence[int], str], M: int) -> int:
    if isinstance(x, int):
        if not 0 <= x < 1 << M:
            raise ValueError(f"point {x} outside the {M}-cube")
        return x
    if isinstance(x, str):
        if len(x) != M:
            raise ValueError(f"bitstring of length {len(x)}, expected {M}")
        return str_to_bits(x)
    if len(x) != M:
        raise ValueError(f"bit vector of length {len(x)}, expected {M}")
    return sum(1 << j for j, b in enumerate(x) if b)


def _check_subset(S: Sequence[int], M: int) -> Tuple[int, ...]:
    S = tuple(sorted(S))
    if len(set(S)) != len(S):
        raise ValueError("repeated index in S")
    if S and not (0 <= S[0] and S[-1] < M):
        raise ValueError(f"S must lie in [0, {M})")
    return S


def gray_walk(M: int):
    """Yield ``(x, flipped_bit)`` over all of {0,1}^M in Gray-code order (first flip is ``None``)."""
    x = 0
    yield x, None
    for i in range(1, 1 << M):
        bit = (i & -i).bit_length() - 1
        x ^= 1 << bit
        yield x, bit


def _block_table(M: int, S: Sequence[int], by_count: Sequence) -> List:
    """Table over the cube whose value depends only on the number of ones inside ``S``."""
    if M > MAX_BRUTE_DIM:
        raise ValueError(f"M={M} exceeds the enumeration limit {MAX_BRUTE_DIM}")
    smask = mask_of(S)
    table = [None] * (1 << M)
    count = 0
    for x, bit in gray_walk(M):
        if bit is not None and (smask >> bit) & 1:
            count += 1 if (x >> bit) & 1 else -1
        table[x] = by_count[count]
    return table


# -- hidden junta ----------------------------------------------------------------


@dataclass(frozen=True)
class JuntaInstance:
    """``P^A_S``: uniform off ``S``, exchangeable on ``S`` with coordinate sum distributed as ``A``."""

    A: UnivariateDist
    S: Tuple[int, ...]
    M: int

    def __post_init__(self):
        S = _check_subset(self.S, self.M)
        object.__setattr__(self, "S", S)
        if len(S) != self.A.m:
            raise ValueError(f"|S|={len(S)} but A lives on {{0..{self.A.m}}}")
        if self.M <= self.A.m:
            raise ValueError("ambient dimension M must exceed m")

    @property
    def m(self) -> int:
        return self.A.m

    @property
    def arith(self) -> Arith:
        return self.A.arith

    def by_count(self) -> List:
        """pmf value of a point as a function of its number of ones in ``S``."""
        a = self.arith
        scale = a.num(Fraction(1, 2 ** (self.M - self.m)))
        return [scale * self.A.pmf[s] / comb(self.m, s) for s in range(self.m + 1)]


def junta_pmf(J: JuntaInstance, x) -> object:
    x = as_point(x, J.M)
    s = sum((x >> i) & 1 for i in J.S)
    return J.by_count()[s]


def junta_pmf_table(J: JuntaInstance) -> List:
    return _block_table(J.M, J.S, J.by_count())


def _embed(rng: np.random.Generator, counts: np.ndarray, S: Sequence[int], M: int) -> np.ndarray:
    """Uniform ``count``-subset of ``S`` set to one; coordinates off ``S`` fair coins."""
    n, m = len(counts), len(S)
    out = np.zeros(n, dtype=np.uint64)
    off = [i for i in range(M) if i not in set(S)]
    if off:
        coins = rng.integers(0, 2, size=(n, len(off)), dtype=np.uint64)
        for col, i in enumerate(off):
            out |= coins[:, col] << np.uint64(i)
    if m:
        ranks = np.argsort(np.argsort(rng.random((n, m)), axis=1), axis=1)
        on = ranks < counts[:, None]
        for col, i in enumerate(S):
            out |= on[:, col].astype(np.uint64) << np.uint64(i)
    return out


def _draw_counts(rng: np.random.Generator, dist: UnivariateDist, n: int) -> np.ndarray:
    probs = np.array(dist.floats(), dtype=float)
    probs = np.clip(probs, 0, None)
    probs /= probs.sum()
    return rng.choice(dist.m + 1, size=n, p=probs)


def junta_sample(J: JuntaInstance, seed: int, n: Optional[int] = None):
    """Draw from ``P^A_S``; one int when ``n`` is None, else a uint64 array of ``n`` points."""
    rng = np.random.default_rng(seed)
    pts = _embed(rng, _draw_counts(rng, J.A, 1 if n is None else n), J.S, J.M)
    return int(pts[0]) if n is None else pts


# -- Fourier ---------------------------------------------------------------------


def character(T_mask: int, x: int) -> int:
    return -1 if bin(T_mask & x).count("1") & 1 else 1


def fourier_coeff(J: JuntaInstance, T) -> object:
    """``E[chi_T]`` under ``P^A_S``: 0 unless ``T`` is inside ``S``, else ``E_A[K_|T|]/C(m,|T|)``."""
    T = tuple(sorted(T)) if not isinstance(T, int) else indices_of(T)
    if not set(T) <= set(J.S):
        return J.arith.zero()
    t = len(T)
    return kravchuk_moment(J.A, t) / comb(J.m, t)


def walsh_hadamard(table: Sequence) -> List:
    """All ``sum_x table[x] (-1)^{|x & T|}`` indexed by mask ``T``."""
    a = list(table)
    n = len(a)
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                u, v = a[j], a[j + h]
                a[j], a[j + h] = u + v, u - v
        h *= 2
    return a


def fourier_bruteforce(table: Sequence, T) -> object:
    T_mask = T if isinstance(T, int) else mask_of(T)
    return sum((p if character(T_mask, x) > 0 else -p for x, p in enumerate(table)), table[0] * 0)


# -- correlations ----------------------------------------------------------------


def uniform_table(M: int, arith: Arith = EXACT_ARITH) -> List:
    return [arith.num(Fraction(1, 2 ** M))] * (1 << M)


def correlation_bruteforce(P, Q, D, M: Optional[int] = None) -> object:
    """``sum_x P(x) Q(x) / D(x) - 1``. Arguments are pmf tables or callables (then ``M`` is required)."""
    tables = []
    for f in (P, Q, D):
        if callable(f):
            if M is None:
                raise ValueError("M is required when passing pmf callables")
            if M > MAX_BRUTE_DIM:
                raise ValueError(f"M={M} exceeds the enumeration limit {MAX_BRUTE_DIM}")
            tables.append([f(x) for x in range(1 << M)])
        else:
            tables.append(f)
    P, Q, D = tables
    if len(P) > 1 << MAX_BRUTE_DIM:
        raise ValueError("dimension too large for brute force")
    total = P[0] * 0
    for p, q, d in zip(P, Q, D):
        if d <= 0:
            raise ValueError("reference pmf must be positive everywhere")
        if p and q:
            total += p * q / d
    return total - 1


def correlation_formula(A: UnivariateDist, S, S_prime) -> object:
    """``sum_{t>=1} C(|S & S'|, t) a_t^2 / C(m, t)^2`` with ``a_t = E_A[K_t]``."""
    m = A.m
    if len(set(S)) != m or len(set(S_prime)) != m:
        raise ValueError("both subsets must have size m")
    r = len(set(S) & set(S_prime))
    return sum((comb(r, t) * kravchuk_moment(A, t) ** 2 / comb(m, t) ** 2 for t in range(1, r + 1)),
               A.arith.zero())


def correlation_bound_check(A: UnivariateDist, S, S_prime, k: int, nu=None) -> AuditReport:
    """Check the moment condition with slack ``nu`` and then the pairwise correlation bound."""
    a = A.arith
    m = A.m
    coeffs = [kravchuk_moment(A, t) for t in range(1, k + 1)]
    measured_nu = max((abs(c) for c in coeffs), default=a.zero())
    nu = measured_nu if nu is None else a.num(nu)
    rep = AuditReport(f"correlation_bound |S&S'|={len(set(S) & set(S_prime))}")
    bad = [t for t, c in enumerate(coeffs, 1) if abs(c) > nu]
    rep.check("moment_condition", not bad, measured_nu, nu, f"violating t: {bad}" if bad else "")
    r = len(set(S) & set(S_prime))
    lhs = abs(correlation_formula(A, S, S_prime))
    chi2 = chi_squared(A, _bin_half(m, a))
    rhs = (a.num(Fraction(r, m))) ** (k + 1) * chi2 + k * nu ** 2
    rep.values.update({"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "chi2": chi2, "nu": nu})
    rep.check("correlation_bound", lhs <= rhs + a.tolerance(2), lhs, rhs)
    return rep


def _bin_half(m: int, arith: Arith) -> UnivariateDist:
    from .univariate import uniform_binomial
    return uniform_binomial(m, arith)


# -- binary product hard instances -----------------------------------------------


@dataclass(frozen=True)
class ProductInstance:
    """Coordinates in ``S`` have mean ``1/2 + eps``; the rest are fair."""

    M: int
    S: Tuple[int, ...]
    eps: object = Fraction(0)
    arith: Arith = EXACT_ARITH

    def __post_init__(self):
        object.__setattr__(self, "S", _check_subset(self.S, self.M))
        eps = self.arith.num(self.eps)
        object.__setattr__(self, "eps", eps)
        if not 0 <= eps <= Fraction(1, 2):
            raise ValueError("eps must lie in [0, 1/2]")

    @property
    def m(self) -> int:
        return len(self.S)

    def projection(self) -> UnivariateDist:
        return tilted_binomial(self.m, self.eps, self.arith)

    def by_count(self) -> List:
        a = self.arith
        hi = a.num(Fraction(1, 2)) + self.eps
        lo = a.num(Fraction(1, 2)) - self.eps
        scale = a.num(Fraction(1, 2 ** (self.M - self.m)))
        return [scale * hi ** s * lo ** (self.m - s) for s in range(self.m + 1)]

    def mean_vector(self) -> List:
        half = self.arith.num(Fraction(1, 2))
        return [half + self.eps if i in self.S else half for i in range(self.M)]


def product_pmf(inst: ProductInstance, x) -> object:
    x = as_point(x, inst.M)
    return inst.by_count()[sum((x >> i) & 1 for i in inst.S)]


def product_pmf_table(inst: ProductInstance) -> List:
    return _block_table(inst.M, inst.S, inst.by_count())


def product_sample(inst: ProductInstance, seed: int, n: Optional[int] = None):
    rng = np.random.default_rng(seed)
    size = 1 if n is None else n
    means = np.array([to_float(v) for v in inst.mean_vector()])
    bits = rng.random((size, inst.M)) < means
    pts = np.zeros(size, dtype=np.uint64)
    for i in range(inst.M):
        pts |= bits[:, i].astype(np.uint64) << np.uint64(i)
    return int(pts[0]) if n is None else pts


# -- Ising hard instances --------------------------------------------------------


def is_ferromagnetic(theta: Sequence[Sequence]) -> bool:
    return all(to_fraction(v) >= 0 for row in theta for v in row)


def dobrushin_ok(theta: Sequence[Sequence], eta) -> bool:
    """High-temperature condition: every off-diagonal row sum of ``|theta|`` is at most ``1 - eta``."""
    bound = 1 - to_fraction(eta)
    return all(sum(abs(to_fraction(v)) for j, v in enumerate(row) if j != i) <= bound for i, row in enumerate(theta))


@dataclass(frozen=True)
class IsingInstance:
    """Complete-graph coupling ``coupling`` on ``S``, no interactions elsewhere."""

    M: int
    S: Tuple[int, ...]
    coupling: object = 0
    eta: object = Fraction(1, 2)
    arith: Arith = Arith("float")

    def __post_init__(self):
        object.__setattr__(self, "S", _check_subset(self.S, self.M))
        object.__setattr__(self, "arith", self.arith.float_ctx())
        c = self.arith.num(self.coupling)
        object.__setattr__(self, "coupling", c)
        if c < 0:
            raise ValueError("coupling must be nonnegative (ferromagnetic)")
        if (self.m - 1) * c > 1 - self.arith.num(self.eta):
            raise ValueError(f"row sum (m-1)*coupling={to_float((self.m - 1) * c):.4g} exceeds 1 - eta")

    @property
    def m(self) -> int:
        return len(self.S)

    def theta(self) -> List[List]:
        zero = self.arith.zero()
        inside = set(self.S)
        return [[self.coupling if i != j and i in inside and j in inside else zero for j in range(self.M)]
                for i in range(self.M)]

    def projection(self) -> UnivariateDist:
        return ising_sum(self.m, self.coupling, self.arith)

    def by_count(self) -> List:
        proj = self.projection()
        scale = self.arith.num(Fraction(1, 2 ** (self.M - self.m)))
        return [scale * proj.pmf[s] / comb(self.m, s) for s in range(self.m + 1)]


def ising_pmf(inst: IsingInstance, x) -> object:
    x = as_point(x, inst.M)
    return inst.by_count()[sum((x >> i) & 1 for i in inst.S)]


def ising_pmf_table(inst: IsingInstance) -> List:
    return _block_table(inst.M, inst.S, inst.by_count())


def ising_sample(inst: IsingInstance, seed: int, n: Optional[int] = None):
    rng = np.random.default_rng(seed)
    pts = _embed(rng, _draw_counts(rng, inst.projection(), 1 if n is None else n), inst.S, inst.M)
    return int(pts[0]) if n is None else pts


def ising_generic_table(theta: Sequence[Sequence], arith: Arith = Arith("float")) -> List:
    """pmf of ``exp((1/2) sum_{i,j} (-1)^{x_i + x_j} theta_ij) / Z`` by full enumeration (M <= 20)."""
    arith = arith.float_ctx()
    M = len(theta)
    if M > 20:
        raise ValueError("generic Ising enumeration is limited to M <= 20")
    th = [[arith.num(v) for v in row] for row in theta]
    energies = []
    for x in range(1 << M):
        spin = [-1 if (x >> i) & 1 else 1 for i in range(M)]
        e = arith.zero()
        for i in range(M):
            if spin[i] == 1:
                e += sum(th[i][j] * spin[j] for j in range(M))
            else:
                e -= sum(th[i][j] * spin[j] for j in range(M))
        energies.append(e / 2)
    top = max(energies)
    w = [arith.mp.exp(e - top) for e in energies]
    z = sum(w)
    return [v / z for v in w]


# -- TV identity -----------------------------------------------------------------


def tv_tables(P: Sequence, Q: Sequence) -> object:
    return sum((abs(p - q) for p, q in zip(P, Q)), P[0] * 0) / 2


def tv_identity_check(J: JuntaInstance, target: Union[ProductInstance, IsingInstance]) -> Tuple:
    """``(d_TV over the cube, d_TV of A against the projected target)``; equal by the block structure."""
    if tuple(J.S) != tuple(target.S) or J.M != target.M:
        raise ValueError("junta and target must share S and M")
    if J.M > 20:
        raise ValueError("brute-force side limited to M <= 20")
    arith = J.arith if not J.arith.exact else target.arith
    P = [arith.num(v) for v in junta_pmf_table(J)]
    if isinstance(target, ProductInstance):
        Q = [arith.num(v) for v in product_pmf_table(target)]
    else:
        Q = [arith.num(v) for v in ising_pmf_table(target)]
    return tv_tables(P, Q), tv_distance(J.A, target.projection())
