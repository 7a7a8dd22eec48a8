"""Oracle-side measure theory: spectral measures, Borel transforms, Stone's formula.

A finite model has a purely atomic spectral measure supported on the oracle
eigenvalues.  This module builds those measures, evaluates their Borel
transforms, recovers atoms and local densities from boundary behaviour, and
realizes spectral projections through Stone's formula with adaptive quadrature
and extrapolation in the regularization parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .domain import DirichletOperator, EigenSystem
from .errors import AtomHit, EndpointOnEigenvalue
from .limits import EtaSchedule, richardson_extrapolate
from .dtn import poisson_matrix

__all__ = [
    "SpectralMeasure",
    "StoneResult",
    "SupportReport",
    "SimplicityReport",
    "spectral_measure",
    "borel_transform",
    "point_mass",
    "density",
    "stone_projection",
    "ac_sc_supports",
    "simplicity_rank",
]

_ATOM_TOL = 1e-12


@dataclass(frozen=True)
class SpectralMeasure:
    """Purely atomic positive measure sum_j weights[j] * delta(atoms[j]).

    Atoms are strictly increasing; zero weights are allowed (they carry no
    atom and are ignored by the atom logic).
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape:
            raise ValueError("atoms and weights must be 1-d arrays of equal length")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def restricted(self, a: float, b: float) -> "SpectralMeasure":
        mask = (self.atoms > a) & (self.atoms < b)
        return SpectralMeasure(self.atoms[mask], self.weights[mask])


def spectral_measure(op: DirichletOperator, eig: EigenSystem, u: np.ndarray) -> SpectralMeasure:
    """Scalar spectral measure mu_u = (E(.)u, u): one atom per level with weight
    equal to the squared weighted projection of u onto the eigenspace; atoms
    whose weight vanishes (relative to the total mass) are dropped."""
    dom = op.domain
    u = np.asarray(u, dtype=complex)
    if u.shape != (dom.n_interior,):
        raise ValueError("vector has wrong length")
    coeffs = np.array([dom.interior_inner(u, eig.vectors[:, j])
                       for j in range(eig.vectors.shape[1])])
    atoms, weights = [], []
    for group in eig.groups:
        idx = list(group)
        atoms.append(float(np.mean(eig.values[idx])))
        weights.append(float(np.sum(np.abs(coeffs[idx]) ** 2)))
    atoms = np.asarray(atoms)
    weights = np.asarray(weights)
    mass = dom.interior_norm(u) ** 2
    keep = weights > 1e-14 * max(mass, 1e-300)
    return SpectralMeasure(atoms[keep], weights[keep])


def borel_transform(measure: SpectralMeasure, z: complex) -> complex:
    """F(z) = int d mu(t) / (t - z); raises AtomHit on an atom of the measure."""
    z = complex(z)
    carried = measure.weights > 0
    if z.imag == 0:
        gaps = np.abs(measure.atoms - z.real)
        hit = carried & (gaps <= _ATOM_TOL * np.maximum(np.abs(measure.atoms), 1.0))
        if np.any(hit):
            raise AtomHit(f"Borel transform evaluated at the atom {z.real}")
    return complex(np.sum(measure.weights[carried] / (measure.atoms[carried] - z)))


def point_mass(measure: SpectralMeasure, x: float,
               sched: EtaSchedule | None = None) -> float:
    """Recover mu({x}) as the extrapolated limit of -i * y * F(x + i*y).

    Exact relation: y * Im F(x + i y) = sum_j w_j y^2 / ((t_j - x)^2 + y^2),
    which tends to mu({x}); the deviation is analytic in y^2, so Richardson
    extrapolation against y^2 converges fast.
    """
    sched = EtaSchedule(1e-3, 0.5, 10) if sched is None else sched
    etas = sched.samples()
    vals = [eta * borel_transform(measure, x + 1j * eta).imag for eta in etas]
    value, _ = richardson_extrapolate(etas ** 2, vals)
    return max(float(np.real(value)), 0.0)


def density(measure: SpectralMeasure, x: float, delta: float) -> float:
    """Smoothed density Im F(x + i*delta) / pi (the Poisson regularization)."""
    return borel_transform(measure, x + 1j * delta).imag / np.pi


# ---------------------------------------------------------------------------
# Stone's formula
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoneResult:
    interval: tuple
    projector: np.ndarray
    deltas: np.ndarray
    extrapolation_error: float
    panels: int


def _imag_resolvent_matrix(op: DirichletOperator, t: float, delta: float) -> np.ndarray:
    """(R(z) - R(conj z)) / 2i as a dense matrix, z = t + i*delta."""
    solver = op.factorize(t + 1j * delta)
    r = solver.solve(np.eye(op.n, dtype=complex))
    # A is real symmetric, so R(conj z) = conj(R(z))
    return r.imag


def _adaptive_panel(f, a, b, nodes, weights, tol, depth, counter):
    mid = 0.5 * (a + b)

    def gauss(lo, hi):
        half = 0.5 * (hi - lo)
        ts = lo + half * (nodes + 1.0)
        acc = None
        for t, w in zip(ts, weights):
            val = w * f(t)
            acc = val if acc is None else acc + val
        return acc * half

    coarse = gauss(a, b)
    fine = gauss(a, mid) + gauss(mid, b)
    err = np.max(np.abs(fine - coarse))
    counter[0] += 2
    if err <= tol or depth >= 24:
        return fine
    left = _adaptive_panel(f, a, mid, nodes, weights, tol / 2, depth + 1, counter)
    right = _adaptive_panel(f, mid, b, nodes, weights, tol / 2, depth + 1, counter)
    return left + right


def stone_projection(op: DirichletOperator, a: float, b: float,
                     eig: EigenSystem | None = None,
                     delta0: float = 1e-2, ratio: float = 0.5, count: int = 6,
                     nodes_per_unit: int = 64, quad_tol: float = 1e-10) -> StoneResult:
    """Spectral projector onto (a, b) via Stone's formula.

    For each delta in a geometric schedule the integral
    (1/pi) int_a^b Im R(t + i delta) dt is evaluated by adaptive composite
    Gauss-Legendre quadrature (panels bisect until the refinement error falls
    below quad_tol), then the family is extrapolated to delta -> 0; the
    delta-dependence is an odd analytic series, so polynomial extrapolation is
    accurate.  Endpoints must stay away from eigenvalues.
    """
    if not b > a:
        raise ValueError("need a < b")
    if eig is not None:
        gaps = np.abs(eig.values[:, None] - np.array([a, b])[None, :])
        tol = 1e-8 * max(1.0, float(np.max(np.abs(eig.values))))
        if np.any(gaps <= tol):
            raise EndpointOnEigenvalue(
                f"interval endpoint of ({a}, {b}) lies on an eigenvalue")

    n_nodes = max(8, int(np.ceil(nodes_per_unit * (b - a) / 8)))
    nodes, weights = roots_legendre(n_nodes)
    deltas = delta0 * ratio ** np.arange(count)
    counter = [0]
    approximants = []
    for delta in deltas:
        integral = _adaptive_panel(
            lambda t: _imag_resolvent_matrix(op, t, delta),
            a, b, nodes, weights, quad_tol, 0, counter,
        )
        approximants.append(integral / np.pi)
    value, err = richardson_extrapolate(deltas, approximants)
    return StoneResult(interval=(float(a), float(b)), projector=value.real,
                       deltas=deltas, extrapolation_error=float(err),
                       panels=counter[0])


# ---------------------------------------------------------------------------
# decomposition and simplicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportReport:
    """Grid sets entering the Lebesgue decomposition read off from F(x + i0)."""

    grid: np.ndarray
    ac_set: "GridSet"                 # clac{0 < Im F(x+i0) < infinity}
    sc_set: "GridSet"                 # {Im F -> infinity, y F(x+iy) -> 0}
    im_values: np.ndarray             # Im F at the smallest admissible y
    diverging: np.ndarray
    y_limit_zero: np.ndarray


def ac_sc_supports(measure: SpectralMeasure, sched: EtaSchedule, grid,
                   tau: float = 1e-6, divergence_ratio: float = 1e3) -> SupportReport:
    """Candidate AC support (essentially closed) and SC support set of a measure.

    For each grid point the Borel transform is followed down the schedule:
    the AC set collects points with a finite nonzero boundary density, the SC
    set those where Im F blows up while y*F still vanishes.  Purely atomic
    measures yield two empty sets: off the atoms Im F -> 0, and on an atom
    y*F tends to the (nonzero) weight.
    """
    from .classify import GridSet, essential_closure

    grid = np.asarray(grid, dtype=float)
    etas = sched.samples()
    ac_flags = np.zeros(grid.size, dtype=bool)
    diverging = np.zeros(grid.size, dtype=bool)
    yzero = np.zeros(grid.size, dtype=bool)
    im_values = np.empty(grid.size)
    for j, x in enumerate(grid):
        fs = np.array([borel_transform(measure, x + 1j * y) for y in etas])
        ims = fs.imag
        if sched.floored:
            im_values[j] = ims[-1]
        else:
            tail = min(5, len(etas))
            limit, _ = richardson_extrapolate(etas[-tail:], ims[-tail:])
            im_values[j] = float(np.real(limit))
        diverging[j] = abs(ims[-1]) > divergence_ratio * max(abs(ims[0]), 1e-300) \
            and abs(ims[-1]) > 1e-10
        yf = np.abs(etas * fs)
        mask = yf > 1e-290
        if mask.sum() >= 2:
            slope = np.polyfit(np.log(etas[mask]), np.log(yf[mask]), 1)[0]
            yzero[j] = slope >= 0.5
        else:
            yzero[j] = True
        ac_flags[j] = (tau < im_values[j] < 1.0 / tau) and not diverging[j]
    ac_set = essential_closure(GridSet.from_flags(grid, ac_flags))
    sc_set = GridSet.from_flags(grid, diverging & yzero)
    return SupportReport(grid=grid, ac_set=ac_set, sc_set=sc_set,
                         im_values=im_values, diverging=diverging, y_limit_zero=yzero)


@dataclass(frozen=True)
class SimplicityReport:
    rank: int
    interior_dim: int
    singular_values: np.ndarray

    @property
    def full(self) -> bool:
        return self.rank == self.interior_dim


def simplicity_rank(op: DirichletOperator, zetas, rel_tol: float = 1e-10) -> SimplicityReport:
    """Numerical rank of the stacked Poisson columns [gamma(zeta_1) ... gamma(zeta_k)].

    Rank equal to the interior dimension certifies that boundary data at the
    sample points generates the whole interior space, i.e. no interior
    subspace is invisible from the boundary.  The stack has at most
    k * n_boundary columns, which caps the attainable rank.
    """
    zetas = list(zetas)
    if not any(complex(z).imag != 0 for z in zetas):
        raise ValueError("need at least one non-real zeta sample")
    cols = np.hstack([poisson_matrix(op, z).gamma for z in zetas])
    s = np.linalg.svd(cols, compute_uv=False)
    rank = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > rel_tol * s[0]))
    return SimplicityReport(rank=rank, interior_dim=op.domain.n_interior,
                            singular_values=s)
