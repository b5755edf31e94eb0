"""
Observable regularity criterion.

The data norm M_h^2 is the largest, over the observation window, of

  * modal:  L^3 sum_{retained k} lambda(k) |u_hat(k)|^2   (= ||P_N u||^2)
  * nodal:  sum_{alpha,i} vol(T_i^alpha) |D^{alpha,i}|_F^2

and with W_h^2 = c |f|^2 / (nu^2 lambda_1) + c M_h^2 the flow is declared
regular when

    max{nu lambda_1, W_h^4 / nu^3, c ||grad u(t0)||^4 / nu^3} <= nu / (c h^2)

("sufficient" variant) or <= nu / (4 c h^2) ("iff" variant, which uses the
state at t0 > 0). The supremum in time is taken over stored snapshots, so
M_h is an under-approximation of the continuous-time quantity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .nse_solver import Trajectory
from .observers import ModalData, NodalData, observe_modal, observe_nodal, modal_scale
from .spectral_core import SpectralField, norms
from .tetra_interpolant import h1_data_norms

Variant = Literal["sufficient", "iff"]


@dataclass(frozen=True)
class ObservationSeries:
    kind: Literal["modal", "nodal"]
    t0: float
    T: float
    entries: tuple[tuple[float, ModalData | NodalData], ...]

    def __post_init__(self):
        if self.kind not in ("modal", "nodal"):
            raise ValueError(f"unknown observation kind {self.kind!r}")
        want = ModalData if self.kind == "modal" else NodalData
        times = [t for t, _ in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("observation times must be strictly increasing")
        for t, d in self.entries:
            if not isinstance(d, want):
                raise ValueError(f"{self.kind} series holds a {type(d).__name__}")
            if not self.t0 - 1e-12 <= t <= self.T + 1e-12:
                raise ValueError(f"observation at t={t} outside window [{self.t0}, {self.T}]")

    @classmethod
    def from_trajectory(cls, traj: Trajectory, kind: str, resolution: int, t0: float = 0.0, T: float | None = None):
        """Observe every snapshot in [t0, T] with N (modal) or n_cubes (nodal)."""
        sub = traj.window(t0, T)
        obs = observe_modal if kind == "modal" else observe_nodal
        T = sub.times[-1] if T is None else T
        return cls(kind, t0, T, tuple((t, obs(u, resolution)) for t, u in sub))

    @property
    def h(self) -> float:
        d = self.entries[0][1]
        return d.h


def modal_data_norm2(d: ModalData) -> float:
    return float(d.config.L**3 * np.sum(d.eigenvalues()[:, None] * np.abs(d.coeffs) ** 2))


def nodal_data_norm2(d: NodalData) -> float:
    return h1_data_norms(d).data ** 2


def mh_series(series: ObservationSeries) -> list[tuple[float, float]]:
    """(t, data norm squared) for every entry."""
    f = modal_data_norm2 if series.kind == "modal" else nodal_data_norm2
    return [(t, f(d)) for t, d in series.entries]


def _sup(series: ObservationSeries, kind: str) -> float:
    if series.kind != kind:
        raise ValueError(f"expected a {kind} series, got {series.kind}")
    if not series.entries:
        raise ValueError("observation series is empty")
    return max(v for _, v in mh_series(series))


def mh_modal(series: ObservationSeries) -> float:
    return _sup(series, "modal")


def mh_nodal(series: ObservationSeries) -> float:
    return _sup(series, "nodal")


def mh(series: ObservationSeries) -> float:
    return _sup(series, series.kind)


def wh(mh2: float, f: SpectralField | float | None, nu: float, lambda1: float, c: float = 1.0) -> float:
    """W_h^2 = c |f|^2 / (nu^2 lambda_1) + c M_h^2.

    ``f`` may be a forcing field, its L^2 norm, or None for no forcing.
    """
    if nu <= 0 or lambda1 <= 0:
        raise ValueError(f"nu and lambda1 must be positive (nu={nu}, lambda1={lambda1})")
    if f is None:
        f_l2 = 0.0
    elif isinstance(f, SpectralField):
        f_l2 = norms(f)[0]
    else:
        f_l2 = float(f)
    return c * f_l2**2 / (nu**2 * lambda1) + c * mh2


@dataclass(frozen=True)
class CriterionReport:
    mh2: float
    wh2: float
    terms: dict
    threshold: float
    satisfied: bool
    c: float
    h: float
    nu: float
    lambda1: float
    variant: str
    grad0: float
    grad0_source: str = "reference"
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def predicted_bound(self) -> float:
        """W_h, the bound on ||u(t)|| asserted when the criterion holds."""
        return float(np.sqrt(self.wh2))

    def recompute(self) -> bool:
        return max(self.terms.values()) <= self.threshold

    def to_dict(self) -> dict:
        d = asdict(self)
        d["notes"] = list(self.notes)
        d["predicted_bound"] = self.predicted_bound
        d["max_term"] = max(self.terms.values())
        return d


def check(
    mh2: float,
    f,
    nu: float,
    lambda1: float,
    h: float,
    grad0: float,
    c: float = 1.0,
    variant: Variant = "sufficient",
    grad0_source: str = "reference",
    notes: Sequence[str] = (),
) -> CriterionReport:
    """Evaluate the criterion for given data norm, forcing and scale.

    ``grad0`` is ||grad u|| at the start of the window (t = 0 for the
    sufficient variant, t0 for the iff variant).
    """
    if variant not in ("sufficient", "iff"):
        raise ValueError(f"unknown variant {variant!r}")
    if h <= 0 or c <= 0:
        raise ValueError(f"h and c must be positive (h={h}, c={c})")
    w2 = wh(mh2, f, nu, lambda1, c)
    terms = {
        "nu_lambda1": nu * lambda1,
        "wh4_over_nu3": w2**2 / nu**3,
        "grad0_term": c * grad0**4 / nu**3,
    }
    threshold = nu / (c * h**2) if variant == "sufficient" else nu / (4 * c * h**2)
    satisfied = max(terms.values()) <= threshold
    return CriterionReport(
        mh2, w2, terms, threshold, satisfied, c, h, nu, lambda1, variant, grad0, grad0_source, tuple(notes)
    )


def check_series(
    series: ObservationSeries,
    f,
    nu: float,
    lambda1: float,
    c: float = 1.0,
    variant: Variant = "sufficient",
    reference: SpectralField | None = None,
    h: float | None = None,
) -> CriterionReport:
    """Criterion from an observation series.

    The initial-gradient term uses the full reference field at the window
    start when given; otherwise the first observation stands in for it and
    the report says so.
    """
    m2 = mh(series)
    notes = []
    if reference is not None:
        g0, source = norms(reference)[1], "reference"
    else:
        d0 = series.entries[0][1]
        if series.kind == "modal":
            g0 = norms(d0.reconstruct())[1]
        else:
            g0 = h1_data_norms(d0).exact
        source = "observation"
        notes.append("initial gradient estimated from the first observation")
    h = series.h if h is None else h
    return check(m2, f, nu, lambda1, h, g0, c, variant, source, notes)


def h_sweep(
    traj: Trajectory,
    f,
    nu: float,
    c: float,
    hs: Sequence[float],
    t0: float = 0.0,
    variant: Variant = "sufficient",
    observe: Callable[[SpectralField, int], NodalData] = observe_nodal,
) -> list[CriterionReport]:
    """Nodal criterion at each scale h (L / h must be an integer)."""
    L = traj.torus.L
    lam1 = traj.torus.lambda1
    sub = traj.window(t0)
    reference = sub.fields[0]
    reports = []
    for h in hs:
        n = int(round(L / h))
        if n < 2 or abs(n * h - L) > 1e-9 * L:
            raise ValueError(f"h={h} does not divide L={L} into at least two cubes")
        series = ObservationSeries("nodal", sub.times[0], sub.times[-1], tuple((t, observe(u, n)) for t, u in sub))
        reports.append(check_series(series, f, nu, lam1, c, variant, reference=reference, h=L / n))
    return reports


def modal_sweep(
    traj: Trajectory, f, nu: float, c: float, Ns: Sequence[int], t0: float = 0.0, variant: Variant = "sufficient"
) -> list[CriterionReport]:
    """Modal criterion at each cutoff N, with h = lambda_N^{-1/2}."""
    sub = traj.window(t0)
    reports = []
    for N in Ns:
        series = ObservationSeries.from_trajectory(sub, "modal", N, sub.times[0], sub.times[-1])
        reports.append(
            check_series(series, f, nu, traj.torus.lambda1, c, variant, reference=sub.fields[0], h=modal_scale(traj.torus, N))
        )
    return reports


def first_admissible(reports: Sequence[CriterionReport]) -> CriterionReport | None:
    return next((r for r in reports if r.satisfied), None)
