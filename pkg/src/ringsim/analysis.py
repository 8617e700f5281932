"""Post-processing of fleet series.

Density, flow and speed samples for fundamental diagrams, the maximal
Lyapunov exponent of a scalar series (nearest-neighbor divergence
tracking after delay embedding), phase-plane projections, position-binned
speed heatmaps and fleet-level summary statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ring import RingSeries

__all__ = [
    "FD_DTYPE",
    "FleetStats",
    "LyapunovResult",
    "voronoi_density",
    "fundamental_diagram",
    "max_lyapunov",
    "phase_projection",
    "heatmap_grid",
    "stop_events",
    "fleet_stats",
]

# One fundamental-diagram sample per vehicle per instant; q = k*v by
# construction.
FD_DTYPE = np.dtype(
    [("t", "f8"), ("vehicle", "i4"), ("k", "f8"), ("q", "f8"), ("v", "f8")]
)


def voronoi_density(gaps) -> np.ndarray:
    """Per-vehicle density estimate k = 1/gap (cars/m).

    Each vehicle's gap to its leader is treated as the piece of road it
    occupies, giving a piecewise-constant density along the ring.
    """
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps <= 0):
        raise ValueError("density is undefined for nonpositive gaps")
    return 1.0 / gaps


def fundamental_diagram(series: RingSeries) -> np.ndarray:
    """(t, vehicle, density, flow, speed) record per vehicle per instant."""
    gaps = series.gaps()
    k = voronoi_density(gaps)
    v = series.velocities
    n_t, n_veh = v.shape
    out = np.empty(n_t * n_veh, dtype=FD_DTYPE)
    out["t"] = np.repeat(series.times, n_veh)
    out["vehicle"] = np.tile(np.arange(n_veh), n_t)
    out["k"] = k.ravel()
    out["v"] = v.ravel()
    out["q"] = out["k"] * out["v"]
    return out


@dataclass
class LyapunovResult:
    """Maximal Lyapunov exponent estimate plus estimator diagnostics.

    lambda_max is the fitted slope of the mean log-divergence curve times
    the sample rate (1/s). A degenerate input (constant signal, or no
    usable neighbor pairs) is reported with the flag set, a strongly
    negative sentinel value and a note instead of an exception so that
    batch pipelines can finish.
    """

    lambda_max: float
    embed_dim: int
    lag: int
    min_separation: int
    fit_range: tuple[int, int]
    sample_rate: float
    divergence_curve: np.ndarray = field(repr=False)
    n_reference: int = 0
    degenerate: bool = False
    note: str = ""


def _autocorr_lag(x: np.ndarray) -> int:
    """First zero crossing of the autocorrelation, else its 1/e point."""
    n = x.size
    xc = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(xc, m)
    acf = np.fft.irfft(spec * np.conj(spec), m)[:n]
    if acf[0] <= 0:
        return 1
    acf = acf / acf[0]
    below_zero = np.nonzero(acf <= 0.0)[0]
    if below_zero.size:
        return max(1, int(below_zero[0]))
    below_e = np.nonzero(acf <= 1.0 / math.e)[0]
    if below_e.size:
        return max(1, int(below_e[0]))
    return 1


def _mean_period(x: np.ndarray) -> int:
    """Period (in samples) of the dominant spectral peak, 0 if none."""
    xc = x - x.mean()
    spec = np.abs(np.fft.rfft(xc))
    if spec.size < 2:
        return 0
    peak = int(np.argmax(spec[1:])) + 1
    if spec[peak] <= 0:
        return 0
    return int(round(x.size / peak))


def _nearest_neighbors(Y: np.ndarray, exclusion: int, chunk: int = 1024):
    """Index and distance of each point's nearest temporally-distant neighbor.

    Distances are compared squared via the Gram-matrix expansion (one BLAS
    product per chunk into a reused buffer); rows within ``exclusion``
    samples of the reference (including itself) are masked out.
    """
    m = Y.shape[0]
    yt = np.ascontiguousarray(Y.T)
    sq = np.einsum("ij,ij->i", Y, Y)
    nn_idx = np.empty(m, dtype=np.int64)
    nn_d2 = np.empty(m)
    buf = np.empty((min(chunk, m), m))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        rows = stop - start
        d2 = buf[:rows]
        np.dot(Y[start:stop], yt, out=d2)
        d2 *= -2.0
        d2 += sq[None, :]
        d2 += sq[start:stop, None]
        for row in range(start, stop):
            lo = max(0, row - exclusion)
            hi = min(m, row + exclusion + 1)
            d2[row - start, lo:hi] = np.inf
        nn_idx[start:stop] = np.argmin(d2, axis=1)
        nn_d2[start:stop] = d2[np.arange(rows), nn_idx[start:stop]]
    return nn_idx, np.sqrt(np.maximum(nn_d2, 0.0))


def _degenerate(reason, embed_dim, lag, min_sep, fit_range, rate) -> LyapunovResult:
    return LyapunovResult(
        lambda_max=-math.inf,
        embed_dim=embed_dim,
        lag=lag,
        min_separation=min_sep,
        fit_range=fit_range,
        sample_rate=rate,
        divergence_curve=np.empty(0),
        degenerate=True,
        note=reason,
    )


def max_lyapunov(signal, sample_rate: float = 1.0, embed_dim: int = 3,
                 lag: int | None = None, min_separation: int | None = None,
                 fit_range: tuple[int, int] | None = None,
                 min_pairs: int = 10) -> LyapunovResult:
    """Maximal Lyapunov exponent of a uniformly sampled scalar series.

    The signal is delay-embedded in ``embed_dim`` dimensions; each point is
    paired with its nearest neighbor at least ``min_separation`` samples
    away in time, the mean log separation of the pairs is tracked over
    growing offsets, and a line fitted over ``fit_range`` (sample offsets)
    gives the exponent as slope times sample rate.

    Defaults: lag is the first zero crossing of the autocorrelation (1/e
    fallback), min_separation the dominant spectral period, and fit_range
    one second worth of samples. The series must be long enough to embed
    and track (roughly 500 samples or more).
    """
    x = np.asarray(signal, dtype=float).ravel()
    if fit_range is None:
        fit_range = (0, max(1, int(round(sample_rate))))
    fit_range = (int(fit_range[0]), int(fit_range[1]))
    if not 0 <= fit_range[0] < fit_range[1]:
        raise ValueError("fit_range must satisfy 0 <= start < end")
    n = x.size
    needed = (embed_dim - 1) * max(lag or 1, 1) + fit_range[1] + min_pairs
    if n < max(needed, 64):
        raise ValueError(f"series too short: {n} samples, need at least {max(needed, 64)}")
    if embed_dim < 1:
        raise ValueError("embed_dim must be at least 1")
    if np.ptp(x) == 0.0:
        return _degenerate(
            "constant signal: divergence undefined", embed_dim, lag or 0,
            min_separation or 0, fit_range, sample_rate,
        )
    # Center the signal: pairwise distances are unchanged but the squared-
    # distance expansion in the neighbor search loses far less precision
    # when the embedded cloud sits near the origin.
    x = x - x.mean()

    if lag is None:
        lag = _autocorr_lag(x)
        if embed_dim > 1:
            lag = max(1, min(lag, (n // 4) // (embed_dim - 1)))
    if lag < 1:
        raise ValueError("lag must be at least 1")
    if min_separation is None:
        min_separation = _mean_period(x)
        if min_separation <= 0:
            min_separation = max((embed_dim - 1) * lag, 10)
        min_separation = min(min_separation, n // 10)
    min_separation = max(1, int(min_separation))

    m_pts = n - (embed_dim - 1) * lag
    if m_pts < 2 * (min_separation + 1):
        min_separation = max(1, m_pts // 4)
    offsets = np.arange(embed_dim) * lag
    Y = x[np.arange(m_pts)[:, None] + offsets[None, :]]

    nn_idx, nn_d = _nearest_neighbors(Y, min_separation)
    valid = np.isfinite(nn_d) & (nn_d > 0.0)
    refs = np.nonzero(valid)[0]
    if refs.size < min_pairs:
        return _degenerate(
            "no usable neighbor pairs (signal nearly constant or repetitive)",
            embed_dim, lag, min_separation, fit_range, sample_rate,
        )

    k_max = fit_range[1]
    curve = np.full(k_max + 1, np.nan)
    for k in range(k_max + 1):
        i = refs + k
        j = nn_idx[refs] + k
        ok = (i < m_pts) & (j < m_pts)
        if not np.any(ok):
            break
        d = np.linalg.norm(Y[i[ok]] - Y[j[ok]], axis=1)
        d = d[d > 0.0]
        if d.size < min_pairs:
            break
        curve[k] = np.mean(np.log(d))
    have = np.nonzero(np.isfinite(curve))[0]
    lo = fit_range[0]
    usable = have[(have >= lo)]
    if usable.size < 2:
        return _degenerate(
            "divergence curve too short to fit", embed_dim, lag,
            min_separation, fit_range, sample_rate,
        )
    slope = np.polyfit(usable.astype(float), curve[usable], 1)[0]
    return LyapunovResult(
        lambda_max=float(slope * sample_rate),
        embed_dim=embed_dim,
        lag=int(lag),
        min_separation=int(min_separation),
        fit_range=fit_range,
        sample_rate=sample_rate,
        divergence_curve=curve[np.isfinite(curve)],
        n_reference=int(refs.size),
    )


def phase_projection(series: RingSeries, vehicle: int) -> np.ndarray:
    """Per-instant (gap, leader speed minus own speed) pairs, shape (n, 2).

    The two-dimensional projection in which uniform flow is a single point
    and sustained waves trace closed orbits.
    """
    ldr = int(series.leader_index()[vehicle])
    gaps = series.gaps()[:, vehicle]
    dv = series.velocities[:, ldr] - series.velocities[:, vehicle]
    return np.column_stack([gaps, dv])


def heatmap_grid(series: RingSeries, n_bins: int = 100):
    """Mean speed per (instant, position bin); empty cells are NaN.

    Returns (grid, bin_edges) with grid of shape (n_samples, n_bins).
    """
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    length = series.ring_length
    edges = np.linspace(0.0, length, n_bins + 1)
    bins = np.minimum((series.positions / (length / n_bins)).astype(int), n_bins - 1)
    n_t = series.times.size
    sums = np.zeros((n_t, n_bins))
    counts = np.zeros((n_t, n_bins))
    rows = np.repeat(np.arange(n_t), series.n_vehicles)
    np.add.at(sums, (rows, bins.ravel()), series.velocities.ravel())
    np.add.at(counts, (rows, bins.ravel()), 1.0)
    with np.errstate(invalid="ignore"):
        grid = sums / counts
    grid[counts == 0] = np.nan
    return grid, edges


def stop_events(series: RingSeries, v_stop: float = 0.1) -> list[tuple[float, int]]:
    """(time, vehicle) of each downward crossing of the stop threshold.

    A vehicle already below the threshold at the first sample counts once
    at that instant; re-entries after recovering above the threshold count
    again.
    """
    below = series.velocities < v_stop
    entered = np.zeros_like(below)
    entered[0] = below[0]
    entered[1:] = below[1:] & ~below[:-1]
    t_idx, veh = np.nonzero(entered)
    return [(float(series.times[t]), int(v)) for t, v in zip(t_idx, veh)]


@dataclass
class FleetStats:
    """Cross-fleet summary of one series.

    v_std_series : per-instant standard deviation of the fleet speeds
    stop_event_count : downward stop-threshold crossings over the series
    min_gap : smallest gap anywhere in the series (m)
    max_density : largest per-vehicle density anywhere (cars/m)
    """

    v_std_series: np.ndarray
    stop_event_count: int
    min_gap: float
    max_density: float


def fleet_stats(series: RingSeries, v_stop: float = 0.1) -> FleetStats:
    gaps = series.gaps()
    min_gap = float(gaps.min())
    return FleetStats(
        v_std_series=series.velocities.std(axis=1),
        stop_event_count=len(stop_events(series, v_stop)),
        min_gap=min_gap,
        max_density=float(voronoi_density(gaps).max()),
    )
