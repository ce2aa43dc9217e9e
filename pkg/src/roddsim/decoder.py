"""Belief-propagation support recovery on the off-slot observation.

The bipartite factor graph links measurement ``mu`` and symbol ``k``
whenever the sensing entry s[mu, k] is nonzero.  Each iteration sends a
residual-corrected observation from measurements to symbols, shrinks it
through the scalar conditional-mean denoiser, and feeds the residuals
back, with one scalar effective variance tau per real/imaginary system:

    m[k<-mu]     = E[X | sum of incoming z over dk\\mu / (|dk|-1); tau/(|dk|-1)]
    var[k<-mu]   = Var[X | same]
    z[mu<-k]     = (y_mu - sqrt(gamma_s) * sum over dmu\\k of s*m) / (sqrt(gamma_s) * s)
    tau          = degree-weighted average of the variances
                   + frame_len*q*(1-q) / (2*gamma_s)

The tau update is implemented exactly as the degree-weighted form above
even though averaging per-edge variances over edges would differ slightly;
the two agree to leading order and the weighted form is the one prescribed.

By default the denoiser is evaluated through per-iteration interpolation
tables built at the mean-degree variance tau/(frame_len*q*(1-q) - 1), with
the evaluation points still using true symbol degrees; setting
``exact_denoiser`` computes every edge by quadrature at its true-degree
variance.  A symbol seen by only one measurement has an empty
leave-one-out set, so its outgoing belief degenerates to the prior (mean
zero, prior variance); the final estimate for such a symbol combines its
single observation at variance tau.

The decision for each neighbor is the index of the largest combined
magnitude |m_real + i*m_imag| within that neighbor's 2**l-long sub-block,
lowest index winning ties.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .phy import ObservationInstance
from .prior import PriorModel, conditional_mean_var

_TAU_FLOOR = 1e-300


@dataclass(frozen=True)
class DecodeOptions:
    """Knobs for ``decode``.

    max_iters       T; the edge-message loop runs T-1 times
    tol             early stop once max |m_t - m_{t-1}| falls below this
    exact_denoiser  skip the interpolation tables, quadrature per edge
    interp_points   table size when interpolating
    tau_init        starting effective variance ("a large positive number")
    gamma_s         override the instance's effective SNR; the raw wiring
                    gamma * frame_len * q * (1-q) (no interference-variance
                    divisor) can be injected here
    record_state    keep per-iteration message snapshots (testing)
    trace           keep (t, tau, mean-square residual) rows
    """

    max_iters: int = 20
    tol: float = 1e-6
    exact_denoiser: bool = False
    interp_points: int = 256
    tau_init: float = 1e6
    damping: float = 0.0
    gamma_s: float | None = None
    record_state: bool = False
    trace: bool = False


@dataclass
class DecodeResult:
    """Decoder output for one instance.

    indices     (K,) 1-based message decisions
    magnitudes  (K, 2**l) combined posterior magnitudes per candidate
    iterations  edge-message iterations actually run
    converged   True when the early-stop criterion fired
    failed      True for degenerate instances (no measurements / no edges)
    """

    indices: np.ndarray
    magnitudes: np.ndarray
    iterations: int
    converged: bool
    failed: bool = False
    trace: list = field(default_factory=list)
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class InterpTables:
    """Tabulated denoiser: grid points with conditional means/variances."""

    y: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    def evaluate(self, y: np.ndarray):
        """Piecewise-linear inside the grid, linear extrapolation outside."""
        idx = np.clip(np.searchsorted(self.y, y), 1, len(self.y) - 1)
        x0 = self.y[idx - 1]
        t = (y - x0) / (self.y[idx] - x0)
        m = self.mean[idx - 1] + t * (self.mean[idx] - self.mean[idx - 1])
        v = self.var[idx - 1] + t * (self.var[idx] - self.var[idx - 1])
        return m, v


def _warped_grid(span: float, fine: float, n: int) -> np.ndarray:
    """Symmetric grid on [-span, span], spacing ~``fine`` at the center.

    sinh warping concentrates nodes where the denoiser has structure while
    still reaching the far tail of the prior; a uniform layout cannot do
    both once the support spans several decades.
    """
    t = np.linspace(-1.0, 1.0, n)
    ratio = span * (t[1] - t[0]) / fine
    if ratio <= 1.0:
        return span * t
    # solve sinh(k)/k = ratio by Newton; safe since the map is convex
    k = np.log(2.0 * ratio) + 1.0
    for _ in range(40):
        step = (np.sinh(k) - ratio * k) / (np.cosh(k) - ratio)
        k -= step
        if abs(step) < 1e-10 * k:
            break
    return span * np.sinh(k * t) / np.sinh(k)


def build_interp_tables(
    prior: PriorModel,
    noise_var: float,
    n_points: int = 256,
    y_max: float | None = None,
) -> InterpTables:
    """Tabulate the denoiser at effective observation variance ``noise_var``.

    By default the grid spans +-(8*sqrt(noise_var) + max_amplitude) so every
    plausible pseudo-observation lands inside it.  When the caller knows the
    largest magnitude it will evaluate (``y_max``), the span shrinks to it
    and prior nodes beyond the Gaussian reach of every grid point are
    dropped; they carry exp(-40) relative posterior weight, so the table is
    unchanged to machine-noise levels while the quadrature gets much
    cheaper.
    """
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    s = float(np.sqrt(noise_var))
    span = 8.0 * s + prior.max_amplitude
    if y_max is not None:
        span = min(span, max(float(y_max), 8.0 * s + prior.core_scale))
    eval_prior = prior
    if prior.continuous_mass > 0 and span + 9.0 * s < prior.max_amplitude:
        hi = int(np.searchsorted(prior.grid, span + 9.0 * s, side="right"))
        lo = len(prior.grid) - hi
        eval_prior = replace(
            prior,
            grid=prior.grid[lo:hi],
            pdf=prior.pdf[lo:hi],
            _weights=prior._weights[lo:hi] if prior._weights is not None else None,
            _log_node_mass=prior._log_node_mass[lo:hi]
            if prior._log_node_mass is not None
            else None,
        )
    y = _warped_grid(span, s / 3.0, n_points)
    m, v = conditional_mean_var(y, noise_var, eval_prior)
    return InterpTables(y=y, mean=m, var=v)


def _exact_edge_denoise(y_eff, tau, denom, prior):
    """Quadrature denoising with per-edge variances tau/denom."""
    m = np.empty_like(y_eff)
    v = np.empty_like(y_eff)
    for d in np.unique(denom):
        sel = denom == d
        m[sel], v[sel] = conditional_mean_var(y_eff[sel], tau / d, prior)
    return m, v


def decode(
    instance: ObservationInstance,
    prior: PriorModel,
    options: DecodeOptions | None = None,
) -> DecodeResult:
    """Recover all neighbors' message indices from one observation."""
    opt = options or DecodeOptions()
    rodd = instance.rodd
    size = rodd.codebook_size
    k_total = instance.num_neighbors
    n = size * k_total

    mu_idx, k_idx = np.nonzero(instance.sensing)
    if instance.num_measurements == 0 or len(mu_idx) == 0:
        return DecodeResult(
            indices=np.ones(k_total, dtype=int),
            magnitudes=np.zeros((k_total, size)),
            iterations=0,
            converged=False,
            failed=True,
        )
    s_val = instance.sensing[mu_idx, k_idx]
    n_edges = len(s_val)

    gamma_s = opt.gamma_s if opt.gamma_s is not None else instance.gamma_s
    root_gs = np.sqrt(gamma_s)
    deg_k = np.bincount(k_idx, minlength=n)
    deg_mu = np.bincount(mu_idx, minlength=instance.num_measurements)
    denom_k = deg_k - 1
    edge_denom = denom_k[k_idx]
    single_obs = edge_denom == 0
    noise_term = rodd.mean_symbol_degree / (2.0 * gamma_s)
    mean_denom = rodd.mean_symbol_degree - 1.0
    if not opt.exact_denoiser and mean_denom <= 0:
        raise ValueError(
            "frame_len*q*(1-q) <= 1: the mean-degree approximation is "
            "meaningless; use exact_denoiser"
        )

    y_parts = np.stack([instance.observation.real, instance.observation.imag])
    y_edge = y_parts[:, mu_idx]
    z = y_edge / (root_gs * s_val)
    tau = np.array([opt.tau_init, opt.tau_init])

    prior_mean, prior_var = prior.mean, prior.variance
    m_prev = np.zeros((2, n_edges))
    v_prev = np.zeros((2, n_edges))
    m_edge = np.zeros((2, n_edges))
    v_edge = np.zeros((2, n_edges))
    result_trace: list = []
    history: list = []
    iterations = 0
    converged = False

    for t in range(1, opt.max_iters):
        iterations = t
        tau_new = np.empty(2)
        for i in (0, 1):
            sum_z = np.bincount(k_idx, weights=z[i], minlength=n)
            with np.errstate(invalid="ignore", divide="ignore"):
                y_eff = (sum_z[k_idx] - z[i]) / edge_denom
            y_eff[single_obs] = 0.0

            if opt.exact_denoiser:
                live = ~single_obs
                m_edge[i, live], v_edge[i, live] = _exact_edge_denoise(
                    y_eff[live], tau[i], edge_denom[live], prior
                )
            else:
                tables = build_interp_tables(
                    prior,
                    tau[i] / mean_denom,
                    opt.interp_points,
                    y_max=float(np.abs(y_eff).max()),
                )
                m_edge[i], v_edge[i] = tables.evaluate(y_eff)
            m_edge[i, single_obs] = prior_mean
            v_edge[i, single_obs] = prior_var
            if opt.damping > 0 and t > 1:
                m_edge[i] += opt.damping * (m_prev[i] - m_edge[i])
                v_edge[i] += opt.damping * (v_prev[i] - v_edge[i])

            sm = s_val * m_edge[i]
            sum_sm = np.bincount(
                mu_idx, weights=sm, minlength=instance.num_measurements
            )
            z[i] = (y_edge[i] - root_gs * (sum_sm[mu_idx] - sm)) / (root_gs * s_val)

            var_per_mu = np.bincount(
                mu_idx, weights=v_edge[i], minlength=instance.num_measurements
            )
            tau_new[i] = (deg_mu @ var_per_mu) / n_edges + noise_term

            if opt.trace:
                resid = y_parts[i] - root_gs * sum_sm
                result_trace.append(
                    (t, i, float(tau_new[i]), float(np.mean(resid**2)))
                )

        if (tau_new <= 0).any():
            warnings.warn(
                f"effective variance hit {tau_new.min():.3e} at iteration {t}; "
                "clamping",
                RuntimeWarning,
            )
            tau_new = np.maximum(tau_new, _TAU_FLOOR)
        tau_settled = np.abs(tau_new - tau).max() < 1e-3 * tau_new.min()
        tau = tau_new
        if opt.record_state:
            history.append(
                {
                    "t": t,
                    "m": m_edge.copy(),
                    "var": v_edge.copy(),
                    "z": z.copy(),
                    "tau": tau.copy(),
                }
            )
        delta = np.abs(m_edge - m_prev).max()
        m_prev[:] = m_edge
        v_prev[:] = v_edge
        # means barely move during the first sweeps while tau collapses from
        # its large start, so the message criterion alone would fire early
        if delta < opt.tol and tau_settled:
            converged = True
            break

    # final per-symbol means; a lone observation is combined at weight 1
    final_denom = np.maximum(denom_k, 1)
    m_final = np.zeros((2, n))
    for i in (0, 1):
        sum_z = np.bincount(k_idx, weights=z[i], minlength=n)
        y_fin = sum_z / final_denom
        if opt.exact_denoiser:
            live = deg_k > 0
            m_final[i, live], _ = _exact_edge_denoise(
                y_fin[live], tau[i], final_denom[live], prior
            )
        else:
            tables = build_interp_tables(
                prior,
                tau[i] / mean_denom,
                opt.interp_points,
                y_max=float(np.abs(y_fin).max()),
            )
            m_final[i], _ = tables.evaluate(y_fin)
        m_final[i, deg_k == 0] = prior_mean

    magnitudes = np.hypot(m_final[0], m_final[1]).reshape(k_total, size)
    indices = magnitudes.argmax(axis=1) + 1
    return DecodeResult(
        indices=indices,
        magnitudes=magnitudes,
        iterations=iterations,
        converged=converged,
        trace=result_trace,
        history=history,
    )


def write_trace_csv(trace, path) -> None:
    """Persist a decode trace for convergence debugging."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "part", "tau", "ms_residual"])
        w.writerows(trace)


def exhaustive_ml_decode(instance: ObservationInstance) -> np.ndarray:
    """Least-squares support selection over every message combination.

    For each of the (2**l)**K hypotheses, project the observation onto the
    span of the hypothesized signature columns (complex amplitudes free)
    and keep the combination with the smallest residual.  Exponential in K,
    so only small instances are accepted; intended as a reference decoder.
    """
    size = instance.rodd.codebook_size
    k_total = instance.num_neighbors
    n_hyp = size**k_total
    if n_hyp > 65536:
        raise ValueError(f"{n_hyp} hypotheses is beyond the exhaustive budget")
    if instance.num_measurements == 0:
        return np.ones(k_total, dtype=int)

    best = None
    best_w = np.ones(k_total, dtype=int)
    y = instance.observation
    for h in range(n_hyp):
        w = np.empty(k_total, dtype=int)
        rem = h
        for j in range(k_total):
            w[j] = rem % size + 1
            rem //= size
        cols = np.arange(k_total) * size + (w - 1)
        a = instance.sensing[:, cols].astype(complex)
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        resid = float(np.linalg.norm(y - a @ coef) ** 2)
        if best is None or resid < best - 1e-15:
            best = resid
            best_w = w
    return best_w
