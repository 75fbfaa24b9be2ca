"""Figure rendering for the CLI report paths.

Every drawing helper takes the already-computed objects and a target file;
nothing here recomputes dynamics.  The Agg backend keeps rendering
headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .orbits import admissibility_bounds, constants, fixed_point, x0_eval, y0_eval  # noqa: E402


def _save(fig, path):
    out = Path(path)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def save_trajectory_plot(traj, path, title=""):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
    ax.plot([float(b) for b in traj.breakpoints],
            [float(v) for v in traj.values], lw=1.4)
    zs = [float(z) for z in traj.crossings if z >= traj.start_time]
    if zs:
        ax.plot(zs, [0.0] * len(zs), "o", ms=3.5, color="crimson",
                label="sign changes")
    if traj.touches:
        ax.plot([float(z) for z in traj.touches], [0.0] * len(traj.touches),
                "^", ms=5, color="darkorange", label="touch points")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    if title:
        ax.set_title(title)
    if zs or traj.touches:
        ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def _cycle_nodes(p, variant, lo, hi, shift=0):
    """Corner times of the shifted cycle inside [lo, hi], plus endpoints."""
    c = constants(p)
    if variant == "x0":
        period, offsets = c.T0, (0, 1, c.t0, c.t0 + 1)
    else:
        period, offsets = c.theta_star, (0, 1 - c.theta_star, 1 - c.tau_star)
    ts = {float(lo), float(hi)}
    base = float(shift) + (float(lo - shift) // float(period) - 1) * float(period)
    while base <= float(hi):
        for off in offsets:
            t = base + float(off)
            if float(lo) <= t <= float(hi):
                ts.add(t)
        base += float(period)
    return sorted(ts)


def save_classify_plot(traj, cls, p, path):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
    ax.plot([float(b) for b in traj.breakpoints],
            [float(v) for v in traj.values], lw=1.4, label="trajectory")
    if cls.settle_time is not None:
        ev = x0_eval if cls.variant == "x0" else y0_eval
        ts = _cycle_nodes(p, cls.variant, cls.settle_time, traj.end, cls.shift)
        ax.plot(ts, [float(ev(t - float(cls.shift), p)) for t in ts], "--",
                lw=1.2, color="seagreen", label=f"{cls.variant} (shifted)")
        ax.axvline(float(cls.settle_time), color="0.5", lw=0.9, ls=":",
                   label="settle time")
        ax.set_title(f"locks onto {cls.variant} at t={float(cls.settle_time):g}")
    else:
        ax.set_title(cls.note or cls.variant)
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def save_cycles_plot(p, path):
    c = constants(p)
    fig, axes = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    for ax, variant, ev in ((axes[0], "x0", x0_eval), (axes[1], "y0", y0_eval)):
        ts = _cycle_nodes(p, variant, 0, c.T0)
        ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
        ax.plot(ts, [float(ev(t, p)) for t in ts], lw=1.4)
        ax.set_ylabel(variant)
    axes[0].set_title(f"slow cycle (period {float(c.T0):g}) and rapid cycle "
                      f"(period {float(c.theta_star):g}), a={float(p.a):g}")
    axes[1].set_xlabel("t")
    return _save(fig, path)


def save_region_plot(p, path, pairs=None):
    a = float(p.a)
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    n = 400
    taus = [k / n for k in range(1, n)]
    los, his = [], []
    for tau in taus:
        lo, hi = admissibility_bounds(tau, p)
        los.append(max(float(lo), tau))
        his.append(min(float(hi), 1.0))
    ax.fill_between(taus, los, his, where=[l < h for l, h in zip(los, his)],
                    color="lightsteelblue", alpha=0.6, label="stays two-zero")
    ax.plot([0, 1], [0, 1], color="0.7", lw=0.8, ls="--")
    fp = fixed_point(p)
    ax.plot([float(fp.tau)], [float(fp.theta)], "*", ms=12, color="crimson",
            label="rapid-cycle pair")
    if pairs:
        xs = [float(pr.tau) for pr in pairs]
        ys = [float(pr.theta) for pr in pairs]
        ax.plot(xs, ys, "o-", ms=4, lw=0.9, color="darkslategray",
                label="iterates")
        for k, (x, y) in enumerate(zip(xs, ys)):
            ax.annotate(str(k), (x, y), textcoords="offset points",
                        xytext=(4, 3), fontsize=7)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("tau")
    ax.set_ylabel("theta")
    ax.set_title(f"return-map admissibility, a={a:g}")
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def save_multipliers_plot(p, path, mus):
    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    circle = plt.Circle((0, 0), 1.0, fill=False, color="0.6", ls="--", lw=0.9)
    ax.add_patch(circle)
    for mu in mus:
        ax.plot([mu.real], [mu.imag], "o", ms=7, color="crimson")
        ax.annotate(f"{mu.real:g}{mu.imag:+g}i" if mu.imag else f"{mu.real:g}",
                    (mu.real, mu.imag), textcoords="offset points",
                    xytext=(6, 4), fontsize=8)
    lim = max(1.3, max(abs(mu) for mu in mus) * 1.2)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.axhline(0.0, color="0.85", lw=0.7)
    ax.axvline(0.0, color="0.85", lw=0.7)
    ax.set_title(f"multipliers vs unit circle, a={float(p.a):g}")
    return _save(fig, path)


def save_growth_plot(report, path):
    ks = [row.period_index for row in report.rows]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.semilogy(ks, [row.norm for row in report.rows], "o-", ms=3.5,
                label="deviation norm")
    ax.semilogy(ks, [row.eigenplane_norm for row in report.rows], "s--",
                ms=3.5, label="eigenplane component")
    if report.exit_period is not None:
        ax.axvline(report.exit_period, color="crimson", lw=0.9, ls=":",
                   label="leaves linear regime")
    ax.set_xlabel("period")
    ax.set_ylabel("norm")
    ax.set_title("per-period growth of a small deviation")
    ax.legend(loc="upper left", fontsize=8)
    return _save(fig, path)


def save_samples_plot(ts, us, path, ylabel="u"):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot([float(t) for t in ts], [float(u) for u in us], lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title("membrane potential over the computed span")
    return _save(fig, path)
