"""PNG figures for ``tsxai report``.  Only this module imports matplotlib."""

from __future__ import annotations

from pathlib import Path


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> Path:
    path = Path(path)
    # no Software/date metadata, so reruns give identical files
    fig.savefig(path, dpi=100, metadata={"Software": None})
    _plt().close(fig)
    return path


def lpd_bands(path, dates, columns, mean, sigma) -> Path:
    """One panel per column: mean-LPD with a two-sigma band."""
    plt = _plt()
    k = len(columns)
    fig, axes = plt.subplots(k, 1, figsize=(9, 1.6 * k + 0.6), sharex=True, squeeze=False)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(dates, mean[:, i], lw=0.8, color="k")
        if sigma is not None:
            ax.fill_between(dates, mean[:, i] - 2 * sigma[:, i], mean[:, i] + 2 * sigma[:, i], color="tab:blue", alpha=0.3, lw=0)
        ax.set_ylabel(columns[i], fontsize=8)
    axes[0, 0].set_title("mean LPD with two-sigma band")
    fig.tight_layout()
    return _save(fig, path)


def tstats(path, dates, columns, tstat) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(9, 3.5))
    for i, c in enumerate(columns):
        ax.plot(dates, tstat[:, i], lw=0.7, label=c)
    ax.set_title("mean / sigma")
    ax.legend(fontsize=7, ncol=4)
    fig.tight_layout()
    return _save(fig, path)


def lines(path, dates, columns, M, title: str) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(9, 3.5))
    for i, c in enumerate(columns):
        ax.plot(dates, M[:, i], lw=0.7, label=c)
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=4)
    fig.tight_layout()
    return _save(fig, path)


def signals(path, dates, value, lower, upper, exposure) -> Path:
    plt = _plt()
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(9, 5), sharex=True, gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(dates, value, lw=0.7, color="k", label="signal input")
    ax.plot(dates, lower, lw=0.7, color="tab:red", label="lower quantile")
    ax.plot(dates, upper, lw=0.7, color="tab:green", label="upper quantile")
    ax.legend(fontsize=7)
    ax2.step(dates, exposure, where="post", lw=0.7)
    ax2.set_ylim(-0.05, 1.05)
    ax2.set_ylabel("exposure")
    fig.tight_layout()
    return _save(fig, path)


def performance(path, member_curves: dict, named: dict) -> Path:
    """Cumulative log-performance: members in colour, named curves on top."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(9, 4))
    for _, (cols, dates, _, M) in member_curves.items():
        ax.plot(dates, M[:, cols.index("cumulative")], lw=0.5, alpha=0.6)
    style = {"mean": ("k", 1.6), "benchmark": ("tab:gray", 1.2), "strategy": ("tab:red", 1.2)}
    for name, (cols, dates, _, M) in named.items():
        c, lw = style.get(name, ("tab:blue", 1.0))
        ax.plot(dates, M[:, cols.index("cumulative")], color=c, lw=lw, label=name)
    ax.axhline(0, color="k", lw=0.4)
    ax.set_title("cumulative log-performance (out-of-sample)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)

