"""Optional matplotlib figures rendered alongside the delimited reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def save_qseq_figure(path, dim, ks, qs, c_n) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ks, qs, "o-", ms=4, lw=1.2, label=r"$Q_k$")
    ax.axhline(c_n, color="crimson", lw=1.0, ls="--", label=rf"$C_{{{dim}}} = Q_2$")
    ax.set_xlabel("mode degree k")
    ax.set_ylabel(r"$Q_k$")
    ax.set_title(f"Deficit-ratio sequence, N = {dim}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_converge_figure(path, dim, rows, c0, reference, reference_label) -> str:
    """rows: iterable of (t, ratio, source)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    markers = {"analytic": "s", "quadrature+eigensolver": "o"}
    for source in sorted({r[2] for r in rows}):
        ts = [r[0] for r in rows if r[2] == source]
        ratios = [r[1] for r in rows if r[2] == source]
        ax.plot(ts, ratios, markers.get(source, "x"), ms=6, ls="none", label=source)
    if c0 is not None:
        ax.axhline(c0, color="gray", lw=1.0, ls=":", label=rf"fit $c_0$ = {c0:.6f}")
    ax.axhline(reference, color="crimson", lw=1.0, ls="--", label=reference_label)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\delta P / \delta\lambda$")
    ax.set_title(f"Deficit ratio along the family, N = {dim}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
