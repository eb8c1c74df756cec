"""Matplotlib figures for protocol runs and rotations."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from coopchain.dof_engine import Purpose  # noqa: E402
from coopchain.ledger import Reason  # noqa: E402

DELIVER_COLOR = "tab:blue"
CANCEL_COLOR = "tab:orange"
COIN_COLOR = "tab:green"


def plot_protocol(res, path: Path | str, ax=None):
    """Transmitters on top, receivers below, one column per node.

    Solid lines carry a delivered message, dashed lines a zero-forcing
    copy; grey marks an idle node. Curved green arrows are coin payments.
    """
    own = ax is None
    if own:
        fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * res.K), 3.2))
    else:
        fig = ax.figure
    K = res.K
    for j in range(1, K + 1):
        on = j in res.active_transmitters
        ax.plot(j, 1, "s", ms=12, color="k" if on else "0.75", mfc="w" if not on else "k")
        rx_on = j in res.active_receivers
        ax.plot(j, 0, "o", ms=12, color="k" if rx_on else "0.75", mfc="w" if not rx_on else "k")
        ax.text(j, 1.18, f"T{j}", ha="center", fontsize=8)
        ax.text(j, -0.25, f"R{j}", ha="center", fontsize=8)
        for rx in (j, j + 1):
            if rx <= K:
                ax.plot([j, rx], [1, 0], color="0.88", lw=0.8, zorder=0)
    for o in res.outcomes:
        for a in o.transmit_actions:
            deliver = a.purpose is Purpose.DELIVER
            # a cancel copy is drawn beside the link it zero-forces
            dx = 0.0 if deliver else 0.08
            target = a.message if deliver else a.transmitter
            ax.plot([a.transmitter + dx, target + dx], [1, 0],
                    color=DELIVER_COLOR if deliver else CANCEL_COLOR,
                    ls="-" if deliver else "--", lw=2)
        for p in o.payments:
            rad = 0.4 if p.reason is Reason.INTERFERENCE else -0.4
            ax.annotate("", xy=(p.payee, 0.5), xytext=(o.node, 0.5),
                        arrowprops=dict(arrowstyle="->", color=COIN_COLOR,
                                        connectionstyle=f"arc3,rad={rad}"))
    ax.set_xlim(0.4, K + 0.6)
    ax.set_ylim(-0.45, 1.4)
    ax.axis("off")
    ax.set_title(f"K={K}: active receivers {len(res.active_receivers)}/{K}", fontsize=9)
    if own:
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return ax


def plot_rotation(rot, path: Path | str):
    """Activity grid per phase and cumulative coin balance per node."""
    K = rot.K
    grid = [[1 if i in res.active_receivers else 0 for i in range(1, K + 1)]
            for res in rot.phases]
    fig, (a0, a1) = plt.subplots(2, 1, figsize=(max(4.5, 0.45 * K), 4.5),
                                 gridspec_kw={"height_ratios": [1, 1.2]})
    a0.imshow(grid, aspect="auto", cmap="Greys", vmin=0, vmax=1.4,
              extent=(0.5, K + 0.5, len(grid) - 0.5, -0.5))
    a0.set_yticks(range(len(grid)))
    a0.set_ylabel("phase")
    a0.set_title(f"active receivers per phase, puDoF = {rot.puDoF}", fontsize=9)

    nodes = list(range(1, K + 1))
    a1.bar(nodes, [rot.balances[i] for i in nodes], color=COIN_COLOR, label="final balance")
    a1.plot(nodes, [rot.nets[i] for i in nodes], "k_", ms=12, label="net over rotation")
    a1.axhline(0, color="0.5", lw=0.6)
    a1.set_xlabel("node")
    a1.set_ylabel("coins")
    a1.legend(fontsize=7, frameon=False)
    for ax in (a0, a1):
        ax.set_xlim(0.5, K + 0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return fig
